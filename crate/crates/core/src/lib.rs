//! Percolation-mathematics toolkit: the `f_k`/`g_k` special functions,
//! exact and Monte Carlo k-gap probabilities, exact q-series for partitions
//! without k-sequences, the k-percolation cellular automata, and the explicit
//! growth events used to bound indefinite growth from below.

pub mod gap_process;
pub mod growth_events;
pub mod harness;
pub mod lattice;
pub mod qseries;
pub mod rng;
pub mod special_fn;
