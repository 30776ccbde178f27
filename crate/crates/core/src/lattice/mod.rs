//! k-percolation cellular automata on a finite window of Z².
//!
//! Cells are `Active`, `Occupied` or `Empty`. The global model uses only
//! `Active`/`Empty`; the localized models start with the origin as the only
//! possible `Active` cell. Cells outside the window are permanently empty.
//!
//! Coordinates are `(x, y)` with `x` the column and `y` the row, `y` growing
//! upward. State is kept in two packed bitplanes (active, occupied), one bit
//! per cell each, 64 cells per word along a row.

mod growth;
mod naive;
mod packed;
mod snapshot;

pub use growth::{extract_growth_sequence, is_good_configuration, Rect};
pub use naive::{naive_run_to_fixpoint, naive_step, sweep_to_fixpoint, SweepOrder};
pub use snapshot::{from_binary, from_text, to_binary, to_text, SnapshotError};

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gap_process::McEstimate;
use crate::rng::trial_rng;
use crate::special_fn::{FkEvaluator, SpecialFnError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("{variant} requires k {requirement}, got {k}")]
    InvalidK {
        variant: Variant,
        k: u32,
        requirement: &'static str,
    },
    #[error("q = {0} is outside [0, 1]")]
    InvalidQ(f64),
    #[error("lattice dimensions must be positive, got {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },
    #[error("origin ({x}, {y}) is outside the window")]
    OriginOutside { x: usize, y: usize },
    #[error("the global model has no localized version")]
    LocalizedGlobal,
    #[error("occupied cells are not allowed in the global model")]
    OccupiedInGlobal,
    #[error("unknown model variant {0:?}")]
    UnknownVariant(String),
}

pub type Result<T> = std::result::Result<T, LatticeError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellState {
    Empty,
    Occupied,
    Active,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Threshold rule on the (k-1)-cross for every inactive cell.
    #[serde(rename = "global")]
    GlobalK,
    /// Three-state local rule, k >= 2.
    #[serde(rename = "local")]
    LocalK,
    /// k = 1, occupied cells see the l-infinity unit ball.
    #[serde(rename = "modified")]
    LocalModified,
    /// k = 1, empty cells also need the corner cell.
    #[serde(rename = "frobose")]
    LocalFrobose,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::GlobalK => "global",
            Variant::LocalK => "local",
            Variant::LocalModified => "modified",
            Variant::LocalFrobose => "frobose",
        }
    }

    pub fn is_local(self) -> bool {
        self != Variant::GlobalK
    }

    pub const ALL: [Variant; 4] = [
        Variant::GlobalK,
        Variant::LocalK,
        Variant::LocalModified,
        Variant::LocalFrobose,
    ];
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = LatticeError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "global" | "globalk" => Ok(Variant::GlobalK),
            "local" | "localk" => Ok(Variant::LocalK),
            "modified" | "localmodified" => Ok(Variant::LocalModified),
            "frobose" | "froebose" | "localfrobose" => Ok(Variant::LocalFrobose),
            _ => Err(LatticeError::UnknownVariant(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: Variant,
    pub k: u32,
    /// Probability that a cell starts empty.
    pub q: f64,
}

impl ModelSpec {
    pub fn new(variant: Variant, k: u32, q: f64) -> Result<Self> {
        let spec = ModelSpec { variant, k, q };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let (ok, requirement) = match self.variant {
            Variant::GlobalK | Variant::LocalK => (self.k >= 2, ">= 2"),
            Variant::LocalModified | Variant::LocalFrobose => (self.k == 1, "= 1"),
        };
        if !ok {
            return Err(LatticeError::InvalidK {
                variant: self.variant,
                k: self.k,
                requirement,
            });
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(LatticeError::InvalidQ(self.q));
        }
        Ok(())
    }

    /// `l-infinity` radius that contains every cell the rules read.
    pub fn radius(&self) -> usize {
        match self.variant {
            Variant::GlobalK => self.k as usize - 1,
            Variant::LocalK => self.k as usize,
            Variant::LocalModified | Variant::LocalFrobose => 1,
        }
    }
}

/// Generation stamp of a cell that has never been active.
pub const NEVER: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    width: usize,
    height: usize,
    words: usize,
    origin: (usize, usize),
    active: Vec<u64>,
    occupied: Vec<u64>,
    generation: u32,
    stamps: Vec<u32>,
}

impl Lattice {
    /// All-empty window with the origin at its center.
    pub fn new(width: usize, height: usize) -> Result<Self> {
        Self::with_origin(width, height, (width / 2, height / 2))
    }

    pub fn with_origin(width: usize, height: usize, origin: (usize, usize)) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(LatticeError::InvalidDimensions { width, height });
        }
        if origin.0 >= width || origin.1 >= height {
            return Err(LatticeError::OriginOutside {
                x: origin.0,
                y: origin.1,
            });
        }
        let words = width.div_ceil(64);
        Ok(Lattice {
            width,
            height,
            words,
            origin,
            active: vec![0; words * height],
            occupied: vec![0; words * height],
            generation: 0,
            stamps: vec![NEVER; width * height],
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn origin(&self) -> (usize, usize) {
        self.origin
    }

    /// Number of productive steps applied so far.
    pub fn generation(&self) -> u32 {
        self.generation
    }

    pub fn get(&self, x: usize, y: usize) -> CellState {
        let (w, b) = (y * self.words + x / 64, x % 64);
        if self.active[w] >> b & 1 == 1 {
            CellState::Active
        } else if self.occupied[w] >> b & 1 == 1 {
            CellState::Occupied
        } else {
            CellState::Empty
        }
    }

    /// Sets a cell; an `Active` cell set this way is stamped with the current
    /// generation.
    pub fn set(&mut self, x: usize, y: usize, state: CellState) {
        let (w, bit) = (y * self.words + x / 64, 1u64 << (x % 64));
        self.active[w] &= !bit;
        self.occupied[w] &= !bit;
        self.stamps[y * self.width + x] = NEVER;
        match state {
            CellState::Empty => {}
            CellState::Occupied => self.occupied[w] |= bit,
            CellState::Active => {
                self.active[w] |= bit;
                self.stamps[y * self.width + x] = self.generation;
            }
        }
    }

    pub fn is_active(&self, x: usize, y: usize) -> bool {
        self.active[y * self.words + x / 64] >> (x % 64) & 1 == 1
    }

    /// Non-empty means `Active` or `Occupied`.
    pub fn is_nonempty(&self, x: usize, y: usize) -> bool {
        let w = y * self.words + x / 64;
        (self.active[w] | self.occupied[w]) >> (x % 64) & 1 == 1
    }

    /// Generation at which the cell became active, [`NEVER`] if it is not.
    pub fn stamp(&self, x: usize, y: usize) -> u32 {
        self.stamps[y * self.width + x]
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Active bitplane, row-major, `words_per_row` words per row.
    pub fn active_words(&self) -> &[u64] {
        &self.active
    }

    pub fn words_per_row(&self) -> usize {
        self.words
    }

    pub fn validate_for(&self, spec: &ModelSpec) -> Result<()> {
        spec.validate()?;
        if spec.variant == Variant::GlobalK && self.occupied.iter().any(|&w| w != 0) {
            return Err(LatticeError::OccupiedInGlobal);
        }
        Ok(())
    }

    fn tail_mask(&self) -> u64 {
        match self.width % 64 {
            0 => u64::MAX,
            r => (1u64 << r) - 1,
        }
    }

    /// Applies a set of newly active cells.
    fn activate(&mut self, fresh: &[u64]) -> bool {
        if fresh.iter().all(|&w| w == 0) {
            return false;
        }
        self.generation += 1;
        for (i, &w) in fresh.iter().enumerate() {
            if w == 0 {
                continue;
            }
            self.active[i] |= w;
            self.occupied[i] &= !w;
            let y = i / self.words;
            let base = (i % self.words) * 64;
            let mut bits = w;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                self.stamps[y * self.width + base + b] = self.generation;
                bits &= bits - 1;
            }
        }
        true
    }
}

/// Samples an initial configuration with the origin at the window center.
pub fn sample_initial(spec: &ModelSpec, width: usize, height: usize, seed: u64, localized: bool) -> Result<Lattice> {
    sample_initial_at(spec, width, height, (width / 2, height / 2), seed, 0, localized)
}

/// Samples an initial configuration from stream `stream` of `seed`.
///
/// One uniform is drawn per cell in row-major order and compared with `q`,
/// so equal `(seed, stream)` couple configurations monotonically in `q`.
pub fn sample_initial_at(
    spec: &ModelSpec,
    width: usize,
    height: usize,
    origin: (usize, usize),
    seed: u64,
    stream: u64,
    localized: bool,
) -> Result<Lattice> {
    spec.validate()?;
    if localized && spec.variant == Variant::GlobalK {
        return Err(LatticeError::LocalizedGlobal);
    }
    let mut lattice = Lattice::with_origin(width, height, origin)?;
    let mut rng = trial_rng(seed, stream);
    for y in 0..height {
        for x in 0..width {
            let filled = rng.gen::<f64>() >= spec.q;
            if !filled {
                continue;
            }
            let state = if !localized || (x, y) == origin {
                CellState::Active
            } else {
                CellState::Occupied
            };
            lattice.set(x, y, state);
        }
    }
    Ok(lattice)
}

/// One synchronous generation; returns whether any cell activated.
pub fn step(lattice: &mut Lattice, spec: &ModelSpec) -> bool {
    let fresh = packed::new_activations(lattice, spec);
    lattice.activate(&fresh)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Fixpoint {
    /// Productive steps taken by this call.
    pub steps: u32,
    pub converged: bool,
}

/// Steps until nothing changes or `max_steps` productive steps were taken.
pub fn run_to_fixpoint(lattice: &mut Lattice, spec: &ModelSpec, max_steps: u32) -> Fixpoint {
    let mut steps = 0;
    loop {
        if steps == max_steps {
            // converged only if one more step would change nothing
            let fresh = packed::new_activations(lattice, spec);
            return Fixpoint {
                steps,
                converged: fresh.iter().all(|&w| w == 0),
            };
        }
        if !step(lattice, spec) {
            return Fixpoint { steps, converged: true };
        }
        steps += 1;
    }
}

/// Every cell is active.
pub fn spans(lattice: &Lattice) -> bool {
    lattice.active_count() == lattice.width * lattice.height
}

/// The growth descending from the origin touches the window boundary.
///
/// Starting at the active origin, a cell is reached if it lies within the
/// rule radius of a reached cell and activated strictly later. In localized
/// models every activation descends from the origin, so this is the same as
/// asking for any active boundary cell.
pub fn reaches_boundary(lattice: &Lattice, spec: &ModelSpec) -> bool {
    let (ox, oy) = lattice.origin;
    if !lattice.is_active(ox, oy) {
        return false;
    }
    let (w, h) = (lattice.width, lattice.height);
    let on_edge = |x: usize, y: usize| x == 0 || y == 0 || x + 1 == w || y + 1 == h;
    let r = spec.radius().max(1) as isize;
    let mut seen = vec![false; w * h];
    let mut queue = VecDeque::from([(ox, oy)]);
    seen[oy * w + ox] = true;
    while let Some((x, y)) = queue.pop_front() {
        if on_edge(x, y) {
            return true;
        }
        let t = lattice.stamp(x, y);
        for dy in -r..=r {
            for dx in -r..=r {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let (nx, ny) = (nx as usize, ny as usize);
                let s = lattice.stamp(nx, ny);
                if !seen[ny * w + nx] && s != NEVER && s > t {
                    seen[ny * w + nx] = true;
                    queue.push_back((nx, ny));
                }
            }
        }
    }
    false
}

/// `P(R(a, b) has no k-gaps in its columns or rows)` by direct sampling of
/// the `a x b` cells, each empty with probability `q`.
pub fn rectangle_gap_free_mc(k: u32, a: usize, b: usize, q: f64, trials: u64, seed: u64) -> McEstimate {
    let k = k as usize;
    let successes = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = trial_rng(seed, t);
            let filled: Vec<bool> = (0..a * b).map(|_| rng.gen::<f64>() >= q).collect();
            let gap_free = |lines: usize, len: usize, at: &dyn Fn(usize, usize) -> bool| {
                let mut run = 0;
                for i in 0..lines {
                    run = if (0..len).any(|j| at(i, j)) { 0 } else { run + 1 };
                    if run >= k {
                        return false;
                    }
                }
                true
            };
            gap_free(a, b, &|x, y| filled[y * a + x]) && gap_free(b, a, &|y, x| filled[y * a + x])
        })
        .count() as u64;
    McEstimate::from_counts(successes, trials)
}

/// `exp(-(min - (k - 1)) g_k(max s))` with `q = e^{-s}`, capped at 1.
pub fn rectangle_gap_bound(k: u32, a: usize, b: usize, q: f64) -> std::result::Result<f64, SpecialFnError> {
    let (short, long) = (a.min(b) as f64, a.max(b) as f64);
    let lines = short - (k as f64 - 1.0);
    if lines <= 0.0 || q <= 0.0 {
        return Ok(1.0);
    }
    if q >= 1.0 {
        return Ok(0.0);
    }
    let s = -q.ln();
    let g = FkEvaluator::new(k)?.gk(long * s)?;
    Ok((-lines * g).exp().min(1.0))
}
