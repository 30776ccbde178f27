//! Cell-by-cell reference implementation of the rules.

use super::{CellState, Lattice, ModelSpec, Variant};

fn active_at(l: &Lattice, x: isize, y: isize) -> bool {
    x >= 0 && y >= 0 && (x as usize) < l.width && (y as usize) < l.height && l.is_active(x as usize, y as usize)
}

fn cross_count(l: &Lattice, x: isize, y: isize, k: isize) -> usize {
    let mut n = 0;
    for v in 1..k {
        for (dx, dy) in [(v, 0), (-v, 0), (0, v), (0, -v)] {
            n += active_at(l, x + dx, y + dy) as usize;
        }
    }
    n
}

/// Whether cell `(x, y)` activates given the current state of `l`.
pub(super) fn activates(l: &Lattice, spec: &ModelSpec, x: usize, y: usize) -> bool {
    let state = l.get(x, y);
    if state == CellState::Active {
        return false;
    }
    let (x, y) = (x as isize, y as isize);
    let k = spec.k as isize;
    match (spec.variant, state) {
        (Variant::GlobalK, _) => cross_count(l, x, y, k) >= k as usize,
        (Variant::LocalK, CellState::Empty) => cross_count(l, x, y, k) >= k as usize,
        (Variant::LocalK, _) => {
            for dy in -k..=k {
                let r = k - dy.abs();
                for dx in -r..=r {
                    if active_at(l, x + dx, y + dy) {
                        return true;
                    }
                }
            }
            false
        }
        (Variant::LocalModified, CellState::Occupied) => {
            (-1..=1).any(|dy| (-1..=1).any(|dx| active_at(l, x + dx, y + dy)))
        }
        (Variant::LocalFrobose, CellState::Occupied) => {
            [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|&(dx, dy)| active_at(l, x + dx, y + dy))
        }
        (Variant::LocalModified, _) => {
            (active_at(l, x, y + 1) || active_at(l, x, y - 1)) && (active_at(l, x + 1, y) || active_at(l, x - 1, y))
        }
        (Variant::LocalFrobose, _) => [(1, 1), (1, -1), (-1, 1), (-1, -1)].iter().any(|&(dx, dy)| {
            active_at(l, x, y + dy) && active_at(l, x + dx, y) && active_at(l, x + dx, y + dy)
        }),
    }
}

/// Reference synchronous step.
pub fn naive_step(lattice: &mut Lattice, spec: &ModelSpec) -> bool {
    let mut fresh = vec![0u64; lattice.words * lattice.height];
    for y in 0..lattice.height {
        for x in 0..lattice.width {
            if activates(lattice, spec, x, y) {
                fresh[y * lattice.words + x / 64] |= 1 << (x % 64);
            }
        }
    }
    lattice.activate(&fresh)
}

pub fn naive_run_to_fixpoint(lattice: &mut Lattice, spec: &ModelSpec) -> u32 {
    let mut steps = 0;
    while naive_step(lattice, spec) {
        steps += 1;
    }
    steps
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepOrder {
    RowMajor,
    ColumnMajor,
}

/// In-place (asynchronous) sweeps in the given order until nothing changes.
///
/// Only the final state is meaningful; stamps record sweep numbers.
pub fn sweep_to_fixpoint(lattice: &mut Lattice, spec: &ModelSpec, order: SweepOrder) -> u32 {
    let (w, h) = (lattice.width, lattice.height);
    let mut sweeps = 0;
    loop {
        let mut changed = false;
        for i in 0..w * h {
            let (x, y) = match order {
                SweepOrder::RowMajor => (i % w, i / w),
                SweepOrder::ColumnMajor => (i / h, i % h),
            };
            if activates(lattice, spec, x, y) {
                lattice.generation = sweeps + 1;
                lattice.set(x, y, CellState::Active);
                changed = true;
            }
        }
        if !changed {
            lattice.generation = sweeps;
            return sweeps;
        }
        sweeps += 1;
    }
}
