//! Rectangle growth sequences and good configurations.
//!
//! A growth sequence starts at the active origin and repeatedly enlarges the
//! current rectangle by at most one line on each side, keeping it free of `k`
//! consecutive empty rows or columns (empty meaning no non-empty cell inside
//! the rectangle). The span of two such enlargements that both contain the
//! active origin is again gap-free, since a run of `k` rows leaving both row
//! ranges covers the origin's row. So joining every valid enlargement gives
//! the maximal sequence without search.

use serde::Serialize;

use super::{Lattice, ModelSpec};

/// Inclusive cell rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    pub fn new(x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn cell(x: usize, y: usize) -> Self {
        Rect::new(x, y, x, y)
    }

    /// `(width, height)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.x1 - self.x0 + 1, self.y1 - self.y0 + 1)
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x0..=self.x1).contains(&x) && (self.y0..=self.y1).contains(&y)
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.x0 <= other.x0 && self.y0 <= other.y0 && other.x1 <= self.x1 && other.y1 <= self.y1
    }

    /// Smallest rectangle containing both.
    pub fn span(&self, other: &Rect) -> Rect {
        Rect::new(
            self.x0.min(other.x0),
            self.y0.min(other.y0),
            self.x1.max(other.x1),
            self.y1.max(other.y1),
        )
    }

    pub fn whole(lattice: &Lattice) -> Rect {
        Rect::new(0, 0, lattice.width() - 1, lattice.height() - 1)
    }
}

/// Prefix counts of non-empty cells along every row and column.
struct Occupancy {
    width: usize,
    height: usize,
    rows: Vec<u32>,
    cols: Vec<u32>,
}

impl Occupancy {
    fn new(l: &Lattice) -> Self {
        let (w, h) = (l.width(), l.height());
        let mut rows = vec![0u32; h * (w + 1)];
        let mut cols = vec![0u32; w * (h + 1)];
        for y in 0..h {
            for x in 0..w {
                let v = l.is_nonempty(x, y) as u32;
                rows[y * (w + 1) + x + 1] = rows[y * (w + 1) + x] + v;
                cols[x * (h + 1) + y + 1] = cols[x * (h + 1) + y] + v;
            }
        }
        Occupancy {
            width: w,
            height: h,
            rows,
            cols,
        }
    }

    fn row_empty(&self, y: usize, x0: usize, x1: usize) -> bool {
        let base = y * (self.width + 1);
        self.rows[base + x1 + 1] == self.rows[base + x0]
    }

    fn col_empty(&self, x: usize, y0: usize, y1: usize) -> bool {
        let base = x * (self.height + 1);
        self.cols[base + y1 + 1] == self.cols[base + y0]
    }

    fn gap_free(&self, r: &Rect, k: usize) -> bool {
        let mut run = 0;
        for y in r.y0..=r.y1 {
            run = if self.row_empty(y, r.x0, r.x1) { run + 1 } else { 0 };
            if run >= k {
                return false;
            }
        }
        run = 0;
        for x in r.x0..=r.x1 {
            run = if self.col_empty(x, r.y0, r.y1) { run + 1 } else { 0 };
            if run >= k {
                return false;
            }
        }
        true
    }
}

/// Maximal growth sequence of the configuration inside `window`.
///
/// Read on the initial configuration: only the empty/non-empty status of
/// cells matters. Empty when the origin is not active.
pub fn extract_growth_sequence(lattice: &Lattice, spec: &ModelSpec, window: Rect) -> Vec<Rect> {
    let (ox, oy) = lattice.origin();
    if !lattice.is_active(ox, oy) || !window.contains(ox, oy) {
        return Vec::new();
    }
    let occ = Occupancy::new(lattice);
    let k = spec.k as usize;
    let mut seq = vec![Rect::cell(ox, oy)];
    loop {
        let cur = *seq.last().expect("sequence starts at the origin");
        let mut joined = cur;
        for mask in 1u8..16 {
            let grow = |bit: u8| mask >> bit & 1 == 1;
            if (grow(0) && cur.x0 == window.x0)
                || (grow(1) && cur.x1 == window.x1)
                || (grow(2) && cur.y0 == window.y0)
                || (grow(3) && cur.y1 == window.y1)
            {
                continue;
            }
            let cand = Rect::new(
                cur.x0 - grow(0) as usize,
                cur.y0 - grow(2) as usize,
                cur.x1 + grow(1) as usize,
                cur.y1 + grow(3) as usize,
            );
            if occ.gap_free(&cand, k) {
                joined = joined.span(&cand);
            }
        }
        if joined == cur {
            return seq;
        }
        debug_assert!(occ.gap_free(&joined, k));
        seq.push(joined);
    }
}

/// The maximal growth sequence reaches the edge of `window`.
pub fn is_good_configuration(lattice: &Lattice, spec: &ModelSpec, window: Rect) -> bool {
    extract_growth_sequence(lattice, spec, window)
        .last()
        .is_some_and(|r| r.x0 == window.x0 || r.y0 == window.y0 || r.x1 == window.x1 || r.y1 == window.y1)
}
