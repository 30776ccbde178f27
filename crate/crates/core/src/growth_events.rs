//! Explicit growth events for the localized models: diagonal (`D_k`), skew
//! (`J_k`) and chained (`E_k`) events, their exact probabilities,
//! conditioned sampling and simulation checks of the growth they guarantee.
//!
//! Coordinates are `(column, row)`, 1-based, with the origin at cell `(1, 1)`
//! and the quadrant growing up and to the right. `R(a, b)` is
//! `[1, a] x [1, b]`. Column `C_i` is `{(i, y) : 1 <= y <= h_i}` and row `R_i`
//! is `{(x, i) : 1 <= x <= w_i}`. On a [`Lattice`] cell `(x, y)` sits at index
//! `(x - 1, y - 1)` and the lattice origin is `(0, 0)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::gap_process::{rho_exact, GapError, GapProcess, McEstimate};
use crate::lattice::{run_to_fixpoint, to_text, CellState, Lattice, LatticeError, ModelSpec, Variant};
use crate::rng::{derive_seed, trial_rng};
use crate::special_fn::{FkEvaluator, SpecialFnError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EventError {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("q = {0} is outside [0, 1]")]
    InvalidQ(f64),
    #[error("trials must be at least 1")]
    NoTrials,
    #[error(transparent)]
    Gap(#[from] GapError),
    #[error(transparent)]
    SpecialFn(#[from] SpecialFnError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

pub type Result<T> = std::result::Result<T, EventError>;

/// `(column, row)`, 1-based.
pub type Cell = (usize, usize);

fn column(x: usize, height: usize) -> Vec<Cell> {
    (1..=height).map(|y| (x, y)).collect()
}

fn row(y: usize, width: usize) -> Vec<Cell> {
    (1..=width).map(|x| (x, y)).collect()
}

fn check_q(q: f64) -> Result<()> {
    if (0.0..=1.0).contains(&q) {
        Ok(())
    } else {
        Err(EventError::InvalidQ(q))
    }
}

/// Stair-step columns and rows: `C_i` has height `i - k`, `R_i` width `i - k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StairGeometry {
    pub k: usize,
    pub a: usize,
    pub b: usize,
}

impl StairGeometry {
    pub fn new(k: usize, a: usize, b: usize) -> Result<Self> {
        if k == 0 || a < k || b <= a {
            return Err(EventError::Geometry(format!("stair needs b > a >= k >= 1, got k={k} a={a} b={b}")));
        }
        Ok(StairGeometry { k, a, b })
    }

    pub fn columns(&self) -> Vec<Vec<Cell>> {
        (self.a + 1..=self.b).map(|i| column(i, i - self.k)).collect()
    }

    pub fn rows(&self) -> Vec<Vec<Cell>> {
        (self.a + 1..=self.b).map(|i| row(i, i - self.k)).collect()
    }

    /// No k-gaps among the columns and, separately, among the rows.
    pub fn event(&self) -> GrowthEvent {
        GrowthEvent {
            k: self.k,
            families: vec![self.columns(), self.rows()],
            ..GrowthEvent::empty(self.k)
        }
    }

    pub fn cells(&self) -> Vec<Cell> {
        self.event().cells()
    }
}

/// Horizontally skew growth from about `R(a, a)` to `R(b, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SkewGeometry {
    pub k: usize,
    pub a: usize,
    pub b: usize,
}

impl SkewGeometry {
    pub fn new(k: usize, a: usize, b: usize) -> Result<Self> {
        if k == 0 || a < k || b < a + k + 2 {
            return Err(EventError::Geometry(format!(
                "skew event needs a >= k >= 1 and b - a >= k + 2, got k={k} a={a} b={b}"
            )));
        }
        Ok(SkewGeometry { k, a, b })
    }

    pub fn column_height(&self, i: usize) -> usize {
        if i <= self.a + self.k {
            i - self.k
        } else {
            self.a + 1
        }
    }

    pub fn row_width(&self, i: usize) -> usize {
        let (a, b, k) = (self.a, self.b, self.k);
        if i == a + 1 {
            a + 1 - k
        } else if i <= a + k + 1 {
            b - 1
        } else {
            b
        }
    }

    pub fn column(&self, i: usize) -> Vec<Cell> {
        column(i, self.column_height(i))
    }

    pub fn row(&self, i: usize) -> Vec<Cell> {
        row(i, self.row_width(i))
    }

    /// The occupied cell `(b, a + k + 1)` just past the empty rows.
    pub fn marked_cell(&self) -> Cell {
        (self.b, self.a + self.k + 1)
    }

    pub fn event(&self) -> GrowthEvent {
        let (a, b, k) = (self.a, self.b, self.k);
        GrowthEvent {
            k,
            forced: vec![self.marked_cell()],
            empty: (a + 2..=a + k + 1).flat_map(|i| self.row(i)).collect(),
            nonempty: vec![self.row(a + 1), self.column(a + 1), self.row(b), self.column(b)],
            families: vec![
                (a + 2..b).map(|i| self.column(i)).collect(),
                (a + k + 2..b).map(|i| self.row(i)).collect(),
            ],
        }
    }

    pub fn cells(&self) -> Vec<Cell> {
        self.event().cells()
    }
}

/// Parameters `k <= a_1 <= b_1 <= ... <= a_m <= b_m <= L - 1` with
/// `b_i - a_i >= k + 2`. `m = 0` is the purely diagonal chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EventChain {
    pub k: usize,
    pub l: usize,
    pub pairs: Vec<(usize, usize)>,
}

impl EventChain {
    pub fn new(k: usize, l: usize, pairs: Vec<(usize, usize)>) -> Result<Self> {
        let bad = |msg: String| Err(EventError::Geometry(msg));
        if k == 0 || l < k + 2 {
            return bad(format!("chain needs k >= 1 and L >= k + 2, got k={k} L={l}"));
        }
        let mut prev = k;
        for &(a, b) in &pairs {
            if a < prev {
                return bad(format!("a = {a} precedes {prev}"));
            }
            if b < a + k + 2 {
                return bad(format!("b - a = {} < k + 2", b as isize - a as isize));
            }
            prev = b;
        }
        if prev > l - 1 {
            return bad(format!("b_m = {prev} exceeds L - 1 = {}", l - 1));
        }
        Ok(EventChain { k, l, pairs })
    }

    /// Every valid chain with at most `max_m` skew steps.
    pub fn enumerate(k: usize, l: usize, max_m: usize) -> Vec<EventChain> {
        fn go(k: usize, l: usize, from: usize, left: usize, cur: &mut Vec<(usize, usize)>, out: &mut Vec<EventChain>) {
            out.push(EventChain {
                k,
                l,
                pairs: cur.clone(),
            });
            if left == 0 {
                return;
            }
            for a in from..l {
                for b in a + k + 2..l {
                    cur.push((a, b));
                    go(k, l, b, left - 1, cur, out);
                    cur.pop();
                }
            }
        }
        let mut out = Vec::new();
        if k >= 1 && l >= k + 2 {
            go(k, l, k, max_m, &mut Vec::new(), &mut out);
        }
        out
    }

    /// The intersection of all stair, skew and seed conditions.
    pub fn event(&self) -> GrowthEvent {
        let (k, l) = (self.k, self.l);
        let mut ev = GrowthEvent::empty(k);
        let add_stair = |ev: &mut GrowthEvent, a: usize, b: usize| {
            if b > a {
                let g = StairGeometry { k, a, b };
                ev.families.push(g.columns());
                ev.families.push(g.rows());
            }
        };
        let mut prev = k;
        for &(a, b) in &self.pairs {
            add_stair(&mut ev, prev, a);
            let skew = SkewGeometry { k, a, b }.event();
            ev.forced.extend(skew.forced);
            ev.empty.extend(skew.empty);
            ev.nonempty.extend(skew.nonempty);
            ev.families.extend(skew.families);
            prev = b;
        }
        add_stair(&mut ev, prev, l - 1);
        for y in 1..=k {
            for x in 1..=k {
                ev.forced.push((x, y));
            }
        }
        ev.forced.push((1, l - 1));
        ev.forced.push((l - 1, 1));
        ev
    }
}

/// An event given by independent conditions on explicit cell sets: forced
/// non-empty cells, empty cells, non-empty lines and line families without
/// k consecutive empty lines.
///
/// Lines, families and empty cells use pairwise disjoint cells. A forced cell
/// may lie on a line, which then holds automatically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthEvent {
    pub k: usize,
    pub forced: Vec<Cell>,
    pub empty: Vec<Cell>,
    pub nonempty: Vec<Vec<Cell>>,
    pub families: Vec<Vec<Vec<Cell>>>,
}

impl GrowthEvent {
    fn empty(k: usize) -> Self {
        GrowthEvent {
            k,
            forced: Vec::new(),
            empty: Vec::new(),
            nonempty: Vec::new(),
            families: Vec::new(),
        }
    }

    fn lines(&self) -> impl Iterator<Item = &Vec<Cell>> {
        self.nonempty.iter().chain(self.families.iter().flatten())
    }

    /// Sorted union of every constrained cell.
    pub fn cells(&self) -> Vec<Cell> {
        let mut v: Vec<Cell> = self
            .forced
            .iter()
            .chain(self.empty.iter())
            .chain(self.lines().flatten())
            .copied()
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Largest column and row used.
    pub fn extent(&self) -> (usize, usize) {
        self.cells().iter().fold((0, 0), |(w, h), &(x, y)| (w.max(x), h.max(y)))
    }

    /// Checks the disjointness the product formula relies on.
    pub fn check_disjoint(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for &c in self.empty.iter().chain(self.lines().flatten()) {
            if !seen.insert(c) {
                return Err(EventError::Geometry(format!("cell {c:?} is constrained twice")));
            }
        }
        if let Some(c) = self.forced.iter().find(|c| self.empty.contains(c)) {
            return Err(EventError::Geometry(format!("cell {c:?} is both forced and empty")));
        }
        Ok(())
    }

    fn has_forced(&self, line: &[Cell]) -> bool {
        line.iter().any(|c| self.forced.contains(c))
    }

    /// `P(line non-empty)`, one when a forced cell lies on it.
    fn line_prob(&self, line: &[Cell], q: f64) -> f64 {
        if self.has_forced(line) {
            1.0
        } else {
            1.0 - q.powi(line.len() as i32)
        }
    }

    pub fn log_probability(&self, q: f64) -> Result<f64> {
        check_q(q)?;
        self.check_disjoint()?;
        let mut forced = self.forced.clone();
        forced.sort_unstable();
        forced.dedup();
        // n ln p with 0 ln 0 = 0
        let xlog = |n: usize, p: f64| if n == 0 { 0.0 } else { n as f64 * p.ln() };
        let mut total = xlog(forced.len(), 1.0 - q) + xlog(self.empty.len(), q);
        for line in &self.nonempty {
            total += self.line_prob(line, q).ln();
        }
        for family in &self.families {
            if family.is_empty() {
                continue;
            }
            let u: Vec<f64> = family.iter().map(|line| self.line_prob(line, q)).collect();
            let n = u.len();
            total += rho_exact(&GapProcess::explicit(self.k as u32, u)?, n)?.last_log();
        }
        Ok(total)
    }

    pub fn probability(&self, q: f64) -> Result<f64> {
        Ok(self.log_probability(q)?.exp())
    }

    /// Whether the initial configuration `l` satisfies every condition.
    pub fn holds(&self, l: &Lattice) -> bool {
        let nonempty = |&(x, y): &Cell| x >= 1 && y >= 1 && x <= l.width() && y <= l.height() && l.is_nonempty(x - 1, y - 1);
        let k = self.k;
        self.forced.iter().all(nonempty)
            && !self.empty.iter().any(nonempty)
            && self.nonempty.iter().all(|line| line.iter().any(nonempty))
            && self.families.iter().all(|family| {
                let mut run = 0;
                family.iter().all(|line| {
                    run = if line.iter().any(nonempty) { 0 } else { run + 1 };
                    run < k
                })
            })
    }

    /// Overwrites the constrained cells of `l` with a draw from their law
    /// conditioned on the event. Needs `q < 1`.
    pub fn sample_into(&self, l: &mut Lattice, q: f64, rng: &mut ChaCha8Rng) {
        let put = |l: &mut Lattice, (x, y): Cell, filled: bool| {
            let state = match (filled, (x, y) == (1, 1)) {
                (false, _) => CellState::Empty,
                (true, true) => CellState::Active,
                (true, false) => CellState::Occupied,
            };
            l.set(x - 1, y - 1, state);
        };
        let unconditional = |l: &mut Lattice, line: &[Cell], rng: &mut ChaCha8Rng| {
            for &c in line {
                put(l, c, rng.gen::<f64>() >= q);
            }
        };
        // rejection on the free cells of one line
        let nonempty_line = |l: &mut Lattice, line: &[Cell], rng: &mut ChaCha8Rng| {
            if self.has_forced(line) {
                unconditional(l, line, rng);
                return;
            }
            loop {
                let draw: Vec<bool> = line.iter().map(|_| rng.gen::<f64>() >= q).collect();
                if draw.iter().any(|&f| f) {
                    for (&c, &f) in line.iter().zip(&draw) {
                        put(l, c, f);
                    }
                    return;
                }
            }
        };
        for line in &self.nonempty {
            nonempty_line(l, line, rng);
        }
        for family in &self.families {
            let u: Vec<f64> = family.iter().map(|line| self.line_prob(line, q)).collect();
            for (line, occurs) in family.iter().zip(sample_gap_free(&u, self.k, rng)) {
                if occurs {
                    nonempty_line(l, line, rng);
                } else {
                    for &c in line {
                        put(l, c, false);
                    }
                }
            }
        }
        for &c in &self.empty {
            put(l, c, false);
        }
        for &c in &self.forced {
            put(l, c, true);
        }
    }

    /// Direct Monte Carlo of the event: every cell sampled independently.
    pub fn montecarlo(&self, q: f64, trials: u64, seed: u64) -> Result<McEstimate> {
        check_q(q)?;
        if trials == 0 {
            return Err(EventError::NoTrials);
        }
        let (w, h) = self.extent();
        let successes = (0..trials)
            .into_par_iter()
            .filter(|&t| {
                let mut rng = trial_rng(seed, t);
                let l = background(w.max(1), h.max(1), q, &mut rng);
                self.holds(&l)
            })
            .count() as u64;
        Ok(McEstimate::from_counts(successes, trials))
    }
}

/// Occurrence pattern of independent events with probabilities `u`
/// conditioned on having no `k` consecutive misses.
///
/// Backward pass for the conditional weights; each row is normalised on its
/// own since only ratios within a row are used.
fn sample_gap_free(u: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Vec<bool> {
    let n = u.len();
    // w[i][r]: P(events i.. avoid a k-gap | r misses just before i), scaled
    let mut w = vec![vec![1.0; k]; n + 1];
    for i in (0..n).rev() {
        let mut next = vec![0.0; k];
        for (r, slot) in next.iter_mut().enumerate() {
            let miss = if r + 1 < k { w[i + 1][r + 1] } else { 0.0 };
            *slot = u[i] * w[i + 1][0] + (1.0 - u[i]) * miss;
        }
        let scale = next.iter().cloned().fold(0.0, f64::max);
        if scale > 0.0 {
            next.iter_mut().for_each(|v| *v /= scale);
        }
        w[i] = next;
    }
    let mut out = Vec::with_capacity(n);
    let mut run = 0;
    for i in 0..n {
        let hit = u[i] * w[i + 1][0];
        let miss = if run + 1 < k { (1.0 - u[i]) * w[i + 1][run + 1] } else { 0.0 };
        let occurs = rng.gen::<f64>() * (hit + miss) < hit;
        run = if occurs { 0 } else { run + 1 };
        out.push(occurs);
    }
    out
}

/// Localized `w x h` configuration with every cell sampled unconditionally.
fn background(w: usize, h: usize, q: f64, rng: &mut ChaCha8Rng) -> Lattice {
    let mut l = Lattice::with_origin(w, h, (0, 0)).expect("positive dimensions");
    for y in 0..h {
        for x in 0..w {
            if rng.gen::<f64>() >= q {
                let state = if (x, y) == (0, 0) {
                    CellState::Active
                } else {
                    CellState::Occupied
                };
                l.set(x, y, state);
            }
        }
    }
    l
}

pub fn prob_dk(geometry: &StairGeometry, q: f64) -> Result<f64> {
    geometry.event().probability(q)
}

pub fn prob_jk(geometry: &SkewGeometry, q: f64) -> Result<f64> {
    geometry.event().probability(q)
}

pub fn prob_ek(chain: &EventChain, q: f64) -> Result<f64> {
    chain.event().probability(q)
}

fn s_of(q: f64) -> Result<f64> {
    if q > 0.0 && q < 1.0 {
        Ok(-q.ln())
    } else {
        Err(EventError::InvalidQ(q))
    }
}

/// `exp(-2 sum_{i=a-k+1}^{b-k} g_k(i s))`, `q = e^{-s}`.
pub fn dk_lower_bound(geometry: &StairGeometry, q: f64) -> Result<f64> {
    let s = s_of(q)?;
    let ev = FkEvaluator::new(geometry.k as u32)?;
    let mut sum = 0.0;
    for i in geometry.a + 1 - geometry.k..=geometry.b - geometry.k {
        sum += ev.gk(i as f64 * s)?;
    }
    Ok((-2.0 * sum).exp())
}

/// Product lower bound on `P(J_k(a, b))` from the independent factors, with
/// every gap family replaced by its f_k product.
pub fn jk_product_bound(geometry: &SkewGeometry, q: f64) -> Result<f64> {
    let s = s_of(q)?;
    let (k, a, b) = (geometry.k, geometry.a, geometry.b);
    let ev = FkEvaluator::new(k as u32)?;
    let p = |e: usize| q.powi(e as i32);
    let mut log = (k * (b - 1)) as f64 * q.ln()
        + (-q).ln_1p()
        + 2.0 * (-p(a + 1 - k)).ln_1p()
        + (-p(a + 1)).ln_1p()
        + (-p(b)).ln_1p();
    for i in a + 2 - k..=a {
        log -= ev.gk(i as f64 * s)?;
    }
    log -= (b - a - k - 1) as f64 * ev.gk((a + 1) as f64 * s)?;
    log -= (b - a - k - 2) as f64 * ev.gk(b as f64 * s)?;
    Ok(log.exp())
}

/// A localized `L x L` configuration drawn from the law conditioned on the
/// chain's event; cells outside the event are unconditional.
pub fn sample_conditioned(chain: &EventChain, q: f64, seed: u64) -> Result<Lattice> {
    sample_conditioned_trial(chain, q, seed, 0)
}

pub fn sample_conditioned_trial(chain: &EventChain, q: f64, seed: u64, trial: u64) -> Result<Lattice> {
    check_q(q)?;
    let ev = chain.event();
    ev.check_disjoint()?;
    if q >= 1.0 {
        return Err(EventError::InvalidQ(q));
    }
    let mut rng = trial_rng(seed, trial);
    let mut l = background(chain.l, chain.l, q, &mut rng);
    ev.sample_into(&mut l, q, &mut rng);
    Ok(l)
}

/// Local rule sets covered by the constructions for a given k.
pub fn models_for(k: usize) -> Vec<Variant> {
    if k == 1 {
        vec![Variant::LocalModified, Variant::LocalFrobose]
    } else {
        vec![Variant::LocalK]
    }
}

/// State of the cells outside an event when checking a guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Background {
    /// Sampled independently at the same q.
    Unconditional,
    /// All empty, the least favourable choice.
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GrowthCase {
    /// `R(a, a)` active and `D_k(a, b)`: some `R(b - s, b - t)`, `s, t < k`.
    Diagonal { a: usize, b: usize },
    /// Some `R(a - s, a - t)` active, `s, t <= min(k - 1, a - k)`, and
    /// `J_k(a, b)`: `R(b, b)`.
    Skew { a: usize, b: usize },
    /// `E_k` from the origin alone: `R(L - 1, L - 1)`.
    Chain { l: usize, pairs: Vec<(usize, usize)> },
}

impl GrowthCase {
    fn label(&self) -> String {
        match self {
            GrowthCase::Diagonal { a, b } => format!("D(a={a},b={b})"),
            GrowthCase::Skew { a, b } => format!("J(a={a},b={b})"),
            GrowthCase::Chain { l, pairs } => format!("E(L={l},pairs={pairs:?})"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseReport {
    pub case: String,
    pub model: Variant,
    pub q: f64,
    pub background: Background,
    pub trials: u64,
    pub violations: u64,
    /// Initial configurations of the first few violations, text format.
    pub counterexamples: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub k: usize,
    pub seed: u64,
    pub trials_per_point: u64,
    pub violations: u64,
    pub cases: Vec<CaseReport>,
}

const MAX_COUNTEREXAMPLES: usize = 3;

fn fill_rect(l: &mut Lattice, w: usize, h: usize) {
    for y in 0..h {
        for x in 0..w {
            l.set(x, y, CellState::Active);
        }
    }
}

fn rect_active(l: &Lattice, w: usize, h: usize) -> bool {
    (0..h).all(|y| (0..w).all(|x| l.is_active(x, y)))
}

/// Runs one trial; returns the initial configuration on a violation.
fn growth_trial(
    k: usize,
    case: &GrowthCase,
    spec: &ModelSpec,
    background_kind: Background,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Lattice>> {
    let q = spec.q;
    let (event, size) = match case {
        GrowthCase::Diagonal { a, b } => (StairGeometry::new(k, *a, *b)?.event(), b + k + 1),
        GrowthCase::Skew { a, b } => (SkewGeometry::new(k, *a, *b)?.event(), b + k + 1),
        GrowthCase::Chain { l, pairs } => (EventChain::new(k, *l, pairs.clone())?.event(), *l),
    };
    let mut l = match background_kind {
        Background::Unconditional => background(size, size, q, rng),
        Background::Empty => Lattice::with_origin(size, size, (0, 0))?,
    };
    event.sample_into(&mut l, q, rng);
    let target = match case {
        GrowthCase::Diagonal { a, b } => {
            fill_rect(&mut l, *a, *a);
            (b + 1 - k, b + 1 - k)
        }
        GrowthCase::Skew { a, b } => {
            // lags a chain can produce: the rectangle still contains R(k, k)
            let max_lag = (k - 1).min(a - k);
            let s = rng.gen_range(0..=max_lag);
            let t = rng.gen_range(0..=max_lag);
            fill_rect(&mut l, a - s, a - t);
            (*b, *b)
        }
        GrowthCase::Chain { l: size, .. } => (size - 1, size - 1),
    };
    let init = l.clone();
    run_to_fixpoint(&mut l, spec, u32::MAX);
    Ok((!rect_active(&l, target.0, target.1)).then_some(init))
}

/// Simulates `trials` conditioned configurations of one case and counts
/// those where the guaranteed rectangle fails to become active.
pub fn verify_case(
    k: usize,
    case: &GrowthCase,
    variant: Variant,
    q: f64,
    background_kind: Background,
    trials: u64,
    seed: u64,
) -> Result<CaseReport> {
    if trials == 0 {
        return Err(EventError::NoTrials);
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(EventError::InvalidQ(q));
    }
    let spec = ModelSpec::new(variant, k as u32, q)?;
    let failures: Vec<(u64, Lattice)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            growth_trial(k, case, &spec, background_kind, &mut rng).map(|bad| bad.map(|l| (t, l)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(CaseReport {
        case: case.label(),
        model: variant,
        q,
        background: background_kind,
        trials,
        violations: failures.len() as u64,
        counterexamples: failures.iter().take(MAX_COUNTEREXAMPLES).map(|(_, l)| to_text(l)).collect(),
    })
}

/// The fixed set of geometries checked for each k.
pub fn documented_cases(k: usize) -> Vec<GrowthCase> {
    let l = 4 * k + 12;
    vec![
        GrowthCase::Diagonal { a: k, b: k + 1 },
        GrowthCase::Diagonal { a: k + 2, b: k + 9 },
        GrowthCase::Diagonal {
            a: k.max(4),
            b: (k + 5).max(9),
        },
        GrowthCase::Skew { a: k, b: 2 * k + 2 },
        GrowthCase::Skew { a: 6.max(k), b: 12.max(2 * k + 2) },
        GrowthCase::Skew {
            a: k + 5,
            b: 2 * k + 12,
        },
        GrowthCase::Chain { l, pairs: vec![] },
        GrowthCase::Chain {
            l,
            pairs: vec![(k, 2 * k + 2)],
        },
        GrowthCase::Chain {
            l,
            pairs: vec![(k + 1, 2 * k + 4), (2 * k + 4, 3 * k + 6)],
        },
        GrowthCase::Chain {
            l,
            pairs: vec![(k + 2, 2 * k + 5), (2 * k + 7, 4 * k + 11)],
        },
    ]
}

pub const DOCUMENTED_Q: [f64; 2] = [0.3, 0.7];

/// Every documented case for every local rule set of this k, at both
/// documented q values and both backgrounds, `trials` each.
pub fn verify_growth_guarantee(k: usize, trials: u64, seed: u64) -> Result<GrowthReport> {
    if k == 0 {
        return Err(EventError::Geometry("k must be at least 1".into()));
    }
    let mut cases = Vec::new();
    let mut point = 0u64;
    for case in documented_cases(k) {
        for variant in models_for(k) {
            for q in DOCUMENTED_Q {
                for bg in [Background::Unconditional, Background::Empty] {
                    cases.push(verify_case(k, &case, variant, q, bg, trials, derive_seed(seed, point))?);
                    point += 1;
                }
            }
        }
    }
    Ok(GrowthReport {
        k,
        seed,
        trials_per_point: trials,
        violations: cases.iter().map(|c| c.violations).sum(),
        cases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn gap_free_sampler_never_leaves_k_misses() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = vec![0.1; 40];
        for k in 1..4 {
            for _ in 0..200 {
                let v = sample_gap_free(&u, k, &mut rng);
                let mut run = 0;
                for o in v {
                    run = if o { 0 } else { run + 1 };
                    assert!(run < k);
                }
            }
        }
    }

    #[test]
    fn chain_validation() {
        assert!(EventChain::new(2, 12, vec![(2, 6), (6, 10)]).is_ok());
        assert!(EventChain::new(2, 12, vec![(2, 5)]).is_err());
        assert!(EventChain::new(2, 12, vec![(3, 12)]).is_err());
        assert!(EventChain::new(2, 12, vec![(1, 6)]).is_err());
        assert!(EventChain::new(2, 12, vec![(2, 7), (6, 10)]).is_err());
        for c in EventChain::enumerate(2, 12, 2) {
            assert!(EventChain::new(c.k, c.l, c.pairs.clone()).is_ok());
            c.event().check_disjoint().unwrap();
        }
    }
}
