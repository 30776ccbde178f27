//! Probability that a sequence of independent events has no k-gap, i.e. no
//! run of `k` consecutive events none of which occur.
//!
//! With `u_i` the probability of event `i` and `rho_m` the probability that
//! events `1..=m` contain no k-gap,
//!
//! ```text
//! rho_m = sum_{i=1..k} rho_{m-i} u_{m-i+1} prod_{j=m-i+2..m} (1 - u_j),   m >= k
//! ```
//!
//! with `rho_0 = ... = rho_{k-1} = 1` (condition on the last event that
//! occurred). For increasing `u` the exact value is squeezed between products
//! of `f_k(1 - u_i)`, see [`rho_sandwich`].

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::rng::trial_rng;
use crate::special_fn::{lambda_k, FkEvaluator, SpecialFnError};

/// Upper limit on the recurrence length used by [`prob_ak`].
pub const MAX_PAK_TERMS: usize = 50_000_000;

/// Constant `C` in the tail bound `g_k(z) <= C e^{-kz}`, `z >= 1`.
pub const TAIL_CONSTANT: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GapError {
    #[error("k must be at least 1")]
    InvalidK,
    #[error("u_{index} = {value} is not a probability")]
    InvalidProbability { index: usize, value: f64 },
    #[error("{name} = {value} is invalid")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("need {needed} probabilities, have {available}")]
    InsufficientProbabilities { needed: usize, available: usize },
    #[error("{bound} bound is invalid for a {monotonicity:?} sequence")]
    BoundInvalidated { bound: Bound, monotonicity: Monotonicity },
    #[error("tolerance {tol:e} needs more than {max_terms} terms")]
    ToleranceUnachievable { tol: f64, max_terms: usize },
    #[error("tail bound g_k(z) <= {TAIL_CONSTANT} e^(-kz) fails for k = {k} at z = {z}")]
    TailBoundViolated { k: u32, z: f64 },
    #[error(transparent)]
    SpecialFn(#[from] SpecialFnError),
}

pub type Result<T> = std::result::Result<T, GapError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Bound {
    Lower,
    Upper,
    Both,
}

impl std::fmt::Display for Bound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Bound::Lower => "lower",
            Bound::Upper => "upper",
            Bound::Both => "lower and upper",
        })
    }
}

/// Ties count as monotone; a constant sequence is both increasing and
/// decreasing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Monotonicity {
    Constant,
    Increasing,
    Decreasing,
    Neither,
}

impl Monotonicity {
    pub fn of(u: &[f64]) -> Self {
        let up = u.windows(2).all(|w| w[0] <= w[1]);
        let down = u.windows(2).all(|w| w[0] >= w[1]);
        match (up, down) {
            (true, true) => Monotonicity::Constant,
            (true, false) => Monotonicity::Increasing,
            (false, true) => Monotonicity::Decreasing,
            (false, false) => Monotonicity::Neither,
        }
    }

    pub fn is_increasing(self) -> bool {
        matches!(self, Monotonicity::Constant | Monotonicity::Increasing)
    }

    pub fn is_decreasing(self) -> bool {
        matches!(self, Monotonicity::Constant | Monotonicity::Decreasing)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Probabilities {
    Explicit(Vec<f64>),
    /// `u_i = 1 - e^{-is}`.
    Parametric { s: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapProcess {
    k: u32,
    probabilities: Probabilities,
    monotonicity: Monotonicity,
}

impl GapProcess {
    pub fn explicit(k: u32, u: Vec<f64>) -> Result<Self> {
        if k == 0 {
            return Err(GapError::InvalidK);
        }
        if let Some((i, &v)) = u.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(GapError::InvalidProbability { index: i + 1, value: v });
        }
        let monotonicity = Monotonicity::of(&u);
        Ok(GapProcess {
            k,
            probabilities: Probabilities::Explicit(u),
            monotonicity,
        })
    }

    pub fn parametric(k: u32, s: f64) -> Result<Self> {
        if k == 0 {
            return Err(GapError::InvalidK);
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(GapError::InvalidParameter { name: "s", value: s });
        }
        Ok(GapProcess {
            k,
            probabilities: Probabilities::Parametric { s },
            monotonicity: Monotonicity::Increasing,
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn probabilities(&self) -> &Probabilities {
        &self.probabilities
    }

    pub fn monotonicity(&self) -> Monotonicity {
        self.monotonicity
    }

    /// Number of stored probabilities; `None` for the infinite family.
    pub fn len(&self) -> Option<usize> {
        match &self.probabilities {
            Probabilities::Explicit(u) => Some(u.len()),
            Probabilities::Parametric { .. } => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    /// `u_i`, 1-based.
    pub fn u(&self, i: usize) -> f64 {
        match &self.probabilities {
            Probabilities::Explicit(u) => u[i - 1],
            Probabilities::Parametric { s } => -(-(i as f64) * s).exp_m1(),
        }
    }

    /// `(ln u_i, ln(1 - u_i))`.
    fn log_pair(&self, i: usize) -> (f64, f64) {
        match &self.probabilities {
            Probabilities::Explicit(u) => {
                let v = u[i - 1];
                (v.ln(), (-v).ln_1p())
            }
            Probabilities::Parametric { s } => {
                let z = i as f64 * s;
                ((-(-z).exp_m1()).ln(), -z)
            }
        }
    }

    /// `ln f_k(1 - u_i)`.
    fn log_fk_complement(&self, eval: &FkEvaluator, i: usize) -> Result<f64> {
        Ok(match &self.probabilities {
            Probabilities::Explicit(u) => eval.fk_of_complement(u[i - 1])?.ln_f,
            Probabilities::Parametric { s } => -eval.gk(i as f64 * s)?,
        })
    }

    fn check_len(&self, n: usize) -> Result<()> {
        match self.len() {
            Some(available) if available < n => Err(GapError::InsufficientProbabilities { needed: n, available }),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoTrace {
    pub values: Vec<f64>,
    pub log_values: Vec<f64>,
}

impl RhoTrace {
    pub fn last(&self) -> f64 {
        *self.values.last().expect("trace holds rho_0")
    }

    pub fn last_log(&self) -> f64 {
        *self.log_values.last().expect("trace holds rho_0")
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// `rho_0..=rho_n`, in linear and in log space.
pub fn rho_exact(process: &GapProcess, n: usize) -> Result<RhoTrace> {
    process.check_len(n)?;
    let k = process.k as usize;
    let mut values = Vec::with_capacity(n + 1);
    let mut log_values = Vec::with_capacity(n + 1);
    let mut u = vec![0.0; n + 1];
    let mut logs = vec![(0.0, 0.0); n + 1];
    for i in 1..=n {
        u[i] = process.u(i);
        logs[i] = process.log_pair(i);
    }
    let mut terms = Vec::with_capacity(k);
    for m in 0..=n {
        if m < k {
            values.push(1.0);
            log_values.push(0.0);
            continue;
        }
        let mut sum = 0.0;
        let mut tail = 1.0;
        let mut log_tail = 0.0;
        terms.clear();
        for i in 1..=k {
            // event m-i+1 occurs, the i-1 after it do not
            let j = m - i + 1;
            sum += values[m - i] * u[j] * tail;
            terms.push(log_values[m - i] + logs[j].0 + log_tail);
            tail *= 1.0 - u[j];
            log_tail += logs[j].1;
        }
        values.push(sum);
        log_values.push(log_sum_exp(&terms));
    }
    Ok(RhoTrace { values, log_values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sandwich {
    pub lower: f64,
    pub upper: f64,
    pub log_lower: f64,
    pub log_upper: f64,
}

/// `ln prod_{i=from..=n} f_k(1 - u_i)`.
fn log_product(process: &GapProcess, from: usize, n: usize) -> Result<f64> {
    let eval = FkEvaluator::new(process.k)?;
    let mut total = 0.0;
    for i in from..=n {
        total += process.log_fk_complement(&eval, i)?;
    }
    Ok(total)
}

/// `(prod_{i=1..n} f_k(1 - u_i), prod_{i=k..n} f_k(1 - u_i))`, valid for
/// increasing probabilities (any order when `k = 1`).
pub fn rho_sandwich(process: &GapProcess, n: usize) -> Result<Sandwich> {
    process.check_len(n)?;
    let mono = process.monotonicity;
    // at k = 1 both bounds equal prod u_i = rho_n whatever the order
    if process.k > 1 && !mono.is_increasing() {
        let bound = if mono.is_decreasing() { Bound::Upper } else { Bound::Both };
        return Err(GapError::BoundInvalidated {
            bound,
            monotonicity: mono,
        });
    }
    let k = process.k as usize;
    let log_head = log_product(process, 1, (k - 1).min(n))?;
    let log_upper = log_product(process, k, n)?;
    let log_lower = log_head + log_upper;
    Ok(Sandwich {
        lower: log_lower.exp(),
        upper: log_upper.exp(),
        log_lower,
        log_upper,
    })
}

/// `ln prod_{i=1..n} f_k(1 - u_i)`, a lower bound on `ln rho_n` for
/// increasing or decreasing probabilities.
pub fn rho_log_lower_bound(process: &GapProcess, n: usize) -> Result<f64> {
    process.check_len(n)?;
    let mono = process.monotonicity;
    if process.k > 1 && mono == Monotonicity::Neither {
        return Err(GapError::BoundInvalidated {
            bound: Bound::Lower,
            monotonicity: mono,
        });
    }
    log_product(process, 1, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PakEstimate {
    /// Midpoint of the enclosing interval.
    pub value: f64,
    pub log_value: f64,
    /// Half-width of the enclosing interval.
    pub error_bound: f64,
    pub lower: f64,
    pub upper: f64,
    pub log_lower: f64,
    pub log_upper: f64,
    /// Length `N` of the exact recurrence.
    pub n_terms: usize,
}

/// Checks `g_k(z) <= TAIL_CONSTANT e^{-kz}` on a grid of `z in [1, 60]`.
pub fn check_tail_constant(k: u32) -> Result<()> {
    let eval = FkEvaluator::new(k)?;
    let kf = k as f64;
    for i in 0..=590 {
        let z = 1.0 + 0.1 * i as f64;
        let g = eval.gk(z)?;
        if g > TAIL_CONSTANT * (-kf * z).exp() {
            return Err(GapError::TailBoundViolated { k, z });
        }
    }
    Ok(())
}

/// `P(A_k)`: the infinite sequence `u_i = 1 - e^{-is}` has no k-gap.
///
/// The recurrence runs to `N`; the rest of the sequence is handled by Harris'
/// inequality. A k-gap not inside `1..=N` lies inside `N-k+2..`, so
/// `rho_N prod_{j >= N-k+2} f_k(e^{-js}) <= P(A_k) <= rho_N`, and the product
/// is bounded below through `g_k(z) <= 2 e^{-kz}`.
pub fn prob_ak(k: u32, s: f64, tol: f64) -> Result<PakEstimate> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(GapError::InvalidParameter { name: "tol", value: tol });
    }
    let process = GapProcess::parametric(k, s)?;
    check_tail_constant(k)?;
    let kf = k as f64;
    let ratio = -(-kf * s).exp_m1();
    // smallest J with 2 e^{-kJs} / (1 - e^{-ks}) <= tol, and Js >= 1
    let from_tol = ((TAIL_CONSTANT / (tol * ratio)).ln() / (kf * s)).ceil().max(1.0);
    let j = from_tol.max((1.0 / s).ceil());
    let n = j + kf - 2.0;
    if !(n <= MAX_PAK_TERMS as f64) {
        return Err(GapError::ToleranceUnachievable {
            tol,
            max_terms: MAX_PAK_TERMS,
        });
    }
    let n = (n as usize).max(k as usize - 1);
    let j_start = n + 2 - k as usize;
    let tail = TAIL_CONSTANT * (-kf * j_start as f64 * s).exp() / ratio;
    let trace = rho_exact(&process, n)?;
    let log_upper = trace.last_log();
    let log_lower = log_upper - tail;
    let upper = log_upper.exp();
    let lower = log_lower.exp();
    // midpoint = upper (1 + e^{-tail}) / 2
    let log_value = log_upper + (0.5 * (1.0 + (-tail).exp())).ln();
    Ok(PakEstimate {
        value: log_value.exp(),
        log_value,
        error_bound: 0.5 * upper * -(-tail).exp_m1(),
        lower,
        upper,
        log_lower,
        log_upper,
        n_terms: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PakBounds {
    pub lower: f64,
    pub upper: f64,
    pub log_lower: f64,
    pub log_upper: f64,
}

/// `(exp(-lambda_k/s), s^{-(2k-1)/(2k)} exp(-lambda_k/s))`.
pub fn prob_ak_bounds(k: u32, s: f64) -> Result<PakBounds> {
    if !(s > 0.0 && s < 1.0) {
        return Err(GapError::InvalidParameter { name: "s", value: s });
    }
    let lambda = lambda_k(k)?;
    let kf = k as f64;
    let log_lower = -lambda / s;
    let log_upper = log_lower - (2.0 * kf - 1.0) / (2.0 * kf) * s.ln();
    Ok(PakBounds {
        lower: log_lower.exp(),
        upper: log_upper.exp(),
        log_lower,
        log_upper,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub stderr: f64,
}

impl McEstimate {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        let p = successes as f64 / trials as f64;
        McEstimate {
            successes,
            trials,
            estimate: p,
            stderr: (p * (1.0 - p) / trials as f64).sqrt(),
        }
    }

    /// Binomial standard error of the mean at success probability `p`.
    pub fn stderr_at(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// `estimate <= bound + sigmas * se`, with `se` the larger of the
    /// plug-in stderr and the stderr at `bound`. The plug-in value alone is
    /// zero whenever every trial succeeds.
    pub fn within_upper(&self, bound: f64, sigmas: f64) -> bool {
        self.estimate <= bound + sigmas * self.stderr.max(self.stderr_at(bound))
    }
}

/// Whether one sampled sequence `1..=n` avoids k-gaps.
fn sample_no_gap<R: Rng>(rng: &mut R, u: &[f64], k: usize) -> bool {
    let mut run = 0;
    for &p in u {
        if rng.gen::<f64>() < p {
            run = 0;
        } else {
            run += 1;
            if run == k {
                return false;
            }
        }
    }
    true
}

/// Monte Carlo estimate of `rho_n`; trial `t` uses stream `t` of `seed`.
pub fn rho_montecarlo(process: &GapProcess, n: usize, trials: u64, seed: u64) -> Result<McEstimate> {
    if trials == 0 {
        return Err(GapError::InvalidParameter {
            name: "trials",
            value: 0.0,
        });
    }
    process.check_len(n)?;
    let u: Vec<f64> = (1..=n).map(|i| process.u(i)).collect();
    let k = process.k as usize;
    let successes = (0..trials)
        .into_par_iter()
        .filter(|&t| sample_no_gap(&mut trial_rng(seed, t), &u, k))
        .count() as u64;
    Ok(McEstimate::from_counts(successes, trials))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConjectureReport {
    pub trials: u64,
    pub violations: u64,
    /// Smallest `ln rho_n - ln prod f_k(1 - u_i)` seen.
    pub worst_log_margin: f64,
}

/// Tests `prod_{i=1..n} f_k(1 - u_i) <= rho_n` on unordered random `u`.
///
/// Only proved for monotone sequences; this reports, it does not assert.
pub fn fuzz_lower_bound_conjecture(k: u32, n: usize, trials: u64, seed: u64) -> Result<ConjectureReport> {
    let eval = FkEvaluator::new(k)?;
    let margins: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let u: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let mut lower = 0.0;
            for &v in &u {
                lower += eval.fk_of_complement(v)?.ln_f;
            }
            let process = GapProcess::explicit(k, u)?;
            Ok(rho_exact(&process, n)?.last_log() - lower)
        })
        .collect::<Result<_>>()?;
    Ok(ConjectureReport {
        trials,
        violations: margins.iter().filter(|&&m| m < -1e-10).count() as u64,
        worst_log_margin: margins.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotonicity_classification() {
        assert_eq!(Monotonicity::of(&[0.3, 0.3]), Monotonicity::Constant);
        assert_eq!(Monotonicity::of(&[0.1, 0.1, 0.2]), Monotonicity::Increasing);
        assert_eq!(Monotonicity::of(&[0.5, 0.2]), Monotonicity::Decreasing);
        assert_eq!(Monotonicity::of(&[0.1, 0.5, 0.2]), Monotonicity::Neither);
        assert_eq!(Monotonicity::of(&[]), Monotonicity::Constant);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(GapProcess::explicit(0, vec![]).is_err());
        assert!(GapProcess::explicit(2, vec![0.5, 1.5]).is_err());
        assert!(GapProcess::parametric(2, 0.0).is_err());
        let p = GapProcess::explicit(2, vec![0.5]).unwrap();
        assert_eq!(
            rho_exact(&p, 3),
            Err(GapError::InsufficientProbabilities { needed: 3, available: 1 })
        );
    }

    #[test]
    fn sandwich_names_invalid_bound() {
        let down = GapProcess::explicit(2, vec![0.9, 0.5, 0.1]).unwrap();
        assert!(matches!(
            rho_sandwich(&down, 3),
            Err(GapError::BoundInvalidated { bound: Bound::Upper, .. })
        ));
        let mixed = GapProcess::explicit(2, vec![0.1, 0.9, 0.5]).unwrap();
        assert!(matches!(
            rho_sandwich(&mixed, 3),
            Err(GapError::BoundInvalidated { bound: Bound::Both, .. })
        ));
        assert!(rho_log_lower_bound(&down, 3).is_ok());
        assert!(rho_log_lower_bound(&mixed, 3).is_err());
    }

    #[test]
    fn log_sum_exp_handles_empty_mass() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
    }
}
