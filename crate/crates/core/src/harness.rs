//! Experiment driver: threshold scans, growth-probability trend checks and `P(A_k)`
//! bound sweeps, with CSV/JSON output.
//!
//! Every grid point gets its own seed `derive_seed(master, index)`, with the
//! index taken in grid order, and trial `t` uses stream `t` of that seed.
//! Output is therefore independent of thread count and completion order.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gap_process::{prob_ak, prob_ak_bounds, GapError, McEstimate};
use crate::lattice::{reaches_boundary, run_to_fixpoint, sample_initial_at, spans, LatticeError, ModelSpec, Variant};
use crate::rng::derive_seed;
use crate::special_fn::{lambda_k, SpecialFnError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("degenerate fit: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Gap(#[from] GapError),
    #[error(transparent)]
    SpecialFn(#[from] SpecialFnError),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Formats like C's `%.{digits}g`.
pub fn format_g(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim(mantissa), sign, exp.abs())
    } else {
        trim(&format!("{:.*}", (digits as i32 - 1 - exp) as usize, x))
    }
}

/// Fifteen significant digits.
pub fn g15(x: f64) -> String {
    format_g(x, 15)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Variant,
    pub k: Vec<u32>,
    /// Empty-site probabilities; exclusive with `s`.
    #[serde(default)]
    pub q: Vec<f64>,
    /// `q = e^{-s}`; exclusive with `q`.
    #[serde(default)]
    pub s: Vec<f64>,
    #[serde(rename = "L")]
    pub l: Vec<usize>,
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    /// Use one seed for every point, so points at different q share their
    /// uniforms (monotone coupling).
    #[serde(default)]
    pub common_random_numbers: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub k: u32,
    pub q: f64,
    pub s: f64,
    #[serde(rename = "L")]
    pub l: usize,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HarnessError::Config(m.into()));
        if self.k.is_empty() || self.l.is_empty() {
            return bad("k and L grids must be nonempty");
        }
        match (self.q.is_empty(), self.s.is_empty()) {
            (true, true) => return bad("one of q or s must be given"),
            (false, false) => return bad("q and s are exclusive"),
            _ => {}
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.l.contains(&0) {
            return bad("L must be positive");
        }
        if self.s.iter().any(|&s| !(s >= 0.0 && s.is_finite())) {
            return bad("s must be finite and nonnegative");
        }
        for &k in &self.k {
            for &q in &self.q {
                ModelSpec::new(self.model, k, q)?;
            }
            ModelSpec::new(self.model, k, 0.5)?;
        }
        Ok(())
    }

    /// Points in grid order: k, then L, then q (or s).
    pub fn points(&self) -> Vec<GridPoint> {
        let qs: Vec<(f64, f64)> = if self.q.is_empty() {
            self.s.iter().map(|&s| ((-s).exp(), s)).collect()
        } else {
            self.q.iter().map(|&q| (q, -q.ln())).collect()
        };
        let mut out = Vec::new();
        for &k in &self.k {
            for &l in &self.l {
                for &(q, s) in &qs {
                    out.push(GridPoint { k, q, s, l });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McResult {
    pub k: u32,
    pub model: Variant,
    pub q: f64,
    pub s: f64,
    #[serde(rename = "L")]
    pub l: usize,
    pub trials: u64,
    pub successes: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub seed: u64,
    /// Excluded from CSV output.
    pub wall_time_secs: f64,
}

pub const CSV_HEADER: &str = "k,model,q,s,L,trials,successes,estimate,stderr,seed";

/// Trials at one point whose growth from the origin reaches the window edge.
/// The global model has no origin, so there the event is a fully active
/// window.
pub fn count_growth(spec: &ModelSpec, l: usize, trials: u64, seed: u64) -> Result<u64> {
    spec.validate()?;
    let localized = spec.variant.is_local();
    let origin = (l / 2, l / 2);
    let hits = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<bool> {
            let mut lattice = sample_initial_at(spec, l, l, origin, seed, t, localized)?;
            run_to_fixpoint(&mut lattice, spec, u32::MAX);
            Ok(if localized {
                reaches_boundary(&lattice, spec)
            } else {
                spans(&lattice)
            })
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(hits.into_iter().filter(|&h| h).count() as u64)
}

fn point_result(model: Variant, p: GridPoint, trials: u64, seed: u64) -> Result<McResult> {
    let start = Instant::now();
    let spec = ModelSpec::new(model, p.k, p.q)?;
    let successes = count_growth(&spec, p.l, trials, seed)?;
    let est = McEstimate::from_counts(successes, trials);
    Ok(McResult {
        k: p.k,
        model,
        q: p.q,
        s: p.s,
        l: p.l,
        trials,
        successes,
        estimate: est.estimate,
        stderr: est.stderr,
        seed,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

/// Growth frequency at every grid point, in grid order.
pub fn scan_threshold(config: &ExperimentConfig) -> Result<Vec<McResult>> {
    config.validate()?;
    config
        .points()
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let seed = if config.common_random_numbers {
                derive_seed(config.seed, 0)
            } else {
                derive_seed(config.seed, i as u64)
            };
            point_result(config.model, p, config.trials, seed)
        })
        .collect()
}

pub fn results_to_csv(rows: &[McResult]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let est = McEstimate::from_counts(r.successes, r.trials);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.k,
            r.model.name(),
            g15(r.q),
            g15(r.s),
            r.l,
            r.trials,
            r.successes,
            g15(est.estimate),
            g15(est.stderr),
            r.seed
        );
    }
    out
}

pub fn results_to_json(rows: &[McResult]) -> String {
    serde_json::to_string_pretty(rows).expect("results serialize")
}

/// Runs the scan and writes it to `config.output`, or returns the text when
/// no output path is set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Option<String>> {
    let rows = scan_threshold(config)?;
    let text = match config.format {
        OutputFormat::Csv => results_to_csv(&rows),
        OutputFormat::Json => results_to_json(&rows),
    };
    match &config.output {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| HarnessError::Io {
                path: path.clone(),
                message: e.to_string(),
            })?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}

/// Window size as a function of `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LRule {
    Fixed(usize),
    /// `L = ceil(c / s)`.
    Scaled(f64),
}

impl Default for LRule {
    fn default() -> Self {
        LRule::Scaled(8.0)
    }
}

impl LRule {
    pub fn size(self, s: f64) -> usize {
        match self {
            LRule::Fixed(l) => l,
            // guard against c / s landing a rounding error above an integer
            LRule::Scaled(c) => ((c / s) * (1.0 - 1e-12)).ceil().max(1.0) as usize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendPoint {
    pub s: f64,
    #[serde(rename = "L")]
    pub l: usize,
    pub seed: u64,
    pub trials: u64,
    pub successes: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub log_estimate: f64,
    /// `-2 lambda_k / s`.
    pub leading: f64,
    /// `log P - leading`.
    pub excess: f64,
    /// `excess * s^{1/2}`.
    pub scaled_excess: f64,
    /// Residual of the straight-line fit of `log P` against `1/s`.
    pub fit_residual: f64,
    /// `s^{-1/2} log(1/s)^{5/2}`.
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendReport {
    pub k: u32,
    pub model: Variant,
    pub lambda_k: f64,
    pub l_rule: LRule,
    pub points: Vec<TrendPoint>,
    pub slope: f64,
    pub intercept: f64,
    /// `[-4 lambda_k, -lambda_k]`: a factor two around `-2 lambda_k`.
    pub slope_window: (f64, f64),
    pub slope_in_window: bool,
    pub residuals_within_envelope: bool,
    pub max_abs_scaled_excess: f64,
}

/// Least-squares line `y = intercept + slope x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len() as f64;
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Estimates growth at each `s` (window from `l_rule`), fits `log P` against
/// `1/s` and compares with the leading `-2 lambda_k / s` behaviour.
pub fn trend_check(
    k: u32,
    model: Variant,
    s_grid: &[f64],
    l_rule: LRule,
    trials: u64,
    seed: u64,
) -> Result<TrendReport> {
    if s_grid.len() < 2 {
        return Err(HarnessError::Config("need at least two s values".into()));
    }
    if s_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(HarnessError::Config("s grid must be strictly decreasing".into()));
    }
    if s_grid.iter().any(|&s| !(s > 0.0 && s < 1.0)) {
        return Err(HarnessError::Config("s must lie in (0, 1)".into()));
    }
    if trials == 0 {
        return Err(HarnessError::Config("trials must be at least 1".into()));
    }
    let lambda = lambda_k(k)?;
    let mut raw = Vec::new();
    for (i, &s) in s_grid.iter().enumerate() {
        let l = l_rule.size(s);
        let point_seed = derive_seed(seed, i as u64);
        let spec = ModelSpec::new(model, k, (-s).exp())?;
        let successes = count_growth(&spec, l, trials, point_seed)?;
        if successes == 0 || successes == trials {
            return Err(HarnessError::Degenerate(format!(
                "{successes}/{trials} successes at s = {s}"
            )));
        }
        raw.push((s, l, point_seed, McEstimate::from_counts(successes, trials)));
    }
    let x: Vec<f64> = raw.iter().map(|r| 1.0 / r.0).collect();
    let y: Vec<f64> = raw.iter().map(|r| r.3.estimate.ln()).collect();
    let (slope, intercept) = fit_line(&x, &y).ok_or_else(|| HarnessError::Degenerate("singular fit".into()))?;
    let points: Vec<TrendPoint> = raw
        .iter()
        .zip(x.iter().zip(&y))
        .map(|(&(s, l, point_seed, est), (&xi, &yi))| {
            let leading = -2.0 * lambda / s;
            let excess = yi - leading;
            TrendPoint {
                s,
                l,
                seed: point_seed,
                trials,
                successes: est.successes,
                estimate: est.estimate,
                stderr: est.stderr,
                log_estimate: yi,
                leading,
                excess,
                scaled_excess: excess * s.sqrt(),
                fit_residual: yi - (intercept + slope * xi),
                envelope: s.powf(-0.5) * (1.0 / s).ln().powf(2.5),
            }
        })
        .collect();
    let window = (-4.0 * lambda, -lambda);
    Ok(TrendReport {
        k,
        model,
        lambda_k: lambda,
        l_rule,
        slope,
        intercept,
        slope_window: window,
        slope_in_window: slope >= window.0 && slope <= window.1,
        residuals_within_envelope: points.iter().all(|p| p.fit_residual.abs() <= p.envelope),
        max_abs_scaled_excess: points.iter().map(|p| p.scaled_excess.abs()).fold(0.0, f64::max),
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PakRow {
    pub k: u32,
    pub s: f64,
    pub value: f64,
    pub error_bound: f64,
    /// `exp(-lambda_k / s)`.
    pub bound_lower: f64,
    /// `s^{-(2k-1)/(2k)} exp(-lambda_k / s)`.
    pub bound_upper: f64,
    /// The whole enclosing interval lies above `bound_lower`.
    pub above_lower: bool,
    pub ratio_to_upper: f64,
    /// `prod (1 - e^{-is})`, for k = 1 only.
    pub product: Option<f64>,
}

pub const PAK_CSV_HEADER: &str = "k,s,value,error_bound,bound_lower,bound_upper,above_lower,ratio_to_upper,product";

/// `prod_{i >= 1} (1 - e^{-is})`, summed in log space until the terms drop
/// below double precision.
pub fn euler_product(s: f64) -> f64 {
    let mut log = 0.0;
    let mut i = 1.0;
    loop {
        let t = (-i * s).exp();
        if t < 1e-18 {
            break;
        }
        log += (-t).ln_1p();
        i += 1.0;
    }
    log.exp()
}

pub fn sweep_pak_bounds(k_list: &[u32], s_list: &[f64], tol: f64) -> Result<Vec<PakRow>> {
    let mut rows = Vec::new();
    for &k in k_list {
        for &s in s_list {
            let est = prob_ak(k, s, tol)?;
            let b = prob_ak_bounds(k, s)?;
            rows.push(PakRow {
                k,
                s,
                value: est.value,
                error_bound: est.error_bound,
                bound_lower: b.lower,
                bound_upper: b.upper,
                above_lower: est.log_lower >= b.log_lower,
                ratio_to_upper: (est.log_value - b.log_upper).exp(),
                product: (k == 1).then(|| euler_product(s)),
            });
        }
    }
    Ok(rows)
}

pub fn pak_rows_to_csv(rows: &[PakRow]) -> String {
    let mut out = String::from(PAK_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.k,
            g15(r.s),
            g15(r.value),
            g15(r.error_bound),
            g15(r.bound_lower),
            g15(r.bound_upper),
            r.above_lower,
            g15(r.ratio_to_upper),
            r.product.map(g15).unwrap_or_default()
        );
    }
    out
}
