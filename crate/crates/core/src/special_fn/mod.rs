//! The `f_k` family and the quantities derived from it.
//!
//! `f_k` is the decreasing solution on `[0, 1]` of
//! `f^k - f^(k+1) = x^k - x^(k+1)`; `g_k(z) = -ln f_k(e^-z)`. Everything else
//! in this module (`T_j`, `D_j`, `H_k`, `H~_k`, the `g_k` integral) is built
//! on one root solver, [`FkEvaluator`].
//!
//! The solver never works on the short form directly: `h(y) - h(x)` has the
//! trivial root `y = x`, and dividing it out leaves the long form
//! `y^k = (1 - x)(y^(k-1) + x y^(k-2) + ... + x^(k-1))`, whose root is simple
//! even at the fixed point `k/(k+1)`. Three regimes are used:
//!
//! * `x <= k/(2(k+1))`: `f` is close to 1, so the solver works on
//!   `w = 1 - f` in log space (`ln w + k ln(1-w) = k ln x + ln(1-x)`), which
//!   keeps `g_k(z) ~ e^-kz` accurate far below machine epsilon.
//! * `1 - x < SMALL_COMPLEMENT`: the long form is solved for `ln f`.
//! * otherwise: the long form is solved for `f` directly.

mod quadrature;

pub use quadrature::{integrate as adaptive_gauss_kronrod, QuadResult};

use std::f64::consts::PI;

use thiserror::Error;

/// Default absolute tolerance of the root solver.
pub const DEFAULT_ROOT_TOL: f64 = 1e-14;
/// Default tolerance for [`integrate_gk`].
pub const DEFAULT_INTEGRAL_TOL: f64 = 1e-8;
/// Below this value of `1 - x` (equivalently `z` for `g_k`) the long form is
/// solved for `ln f` instead of `f`.
pub const SMALL_COMPLEMENT: f64 = 1e-12;

const MAX_SOLVER_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecialFnError {
    #[error("k must be at least 1")]
    InvalidK,
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("{name} = {value} is outside {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("expected {expected} arguments, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("index j = {j} outside 1..={k}")]
    InvalidIndex { j: u32, k: u32 },
    #[error("quadrature did not converge: error estimate {estimate:e} exceeds {tol:e}")]
    NoConvergence { estimate: f64, tol: f64 },
}

pub type Result<T> = std::result::Result<T, SpecialFnError>;

/// An argument `x` together with accurately known `1 - x` and logarithms.
#[derive(Debug, Clone, Copy)]
struct Arg {
    x: f64,
    xc: f64,
    ln_x: f64,
    ln_xc: f64,
}

impl Arg {
    fn from_x(x: f64) -> Self {
        Arg {
            x,
            xc: 1.0 - x,
            ln_x: x.ln(),
            ln_xc: (-x).ln_1p(),
        }
    }

    /// `x = e^-z`, with `1 - x` from `expm1` so small `z` keeps full precision.
    fn from_z(z: f64) -> Self {
        let xc = -(-z).exp_m1();
        Arg {
            x: (-z).exp(),
            xc,
            ln_x: -z,
            ln_xc: xc.ln(),
        }
    }

    /// `x = 1 - u` given the probability `u`.
    fn from_complement(u: f64) -> Self {
        Arg {
            x: 1.0 - u,
            xc: u,
            ln_x: (-u).ln_1p(),
            ln_xc: u.ln(),
        }
    }
}

/// `f`, `1 - f` and `ln f`, each computed without cancellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkValue {
    pub f: f64,
    pub one_minus_f: f64,
    pub ln_f: f64,
}

/// Evaluator for `f_k` and everything derived from it, for one fixed `k`.
///
/// Immutable after construction; all methods take `&self`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkEvaluator {
    k: u32,
    tol: f64,
}

impl FkEvaluator {
    pub fn new(k: u32) -> Result<Self> {
        Self::with_tolerance(k, DEFAULT_ROOT_TOL)
    }

    pub fn with_tolerance(k: u32, tol: f64) -> Result<Self> {
        if k == 0 {
            return Err(SpecialFnError::InvalidK);
        }
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(SpecialFnError::InvalidTolerance(tol));
        }
        Ok(FkEvaluator { k, tol })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// The fixed point `k/(k+1)` where `f_k(x) = x`.
    pub fn fixed_point(&self) -> f64 {
        let k = self.k as f64;
        k / (k + 1.0)
    }

    /// `h_k(y) = y^k - y^(k+1)`.
    pub fn h(&self, y: f64) -> f64 {
        let k = self.k as i32;
        y.powi(k) - y.powi(k + 1)
    }

    pub fn fk(&self, x: f64) -> Result<f64> {
        Ok(self.fk_value(x)?.f)
    }

    pub fn fk_value(&self, x: f64) -> Result<FkValue> {
        check_unit("x", x)?;
        Ok(self.solve(Arg::from_x(x)))
    }

    /// `f_k(1 - u)` for a probability `u`, exact in the small-`u` regime.
    pub fn fk_of_complement(&self, u: f64) -> Result<FkValue> {
        check_unit("u", u)?;
        Ok(self.solve(Arg::from_complement(u)))
    }

    /// `g_k(z) = -ln f_k(e^-z)`.
    pub fn gk(&self, z: f64) -> Result<f64> {
        check_positive_z(z)?;
        Ok(-self.solve(Arg::from_z(z)).ln_f)
    }

    /// `g'_k(z)`, from the differentiated functional equation.
    pub fn gk_derivative(&self, z: f64) -> Result<f64> {
        check_positive_z(z)?;
        let arg = Arg::from_z(z);
        let root = self.solve(arg);
        Ok(arg.x * self.log_derivative_at(arg, root))
    }

    /// `f'_k(y)`.
    pub fn fk_derivative(&self, y: f64) -> Result<f64> {
        check_half_open("y", y)?;
        let arg = Arg::from_x(y);
        let root = self.solve(arg);
        Ok(root.f * self.log_derivative_at(arg, root))
    }

    /// `f'_k(y) / f_k(y)` on `[0, 1)`.
    pub fn fk_log_derivative(&self, y: f64) -> Result<f64> {
        check_half_open("y", y)?;
        let arg = Arg::from_x(y);
        Ok(self.log_derivative_at(arg, self.solve(arg)))
    }

    /// `T_j(y) = (1 - y) y^(j-1) / f_k(y)^j`.
    pub fn tj(&self, j: u32, y: f64) -> Result<f64> {
        self.check_j(j)?;
        check_half_open("y", y)?;
        let f = self.solve(Arg::from_x(y)).f;
        Ok(tj_from_root(j, y, f))
    }

    /// `D_j(y) = T_1(y) + ... + T_j(y)`; identically 1 when `j = k`.
    pub fn dj(&self, j: u32, y: f64) -> Result<f64> {
        self.check_j(j)?;
        check_half_open("y", y)?;
        let f = self.solve(Arg::from_x(y)).f;
        Ok((1..=j).map(|i| tj_from_root(i, y, f)).sum())
    }

    /// The alternating sum `H_k(y_1..y_k)`, evaluated term by term.
    pub fn hk(&self, y: &[f64]) -> Result<f64> {
        let k = self.k as usize;
        if y.len() != k {
            return Err(SpecialFnError::DimensionMismatch { expected: k, got: y.len() });
        }
        let f = self.f_all(y)?;
        // term i (1-based): (1 - y_i) * y_{i+1}..y_k * f(y_1)..f(y_{i-1})
        let mut total = 0.0;
        for i in 0..k {
            let tail: f64 = y[i + 1..].iter().product();
            let head: f64 = f[..i].iter().product();
            total += (1.0 - y[i]) * tail * head;
        }
        Ok(total - f.iter().product::<f64>())
    }

    /// `H~_k(y_1..y_{2k-1})`, whose polynomial variables are decoupled from
    /// the `f_k` arguments.
    pub fn hk_tilde(&self, y: &[f64]) -> Result<f64> {
        let k = self.k as usize;
        let n = 2 * k - 1;
        if y.len() != n {
            return Err(SpecialFnError::DimensionMismatch { expected: n, got: y.len() });
        }
        let f = self.f_all(&y[..k])?;
        // term i = 0..k-1: (1 - y_{k+i}) * y_{k+i+1}..y_{2k-1} * f(y_1)..f(y_i)
        let mut total = 0.0;
        for i in 0..k {
            let pivot = k - 1 + i;
            let tail: f64 = y[pivot + 1..].iter().product();
            let head: f64 = f[..i].iter().product();
            total += (1.0 - y[pivot]) * tail * head;
        }
        Ok(total - f.iter().product::<f64>())
    }

    fn f_all(&self, y: &[f64]) -> Result<Vec<f64>> {
        y.iter()
            .map(|&v| {
                check_unit("y", v)?;
                Ok(self.solve(Arg::from_x(v)).f)
            })
            .collect()
    }

    fn check_j(&self, j: u32) -> Result<()> {
        if j == 0 || j > self.k {
            return Err(SpecialFnError::InvalidIndex { j, k: self.k });
        }
        Ok(())
    }

    /// `f'/f = -(M - N) / ((1 - x) M)` with
    /// `M = sum_{j=1}^{k} j x^(j-1) f^(k-j)`, `N = sum_{j=1}^{k-1} j x^(j-1) f^(k-1-j)`
    /// and `M - N = k x^(k-1) - (1 - f) N`.
    fn log_derivative_at(&self, arg: Arg, root: FkValue) -> f64 {
        let k = self.k as i32;
        let (x, f) = (arg.x, root.f);
        let mut m = 0.0;
        let mut n = 0.0;
        for j in 1..=k {
            let xp = x.powi(j - 1);
            m += j as f64 * xp * f.powi(k - j);
            if j < k {
                n += j as f64 * xp * f.powi(k - 1 - j);
            }
        }
        let m_minus_n = k as f64 * x.powi(k - 1) - root.one_minus_f * n;
        -m_minus_n / (arg.xc * m)
    }

    fn solve(&self, arg: Arg) -> FkValue {
        if arg.x <= 0.0 {
            return FkValue { f: 1.0, one_minus_f: 0.0, ln_f: 0.0 };
        }
        if arg.xc <= 0.0 {
            return FkValue { f: 0.0, one_minus_f: 1.0, ln_f: f64::NEG_INFINITY };
        }
        let p = self.fixed_point();
        if arg.x <= 0.5 * p {
            self.solve_near_one(arg)
        } else if arg.xc < SMALL_COMPLEMENT {
            self.solve_log(arg)
        } else {
            self.solve_long_form(arg)
        }
    }

    /// `t = ln(1 - f)`: `t + k ln(1 - e^t) = k ln x + ln(1 - x)`.
    fn solve_near_one(&self, arg: Arg) -> FkValue {
        let k = self.k as f64;
        let c = k * arg.ln_x + arg.ln_xc;
        let hi = -(k + 1.0).ln();
        let lo = c.min(hi);
        let t = safeguarded_newton(lo, hi, c, self.tol, |t| {
            let w = t.exp();
            (t + k * (-w).ln_1p() - c, 1.0 - k * w / (1.0 - w))
        });
        let w = t.exp();
        FkValue { f: 1.0 - w, one_minus_f: w, ln_f: (-w).ln_1p() }
    }

    /// `u = ln f`: `k u = ln(1 - x) + ln S(e^u)` where
    /// `S(y) = sum_{i<k} y^i x^(k-1-i)`.
    fn solve_log(&self, arg: Arg) -> FkValue {
        let k = self.k as i32;
        let kf = k as f64;
        let x = arg.x;
        let lo = (arg.ln_xc + (kf - 1.0) * arg.ln_x) / kf;
        let hi = self.fixed_point().ln();
        let u = safeguarded_newton(lo, hi, arg.ln_xc / kf, self.tol, |u| {
            let y = u.exp();
            let (s, ys_prime) = long_form_sum(k, x, y);
            (kf * u - arg.ln_xc - s.ln(), kf - ys_prime / s)
        });
        let f = u.exp();
        FkValue { f, one_minus_f: 1.0 - f, ln_f: u }
    }

    /// `y^k - (1 - x) S(y) = 0`, bracketed by the side of the fixed point.
    fn solve_long_form(&self, arg: Arg) -> FkValue {
        let k = self.k as i32;
        let x = arg.x;
        let p = self.fixed_point();
        let (lo, hi) = if x <= p { (p, 1.0) } else { (0.0, p) };
        let y = safeguarded_newton(lo, hi, 0.5 * (lo + hi), self.tol, |y| {
            let (s, ys_prime) = long_form_sum(k, x, y);
            let s_prime = if y > 0.0 { ys_prime / y } else { long_form_slope_at_zero(k, x) };
            (y.powi(k) - arg.xc * s, k as f64 * y.powi(k - 1) - arg.xc * s_prime)
        });
        FkValue { f: y, one_minus_f: 1.0 - y, ln_f: y.ln() }
    }
}

fn tj_from_root(j: u32, y: f64, f: f64) -> f64 {
    let j = j as i32;
    (1.0 - y) * y.powi(j - 1) / f.powi(j)
}

/// `(S(y), y S'(y))` for `S(y) = sum_{i=0}^{k-1} y^i x^(k-1-i)`.
fn long_form_sum(k: i32, x: f64, y: f64) -> (f64, f64) {
    let mut s = 0.0;
    let mut ys = 0.0;
    for i in 0..k {
        let term = y.powi(i) * x.powi(k - 1 - i);
        s += term;
        ys += i as f64 * term;
    }
    (s, ys)
}

fn long_form_slope_at_zero(k: i32, x: f64) -> f64 {
    if k >= 2 {
        x.powi(k - 2)
    } else {
        0.0
    }
}

/// Newton iteration kept inside a sign-change bracket `[lo, hi]` with
/// `F(lo) <= 0 <= F(hi)`; falls back to bisection whenever a Newton step
/// leaves the bracket.
fn safeguarded_newton<F>(mut lo: f64, mut hi: f64, start: f64, tol: f64, eval: F) -> f64
where
    F: Fn(f64) -> (f64, f64),
{
    let mut x = if start > lo && start < hi { start } else { 0.5 * (lo + hi) };
    for _ in 0..MAX_SOLVER_ITERATIONS {
        let (value, slope) = eval(x);
        if value == 0.0 {
            return x;
        }
        if value < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let scale = x.abs().max(1.0);
        let newton = x - value / slope;
        let next = if slope.is_finite() && slope != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - x).abs();
        x = next;
        if step <= tol * scale || hi - lo <= f64::EPSILON * scale {
            return x;
        }
    }
    x
}

fn check_unit(name: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(SpecialFnError::Domain { name, value: v, domain: "[0, 1]" })
    }
}

fn check_half_open(name: &'static str, v: f64) -> Result<()> {
    if (0.0..1.0).contains(&v) {
        Ok(())
    } else {
        Err(SpecialFnError::Domain { name, value: v, domain: "[0, 1)" })
    }
}

fn check_positive_z(z: f64) -> Result<()> {
    if z > 0.0 && !z.is_nan() {
        Ok(())
    } else {
        Err(SpecialFnError::Domain { name: "z", value: z, domain: "(0, inf)" })
    }
}

/// Convenience wrapper for a one-off `f_k(x)`.
pub fn fk_eval(k: u32, x: f64, tol: f64) -> Result<f64> {
    FkEvaluator::with_tolerance(k, tol)?.fk(x)
}

pub fn gk_eval(k: u32, z: f64) -> Result<f64> {
    FkEvaluator::new(k)?.gk(z)
}

pub fn gk_derivative(k: u32, z: f64) -> Result<f64> {
    FkEvaluator::new(k)?.gk_derivative(z)
}

/// The threshold constant `lambda_k = pi^2 / (3k(k+1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaK {
    pub k: u32,
    pub value: f64,
}

impl LambdaK {
    pub fn new(k: u32) -> Result<Self> {
        Ok(LambdaK { k, value: lambda_k(k)? })
    }
}

pub fn lambda_k(k: u32) -> Result<f64> {
    if k == 0 {
        return Err(SpecialFnError::InvalidK);
    }
    let k = k as f64;
    Ok(PI * PI / (3.0 * k * (k + 1.0)))
}

/// Left cut point of the numerical part of [`integrate_gk`].
pub const INTEGRAL_HEAD_CUT: f64 = 1e-8;

/// `integral_0^inf g_k(z) dz`, with the diagnostic residual against
/// `lambda_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GkIntegral {
    pub value: f64,
    /// Quadrature error estimate plus the size of the head/tail corrections'
    /// neglected terms.
    pub error_estimate: f64,
    /// `value - lambda_k`.
    pub residual: f64,
    pub subdivisions: usize,
}

/// Integrates `g_k` over `(0, inf)`.
///
/// `[eps, Z]` with `eps = 1e-8`, `Z = max(50/k, 30)` is done by adaptive
/// Gauss–Kronrod; `[0, eps]` uses `g_k(z) ~ (1/k) ln(1/z)`, giving
/// `(eps/k)(ln(1/eps) + 1)`, and `[Z, inf)` uses `g_k(z) ~ e^-kz`, giving
/// `e^-kZ / k`.
pub fn integrate_gk(k: u32, tol: f64) -> Result<GkIntegral> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(SpecialFnError::InvalidTolerance(tol));
    }
    let eval = FkEvaluator::new(k)?;
    let kf = k as f64;
    let eps = INTEGRAL_HEAD_CUT;
    let z_max = (50.0 / kf).max(30.0);
    let quad = quadrature::integrate(
        |z| -eval.solve(Arg::from_z(z)).ln_f,
        eps,
        z_max,
        0.1 * tol,
        4000,
    );
    let head = eps / kf * ((1.0 / eps).ln() + 1.0);
    let tail = (-kf * z_max).exp() / kf;
    // next-order head term: g_k(z) - ln(1/z)/k = O(z^(1/k)) near 0
    let head_error = eps.powf(1.0 + 1.0 / kf);
    let error_estimate = quad.error_estimate + head_error + tail;
    if !quad.converged || error_estimate > tol {
        return Err(SpecialFnError::NoConvergence { estimate: error_estimate, tol });
    }
    let value = quad.value + head + tail;
    Ok(GkIntegral {
        value,
        error_estimate,
        residual: value - lambda_k(k)?,
        subdivisions: quad.subdivisions,
    })
}
