//! Truncated power series in `q` with exact integer coefficients, partitions
//! without k-sequences, and the two q-series expressions for their generating
//! function `G_k(q)`.

use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::gap_process::{prob_ak, GapError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QSeriesError {
    #[error("k must be at least 1")]
    InvalidK,
    #[error("series with constant term {0} is not invertible over the integers")]
    NonUnitConstant(String),
    #[error("factor 1 - ({coeff}) q^{exponent} does not have unit constant term")]
    NonUnitFactor { coeff: i64, exponent: u64 },
    #[error("s = {0} must be positive")]
    InvalidS(f64),
    #[error(transparent)]
    Gap(#[from] GapError),
}

pub type Result<T> = std::result::Result<T, QSeriesError>;

/// `a_0 + a_1 q + ... + a_N q^N  (mod q^{N+1})`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntSeries {
    coeffs: Vec<BigInt>,
}

impl IntSeries {
    pub fn zero(order: usize) -> Self {
        IntSeries {
            coeffs: vec![BigInt::zero(); order + 1],
        }
    }

    pub fn one(order: usize) -> Self {
        Self::monomial(1, 0, order)
    }

    /// `c q^e`, zero if `e` exceeds the order.
    pub fn monomial(c: i64, e: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        if e <= order {
            s.coeffs[e] = BigInt::from(c);
        }
        s
    }

    /// Coefficients beyond `order` are dropped, missing ones are zero.
    pub fn from_coeffs<I: IntoIterator<Item = BigInt>>(coeffs: I, order: usize) -> Self {
        let mut c: Vec<BigInt> = coeffs.into_iter().take(order + 1).collect();
        c.resize(order + 1, BigInt::zero());
        IntSeries { coeffs: c }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> &BigInt {
        &self.coeffs[n]
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self::from_coeffs(self.coeffs.iter().cloned(), order.min(self.order()))
    }

    /// Multiplies by `q^e`.
    pub fn shift(&self, e: usize) -> Self {
        let n = self.order();
        let mut out = Self::zero(n);
        for i in e..=n {
            out.coeffs[i] = self.coeffs[i - e].clone();
        }
        out
    }

    /// Multiplies in place by `1 - c q^m`, `m >= 1`.
    pub fn mul_binomial(&mut self, c: i64, m: usize) {
        let c = BigInt::from(c);
        for i in (m..self.coeffs.len()).rev() {
            let t = &c * &self.coeffs[i - m];
            self.coeffs[i] -= t;
        }
    }

    /// Divides in place by `1 - c q^m`, `m >= 1`.
    pub fn div_binomial(&mut self, c: i64, m: usize) {
        let c = BigInt::from(c);
        for i in m..self.coeffs.len() {
            let t = &c * &self.coeffs[i - m];
            self.coeffs[i] += t;
        }
    }

    /// Divides in place by `1 - q^m + q^{2m}`.
    pub fn div_trinomial(&mut self, m: usize) {
        for i in m..self.coeffs.len() {
            let mut t = self.coeffs[i - m].clone();
            if i >= 2 * m {
                t -= &self.coeffs[i - 2 * m];
            }
            self.coeffs[i] += t;
        }
    }

    /// Multiplicative inverse; the constant term must be `±1`.
    pub fn inverse(&self) -> Result<Self> {
        let a0 = &self.coeffs[0];
        if !a0.abs().is_one() {
            return Err(QSeriesError::NonUnitConstant(a0.to_string()));
        }
        let n = self.order();
        let mut b = Self::zero(n);
        b.coeffs[0] = a0.clone();
        for m in 1..=n {
            let mut acc = BigInt::zero();
            for i in 1..=m {
                if !self.coeffs[i].is_zero() {
                    acc += &self.coeffs[i] * &b.coeffs[m - i];
                }
            }
            // a0 = ±1 is its own inverse
            b.coeffs[m] = -(a0 * acc);
        }
        Ok(b)
    }

    /// Value at a real `q` from the truncated coefficients.
    pub fn eval_f64(&self, q: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * q + c.to_f64().unwrap_or(f64::NAN);
        }
        acc
    }
}

impl Add for &IntSeries {
    type Output = IntSeries;
    fn add(self, rhs: &IntSeries) -> IntSeries {
        let n = self.order().min(rhs.order());
        IntSeries::from_coeffs((0..=n).map(|i| &self.coeffs[i] + &rhs.coeffs[i]), n)
    }
}

impl Sub for &IntSeries {
    type Output = IntSeries;
    fn sub(self, rhs: &IntSeries) -> IntSeries {
        let n = self.order().min(rhs.order());
        IntSeries::from_coeffs((0..=n).map(|i| &self.coeffs[i] - &rhs.coeffs[i]), n)
    }
}

impl Neg for &IntSeries {
    type Output = IntSeries;
    fn neg(self) -> IntSeries {
        IntSeries::from_coeffs(self.coeffs.iter().map(|c| -c), self.order())
    }
}

impl Mul for &IntSeries {
    type Output = IntSeries;
    fn mul(self, rhs: &IntSeries) -> IntSeries {
        let n = self.order().min(rhs.order());
        let mut out = IntSeries::zero(n);
        for (i, a) in self.coeffs.iter().enumerate().take(n + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate().take(n + 1 - i) {
                if !b.is_zero() {
                    out.coeffs[i + j] += a * b;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terms {
    Finite(usize),
    /// As many factors as the truncation order can see.
    Infinite,
}

/// `(a; q^step)_n = prod_{j=0..n-1} (1 - a q^{step j})` with `a = c q^e`.
pub fn pochhammer(c: i64, e: usize, step: usize, terms: Terms, order: usize) -> Result<IntSeries> {
    let mut out = IntSeries::one(order);
    let count = match terms {
        Terms::Finite(n) => n,
        Terms::Infinite => {
            if step == 0 {
                return Err(QSeriesError::NonUnitFactor {
                    coeff: c,
                    exponent: e as u64,
                });
            }
            // factors with exponent above the order are 1
            if e > order {
                0
            } else {
                (order - e) / step + 1
            }
        }
    };
    if count > 0 && e == 0 {
        return Err(QSeriesError::NonUnitFactor { coeff: c, exponent: 0 });
    }
    for j in 0..count {
        let m = e + step * j;
        if m > order {
            break;
        }
        out.mul_binomial(c, m);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionTable {
    /// 0 for unrestricted partitions.
    pub k: u32,
    pub values: Vec<BigInt>,
}

impl PartitionTable {
    pub fn get(&self, n: usize) -> &BigInt {
        &self.values[n]
    }

    pub fn order(&self) -> usize {
        self.values.len() - 1
    }

    pub fn to_series(&self) -> IntSeries {
        IntSeries::from_coeffs(self.values.iter().cloned(), self.order())
    }
}

/// `p(0..=N)`.
pub fn partition_count(order: usize) -> PartitionTable {
    let mut p = vec![BigInt::zero(); order + 1];
    p[0] = BigInt::one();
    for part in 1..=order {
        for n in part..=order {
            let t = p[n - part].clone();
            p[n] += t;
        }
    }
    PartitionTable { k: 0, values: p }
}

/// `p_k(0..=N)`: partitions with no `k` consecutive integers among the parts.
///
/// Parts are decided in increasing order; the state is the running sum and
/// the length of the run of consecutive used parts ending just below the
/// current part.
pub fn partition_no_ksequences(k: u32, order: usize) -> Result<PartitionTable> {
    if k == 0 {
        return Err(QSeriesError::InvalidK);
    }
    let k = k as usize;
    // state[r][n]: run length r < k, sum n
    let mut state = vec![vec![BigInt::zero(); order + 1]; k];
    state[0][0] = BigInt::one();
    for m in 1..=order {
        let mut next = vec![vec![BigInt::zero(); order + 1]; k];
        for n in 0..=order {
            let mut skip = BigInt::zero();
            for row in &state {
                skip += &row[n];
            }
            next[0][n] = skip;
        }
        for r in 0..k - 1 {
            // used[n] = sum_{c >= 1} state[r][n - c m]
            for n in m..=order {
                let t = &state[r][n - m] + &next[r + 1][n - m];
                next[r + 1][n] = t;
            }
        }
        state = next;
    }
    let values = (0..=order)
        .map(|n| state.iter().map(|row| &row[n]).sum())
        .collect();
    Ok(PartitionTable { k: k as u32, values })
}

fn binom2(n: usize) -> usize {
    n * (n.saturating_sub(1)) / 2
}

/// Double series for `G_k(q)`:
///
/// ```text
/// 1/(q;q)_inf * sum_{r,s>=0} (-1)^s q^{C(k+1,2)(s+r)^2 + (k+1)C(r+1,2)}
///                            / ((q^k;q^k)_s (q^{k+1};q^{k+1})_r)
/// ```
pub fn andrews_gk_series(k: u32, order: usize) -> Result<IntSeries> {
    if k == 0 {
        return Err(QSeriesError::InvalidK);
    }
    let k = k as usize;
    let c = binom2(k + 1);
    let mut total = IntSeries::zero(order);
    let mut t = 0;
    while c * t * t <= order {
        for r in 0..=t {
            let s = t - r;
            let e = c * t * t + (k + 1) * binom2(r + 1);
            if e > order {
                continue;
            }
            let sign = if s % 2 == 0 { 1 } else { -1 };
            let mut term = IntSeries::monomial(sign, e, order);
            for j in 1..=s {
                term.div_binomial(1, k * j);
            }
            for j in 1..=r {
                term.div_binomial(1, (k + 1) * j);
            }
            total = &total + &term;
        }
        t += 1;
    }
    for m in 1..=order {
        total.div_binomial(1, m);
    }
    Ok(total)
}

/// `chi(q) = 1 + sum_{n>=1} q^{n^2} / prod_{j=1..n} (1 - q^j + q^{2j})`.
pub fn mock_theta_chi(order: usize) -> IntSeries {
    let mut total = IntSeries::one(order);
    let mut n = 1;
    while n * n <= order {
        let mut term = IntSeries::monomial(1, n * n, order);
        for j in 1..=n {
            term.div_trinomial(j);
        }
        total = &total + &term;
        n += 1;
    }
    total
}

/// `(-q^3;q^3)_inf / (q^2;q^2)_inf * chi(q)`.
pub fn g2_from_chi(order: usize) -> Result<IntSeries> {
    let mut s = &pochhammer(-1, 3, 3, Terms::Infinite, order)? * &mock_theta_chi(order);
    let mut m = 2;
    while m <= order {
        s.div_binomial(1, m);
        m += 2;
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    pub order: usize,
    /// Exponents whose coefficients differ.
    pub mismatches: Vec<usize>,
}

impl IdentityReport {
    pub fn holds(&self) -> bool {
        self.mismatches.is_empty()
    }
}

fn compare(a: &IntSeries, b: &IntSeries) -> IdentityReport {
    let order = a.order().min(b.order());
    IdentityReport {
        order,
        mismatches: (0..=order).filter(|&n| a.coeff(n) != b.coeff(n)).collect(),
    }
}

/// `G_2` from the mock theta product against the partition count.
pub fn check_chi_identity(order: usize) -> Result<IdentityReport> {
    let direct = partition_no_ksequences(2, order)?.to_series();
    Ok(compare(&direct, &g2_from_chi(order)?))
}

/// Double series against the partition count.
pub fn check_andrews_identity(k: u32, order: usize) -> Result<IdentityReport> {
    let direct = partition_no_ksequences(k, order)?.to_series();
    Ok(compare(&direct, &andrews_gk_series(k, order)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BridgeReport {
    pub k: u32,
    pub s: f64,
    pub order: usize,
    /// `sum_{n<=N} p_k(n) q^n * (q;q)_inf` at `q = e^{-s}`.
    pub from_series: f64,
    /// Recurrence value of `P(A_k)`.
    pub from_recurrence: f64,
    pub relative_residual: f64,
}

/// Numerical cross-check of `P(A_k) = G_k(q) (q;q)_inf` at `q = e^{-s}`.
pub fn pak_series_bridge(k: u32, s: f64, order: usize) -> Result<BridgeReport> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(QSeriesError::InvalidS(s));
    }
    let q = (-s).exp();
    let gk = partition_no_ksequences(k, order)?.to_series().eval_f64(q);
    let mut log_euler = 0.0;
    let mut i = 1.0;
    loop {
        let t = (-(-i * s).exp()).ln_1p();
        log_euler += t;
        if t.abs() < 1e-18 {
            break;
        }
        i += 1.0;
    }
    let from_series = gk * log_euler.exp();
    let from_recurrence = prob_ak(k, s, 1e-13)?.value;
    Ok(BridgeReport {
        k,
        s,
        order,
        from_series,
        from_recurrence,
        relative_residual: (from_series - from_recurrence) / from_recurrence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn euler_product_is_pentagonal() {
        let e = pochhammer(1, 1, 1, Terms::Infinite, 10).unwrap();
        assert_eq!(e.coeffs(), &ints(&[1, -1, -1, 0, 0, 1, 0, 1, 0, 0, 0])[..]);
    }

    #[test]
    fn pochhammer_edge_cases() {
        assert_eq!(pochhammer(1, 2, 2, Terms::Finite(0), 5).unwrap(), IntSeries::one(5));
        assert_eq!(*pochhammer(-1, 3, 3, Terms::Infinite, 20).unwrap().coeff(0), BigInt::one());
        assert!(pochhammer(1, 0, 1, Terms::Finite(2), 5).is_err());
        // (q^2;q^2)_2 = (1-q^2)(1-q^4)
        let p = pochhammer(1, 2, 2, Terms::Finite(2), 8).unwrap();
        assert_eq!(p.coeffs(), &ints(&[1, 0, -1, 0, -1, 0, 1, 0, 0])[..]);
    }

    #[test]
    fn inverse_requires_unit() {
        let s = IntSeries::from_coeffs(ints(&[2, 1]), 4);
        assert!(matches!(s.inverse(), Err(QSeriesError::NonUnitConstant(_))));
        let s = IntSeries::from_coeffs(ints(&[-1, 1]), 4);
        let prod = &s * &s.inverse().unwrap();
        assert_eq!(prod, IntSeries::one(4));
    }

    #[test]
    fn multiplication_truncates_to_smaller_order() {
        let a = IntSeries::from_coeffs(ints(&[1, 1, 1]), 2);
        let b = IntSeries::from_coeffs(ints(&[1, 1, 1, 1, 1]), 4);
        assert_eq!((&a * &b).order(), 2);
        assert_eq!((&a * &b).coeffs(), &ints(&[1, 2, 3])[..]);
    }

    #[test]
    fn small_partition_values() {
        let p = partition_count(5);
        assert_eq!(p.values, ints(&[1, 1, 2, 3, 5, 7]));
        let p2 = partition_no_ksequences(2, 4).unwrap();
        assert_eq!(p2.values, ints(&[1, 1, 2, 2, 4]));
        let p1 = partition_no_ksequences(1, 6).unwrap();
        assert_eq!(p1.values, ints(&[1, 0, 0, 0, 0, 0, 0]));
    }

    #[test]
    fn chi_leading_terms() {
        let chi = mock_theta_chi(4);
        assert_eq!(chi.coeffs(), &ints(&[1, 1, 1, 0, 0])[..]);
    }
}
