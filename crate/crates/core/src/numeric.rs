//! Scalar abstraction shared by the exact and floating-point code paths,
//! plus binomial coefficients and compensated summation.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

/// Ordered field used by the simplex solver and the backward-induction oracle.
pub trait Field:
    Clone
    + Debug
    + PartialOrd
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn from_u64(n: u64) -> Self;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;
    /// Magnitudes at or below this are treated as zero by pivoting rules.
    fn tolerance() -> Self;
    /// Probability that global rank `j` is the `l`-th best among the first `i` of `n` items,
    /// given it arrived at step `i`.
    fn local_rank_prob(n: u64, i: u64, j: u64, l: u64) -> Self;

    fn is_negligible(&self) -> bool {
        self.abs() <= Self::tolerance()
    }
    fn is_positive(&self) -> bool {
        *self > Self::tolerance()
    }
    fn is_negative(&self) -> bool {
        *self < -Self::tolerance()
    }
}

impl Field for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_u64(n: u64) -> Self {
        n as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn tolerance() -> Self {
        1e-11
    }
    fn local_rank_prob(n: u64, i: u64, j: u64, l: u64) -> Self {
        crate::kernels::local_rank_prob(n as usize, i as usize, j as usize, l as usize)
    }
}

impl Field for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite value")
    }
    fn from_u64(n: u64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn tolerance() -> Self {
        Zero::zero()
    }
    fn local_rank_prob(n: u64, i: u64, j: u64, l: u64) -> Self {
        if l > i || l > j || i - l > n - j {
            return Zero::zero();
        }
        let num = binom_big(j - 1, l - 1) * binom_big(n - j, i - l);
        BigRational::new(num, binom_big(n - 1, i - 1))
    }
}

/// Largest `n` for which binomials are computed in exact integer arithmetic.
pub const EXACT_BINOM_LIMIT: u64 = 60;

/// Exact binomial coefficient; valid without overflow for `n <= 60`.
pub fn binom_u64(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for r in 0..k {
        acc = acc * (n - r) as u128 / (r + 1) as u128;
    }
    acc as u64
}

/// Arbitrary-precision binomial coefficient.
pub fn binom_big(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for r in 0..k {
        acc = acc * BigInt::from(n - r) / BigInt::from(r + 1);
    }
    acc
}

/// `ln(n!)`: summed directly for small `n`, Stirling series otherwise.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 256 {
        return (2..=n).map(|k| (k as f64).ln()).sum();
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn ln_binom(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Binomial coefficient as a float: exact integers up to [`EXACT_BINOM_LIMIT`], log-space above.
pub fn binom(n: u64, k: u64) -> f64 {
    if k > n {
        0.0
    } else if n <= EXACT_BINOM_LIMIT {
        binom_u64(n, k) as f64
    } else {
        ln_binom(n, k).exp()
    }
}

/// Clamp a computed probability into `[0, 1]`, tolerating rounding up to 1e-12.
pub fn clamp_prob(x: f64) -> crate::Result<f64> {
    const TOL: f64 = 1e-12;
    if !(-TOL..=1.0 + TOL).contains(&x) {
        return Err(crate::Error::ProbabilityOutOfRange(x));
    }
    Ok(x.clamp(0.0, 1.0))
}

/// Kahan–Babuška compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &KahanSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials_agree_across_paths() {
        for n in 0..=60u64 {
            for k in 0..=n {
                let exact = binom_u64(n, k) as f64;
                assert_eq!(binom_big(n, k).to_f64().unwrap(), exact);
                let logspace = ln_binom(n, k).exp();
                assert!((logspace - exact).abs() <= 1e-12 * exact, "C({n},{k})");
            }
        }
    }

    #[test]
    fn stirling_branch_is_continuous() {
        let direct: f64 = (2..=300u64).map(|k| (k as f64).ln()).sum();
        assert!((ln_factorial(300) - direct).abs() < 1e-10);
    }

    #[test]
    fn kahan_beats_naive_sum() {
        let xs: Vec<f64> = std::iter::once(1.0).chain(std::iter::repeat_n(1e-16, 10_000)).collect();
        let k: KahanSum = xs.iter().copied().collect();
        assert!((k.value() - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn clamp_rejects_large_violations() {
        assert_eq!(clamp_prob(1.0 + 1e-13).unwrap(), 1.0);
        assert!(clamp_prob(1.0 + 1e-6).is_err());
        assert!(clamp_prob(f64::NAN).is_err());
    }
}
