use serde::Serialize;

use crate::numeric::KahanSum;
use crate::quadrature::integrate;
use crate::threshold::eval_kernel;
use crate::{Error, Result, ThresholdSchedule};

const INV_E: f64 = 0.367_879_441_171_442_33;

/// Root of `int_0^1 dy / (y (1 - ln y) + 1/alpha - 1) = 1` with its residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaStar {
    pub value: f64,
    pub residual: f64,
}

/// `int_0^1 dy / (y (1 - ln y) + 1/alpha - 1)`.
pub fn alpha_star_integral(alpha: f64) -> f64 {
    let c = 1.0 / alpha - 1.0;
    integrate(|y| if y <= 0.0 { 1.0 / c } else { 1.0 / (y * (1.0 - y.ln()) + c) }, 0.0, 1.0, 1e-14).value
}

/// Limit competitive ratio as the sample rate tends to one (about 0.745).
///
/// The integral grows with `alpha`, so bisection on `[1/2, 1)` applies.
pub fn alpha_star() -> AlphaStar {
    let (mut lo, mut hi) = (0.5, 0.999);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if alpha_star_integral(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let value = 0.5 * (lo + hi);
    AlphaStar { value, residual: alpha_star_integral(value) - 1.0 }
}

/// `gamma_k = 1 - alpha + alpha (k p^{k-1} - (k-1) p^k)`.
pub fn gamma(p: f64, alpha: f64, k: usize) -> f64 {
    if k == 1 {
        return 1.0;
    }
    let i = (k - 1) as f64;
    1.0 - alpha + alpha * p.powi(k as i32 - 1) * (1.0 + i * (1.0 - p))
}

/// `mu_k = p (1 - alpha + alpha p^{k-2}) / (k-2)` for `k >= 3`.
pub fn mu(p: f64, alpha: f64, k: usize) -> f64 {
    assert!(k >= 3, "mu_k needs k >= 3");
    p * (1.0 - alpha + alpha * p.powi(k as i32 - 2)) / (k - 2) as f64
}

/// `ln p + alpha (1-p)^2 / p`: log of the second construction time.
pub fn f_term(p: f64, alpha: f64) -> f64 {
    p.ln() + alpha * (1.0 - p) * (1.0 - p) / p
}

/// Truncated evaluation of `g = sum_{i>=1} ln(gamma_{i+1}) / (i (i+1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    pub terms: usize,
    /// Bound on the dropped remainder.
    pub tail_bound: f64,
}

const SERIES_TOL: f64 = 1e-12;
const SERIES_CAP: usize = 1_000_000;

/// `g(p, alpha)`, written as `ln(1-alpha) + sum_i ln(1 + alpha c_i / (1-alpha)) / (i(i+1))`
/// with `c_i = p^i (1 + i (1-p))`. Using `ln(1+x) <= x` the remainder after `n` terms is at most
/// `alpha/(1-alpha) p^{n+1}/(1-p) (1/((n+1)(n+2)) + (1-p)/(n+2))`.
pub fn g_series(p: f64, alpha: f64) -> SeriesValue {
    let ratio = alpha / (1.0 - alpha);
    let mut sum = KahanSum::default();
    sum.add((1.0 - alpha).ln());
    let mut pi = 1.0;
    let mut tail_bound = f64::INFINITY;
    let mut terms = 0;
    for i in 1..=SERIES_CAP {
        let fi = i as f64;
        pi *= p;
        let c = pi * (1.0 + fi * (1.0 - p));
        sum.add((ratio * c).ln_1p() / (fi * (fi + 1.0)));
        terms = i;
        tail_bound = ratio * pi * p / (1.0 - p) * (1.0 / ((fi + 1.0) * (fi + 2.0)) + (1.0 - p) / (fi + 2.0));
        if tail_bound < SERIES_TOL {
            break;
        }
    }
    SeriesValue { value: sum.value(), terms, tail_bound }
}

/// Root of `f(p, alpha) = g(p, alpha)` and diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaTilde {
    pub p: f64,
    pub value: f64,
    /// `f - g` at the returned value.
    pub residual: f64,
    pub series_terms: usize,
    pub series_tail_bound: f64,
}

/// Largest `alpha` for which the explicit threshold construction stays below time 1.
pub fn alpha_tilde(p: f64) -> Result<f64> {
    Ok(alpha_tilde_detail(p)?.value)
}

/// [`alpha_tilde`] with residual and series diagnostics. `f - g` increases in `alpha`.
pub fn alpha_tilde_detail(p: f64) -> Result<AlphaTilde> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    let h = |a: f64| f_term(p, a) - g_series(p, a).value;
    let (mut lo, mut hi) = (1e-6, 1.0 - 1e-6);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 {
            break;
        }
    }
    let value = 0.5 * (lo + hi);
    let g = g_series(p, value);
    Ok(AlphaTilde {
        p,
        value,
        residual: f_term(p, value) - g.value,
        series_terms: g.terms,
        series_tail_bound: g.tail_bound,
    })
}

/// Optimal limit ratio `1 / (e (1-p))` for `p <= 1/e`.
///
/// Checks that the single-threshold rule `(1/e, 1, 1, ...)` attains it for every `k`
/// until `p^k` is negligible.
pub fn closed_alpha_small_p(p: f64) -> Result<f64> {
    if !(0.0..=INV_E).contains(&p) {
        return Err(Error::InvalidArgument(format!("closed form needs 0 <= p <= 1/e, got {p}")));
    }
    let value = INV_E / (1.0 - p);
    let kmax = if p == 0.0 { 1 } else { ((1e-12f64.ln() / p.ln()).ceil() as usize).max(1) };
    let eval = eval_kernel(&ThresholdSchedule::new(p, vec![INV_E], true)?, kmax)?;
    let worst = (1..=kmax).map(|k| eval.f(k) / (1.0 - p.powi(k as i32))).fold(f64::INFINITY, f64::min);
    if worst < value - 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "single-threshold rule reaches only {worst} < {value} at p = {p}"
        )));
    }
    Ok(value)
}

pub(crate) fn inv_e() -> f64 {
    INV_E
}
