//! Closed-form probability kernels.

use crate::numeric::{binom, ln_binom, EXACT_BINOM_LIMIT};

/// `P(NegBin(l, t) <= k) = sum_{j=l}^{k} C(j-1, l-1) (1-t)^{j-l} t^l`; zero when `k < l`.
pub fn negbin_le(k: usize, l: usize, t: f64) -> f64 {
    assert!(l >= 1, "negbin_le needs l >= 1");
    if k < l {
        return 0.0;
    }
    let q = 1.0 - t;
    let mut term = t.powi(l as i32);
    let mut sum = term;
    for j in l..k {
        term *= j as f64 / (j + 1 - l) as f64 * q;
        sum += term;
    }
    sum.clamp(0.0, 1.0)
}

/// `P(B_{i,l} | C_{i,j}) = C(j-1, l-1) C(N-j, i-l) / C(N-1, i-1)`: the chance that the item of
/// global rank `j`, arriving at step `i`, is the `l`-th best among the first `i` arrivals.
pub fn local_rank_prob(n: usize, i: usize, j: usize, l: usize) -> f64 {
    assert!(l >= 1 && l <= i && i <= n && j >= 1 && j <= n, "local_rank_prob domain");
    if l > j || i - l > n - j {
        return 0.0;
    }
    let (n, i, j, l) = (n as u64, i as u64, j as u64, l as u64);
    if n <= EXACT_BINOM_LIMIT {
        binom(j - 1, l - 1) * binom(n - j, i - l) / binom(n - 1, i - 1)
    } else {
        (ln_binom(j - 1, l - 1) + ln_binom(n - j, i - l) - ln_binom(n - 1, i - 1)).exp()
    }
}

/// Probability that the best online item has global rank `j` when exactly `h` of `n`
/// items are in the history.
pub fn opt_dist_dependent(n: usize, h: usize, j: usize) -> f64 {
    assert!(h < n && j >= 1 && j <= n, "opt_dist_dependent domain");
    if j > h + 1 {
        return 0.0;
    }
    let mut prod = 1.0;
    for s in 0..j - 1 {
        prod *= (h - s) as f64 / (n - s) as f64;
    }
    (n - h) as f64 / (n - j + 1) as f64 * prod
}

/// Cumulative `sum_{j<=k} opt_dist_dependent(n, h, j)` for `k = 1..=h+1`,
/// built with a running product.
pub fn opt_cdf_dependent(n: usize, h: usize) -> Vec<f64> {
    assert!(h < n);
    let mut out = Vec::with_capacity(h + 1);
    let mut prod = 1.0;
    let mut acc = 0.0;
    for j in 1..=h + 1 {
        if j >= 2 {
            prod *= (h + 2 - j) as f64 / (n + 2 - j) as f64;
        }
        acc += (n - h) as f64 / (n - j + 1) as f64 * prod;
        out.push(acc.min(1.0));
    }
    out
}

/// Probability that the best online item has global rank `j` under independent sampling.
pub fn opt_dist_independent(p: f64, j: usize) -> f64 {
    assert!(j >= 1 && (0.0..1.0).contains(&p));
    (1.0 - p) * p.powi(j as i32 - 1)
}

/// `tau * P(Binomial(n, tau) <= m)` for every `n = 0..len`, written into `out`.
///
/// This is `sum_{l <= min(n+1, m+1)} C(n, l-1) (1-tau)^{n+1-l} tau^l`, the inner sum of the
/// limit kernel for rank `j = n + 1` inside threshold interval `i = m + 1`.
pub fn capped_binomial_cdf(tau: f64, m: usize, out: &mut [f64]) {
    let q = 1.0 - tau;
    let mut cdf = 1.0;
    let mut pmf = 0.0;
    for (n, slot) in out.iter_mut().enumerate() {
        if n > m {
            cdf -= tau * pmf;
            pmf *= n as f64 / (n - m) as f64 * q;
        } else if n == m {
            pmf = tau.powi(m as i32);
        }
        *slot = tau * cdf.max(0.0);
    }
}
