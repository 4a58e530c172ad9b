use serde::Serialize;

use super::alpha::{f_term, g_series, gamma, mu};
use crate::quadrature::integrate;
use crate::{Error, Result, ThresholdSchedule};

/// Explicit threshold schedule built from `(p, alpha)` with its auxiliary sequences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstructionState {
    pub p: f64,
    pub alpha: f64,
    /// `gammas[k-1] = gamma_k` for `k = 1..=K`.
    pub gammas: Vec<f64>,
    pub times: ThresholdSchedule,
    /// `mus[k-3] = mu_k` for `k = 3..=K+1`.
    pub mus: Vec<f64>,
    /// `ln lim_k t_k = f(p, alpha) - g(p, alpha)`.
    pub log_limit: f64,
}

/// Slack on `log_limit <= 0` that absorbs the bisection residual of `alpha_tilde`.
const LIMIT_SLACK: f64 = 1e-9;

/// Builds `t_1 = p`, `t_2 = p exp(alpha (1-p)^2 / p)` and
/// `t_{k+1} = t_k (gamma_{k-1} / gamma_k)^{1/(k-1)}`, `K` times in total.
///
/// The recursion is evaluated through its telescoped logarithm
/// `ln t_{k+1} = f - sum_{r=2}^{k-1} ln(gamma_r) / (r (r-1)) - ln(gamma_k) / (k-1)`.
/// Fails with `LimitExceedsOne` when the limit of the times is above 1.
pub fn construct_thresholds(p: f64, alpha: f64, k: usize) -> Result<ConstructionState> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::ProbabilityOutOfRange(alpha));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("construction needs K >= 1".into()));
    }
    let log_limit = f_term(p, alpha) - g_series(p, alpha).value;
    if log_limit > LIMIT_SLACK {
        return Err(Error::LimitExceedsOne(log_limit.exp()));
    }
    let f = f_term(p, alpha);
    let gammas: Vec<f64> = (1..=k).map(|r| gamma(p, alpha, r)).collect();
    let mut times = Vec::with_capacity(k);
    times.push(p);
    let mut partial = 0.0;
    for j in 2..=k {
        // j = k + 1 in the recursion: t_j from gamma_2..gamma_{j-1}.
        let log_t = if j == 2 {
            f
        } else {
            let last = j - 1;
            if last >= 3 {
                let r = last - 1;
                partial += gammas[r - 1].ln() / (r * (r - 1)) as f64;
            }
            f - partial - gammas[last - 1].ln() / (last - 1) as f64
        };
        let prev = *times.last().expect("non-empty");
        times.push(log_t.exp().clamp(prev, 1.0));
    }
    let mus = (3..=k + 1).map(|r| mu(p, alpha, r)).collect();
    Ok(ConstructionState { p, alpha, gammas, times: ThresholdSchedule::new(p, times, true)?, mus, log_limit })
}

impl ConstructionState {
    fn t(&self, k: usize) -> f64 {
        self.times.time(k)
    }

    /// `ln T_k` with `T_k = t_1 ... t_k`.
    fn log_big_t(&self, k: usize) -> f64 {
        (1..=k).map(|r| self.t(r).ln()).sum()
    }

    /// `mu_k` for `k >= 3`.
    pub fn mu(&self, k: usize) -> f64 {
        self.mus.get(k - 3).copied().unwrap_or_else(|| mu(self.p, self.alpha, k))
    }

    /// First-rank balance: `alpha (1-p) - (p ln(t_2/p) + p - mu_3)`.
    pub fn first_residual(&self) -> f64 {
        let p = self.p;
        self.alpha * (1.0 - p) - (p * (self.t(2) / p).ln() + p - self.mu(3))
    }

    /// Rank-`k` balance for `k >= 2`:
    /// `alpha (1-p) p^{k-1} - (T_k / ((k-1) t_k^{k-1}) - mu_{k+1})`.
    pub fn rank_residual(&self, k: usize) -> f64 {
        assert!(k >= 2 && k <= self.times.len(), "rank residual needs 2 <= k <= K");
        let lhs = self.alpha * (1.0 - self.p) * self.p.powi(k as i32 - 1);
        let ratio = (self.log_big_t(k) - (k - 1) as f64 * self.t(k).ln()).exp() / (k - 1) as f64;
        lhs - (ratio - self.mu(k + 1))
    }
}

/// Survival `S(t) = T_i / t^i` of a threshold schedule on `[t_i, t_{i+1})`, and `i`.
fn survival(schedule: &ThresholdSchedule, t: f64) -> (f64, usize) {
    let times = schedule.times();
    let i = times.iter().take_while(|&&ti| ti <= t).count();
    let log_s: f64 = times[..i].iter().map(|ti| ti.ln()).sum::<f64>() - i as f64 * t.ln();
    (if i == 0 { 1.0 } else { log_s.exp() }, i)
}

/// Stopping density `q(t, l)` of a threshold schedule: `S(t)/t` when `t >= t_l`, else 0.
pub fn implied_q(schedule: &ThresholdSchedule, t: f64, l: usize) -> f64 {
    let (s, i) = survival(schedule, t);
    if l >= 1 && l <= i {
        s / t
    } else {
        0.0
    }
}

/// Largest left side of `t q(t, l) + int_p^t sum_s q(s, s') ds <= 1` over a grid of `t` and
/// ranks `l`, with the integral evaluated by quadrature between consecutive breakpoints.
pub fn implied_feasibility(schedule: &ThresholdSchedule, grid: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = grid.iter().copied().filter(|t| *t > schedule.p() && *t <= 1.0).collect();
    sorted.sort_by(f64::total_cmp);
    let total_rate = |s: f64| {
        let (surv, i) = survival(schedule, s);
        i as f64 * surv / s
    };
    let breaks: Vec<f64> = schedule.times().to_vec();
    let mut worst: f64 = 0.0;
    let mut acc = 0.0;
    let mut from = schedule.p().max(f64::MIN_POSITIVE);
    for t in sorted {
        let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&b| b > from && b < t).collect();
        cuts.push(t);
        for c in cuts {
            acc += integrate(total_rate, from, c, 1e-13).value;
            from = c;
        }
        let (_, i) = survival(schedule, t);
        worst = worst.max(t * implied_q(schedule, t, i.max(1)) + acc);
    }
    worst
}
