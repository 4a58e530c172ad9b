use serde::{Deserialize, Serialize};

use super::rp::RpSolution;
use crate::{Error, Result, ThresholdSchedule};

/// Problems with known optimal threshold schedules at `p = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassicProblem {
    /// Maximize the probability of picking the best item.
    Secretary,
    /// Maximize the probability of picking one of the two best items.
    OneTwoSecretary,
    /// Minimize the expected rank of the picked item.
    MinRank,
}

impl std::str::FromStr for ClassicProblem {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "secretary" => Ok(Self::Secretary),
            "onetwo" | "onetwosecretary" | "12secretary" => Ok(Self::OneTwoSecretary),
            "minrank" => Ok(Self::MinRank),
            _ => Err(crate::Error::InvalidArgument(format!("unknown problem `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicSolution {
    pub problem: ClassicProblem,
    pub schedule: ThresholdSchedule,
    /// Optimal limit reward; for the rank problem this is minus the expected rank.
    pub value: f64,
}

/// Truncation used for the rank problem's closed-form schedule.
pub const MIN_RANK_HORIZON: usize = 1000;

/// Analytic optimal schedules and values.
pub fn classic_closed_forms(problem: ClassicProblem) -> ClassicSolution {
    let (schedule, value) = match problem {
        ClassicProblem::Secretary => {
            let t = (-1.0f64).exp();
            (vec![t], t)
        }
        ClassicProblem::OneTwoSecretary => {
            let t1 = one_two_root();
            (vec![t1, 2.0 / 3.0], one_two_value(t1, 2.0 / 3.0))
        }
        ClassicProblem::MinRank => {
            let times = min_rank_times(MIN_RANK_HORIZON);
            let rank = 1.0 / times[0];
            (times, -rank)
        }
    };
    ClassicSolution { problem, schedule: ThresholdSchedule::new(0.0, schedule, true).expect("valid"), value }
}

/// Root in `(0, 1)` of `x - ln x = 1 + ln(3/2)`.
pub fn one_two_root() -> f64 {
    let target = 1.0 + 1.5f64.ln();
    let (mut lo, mut hi) = (1e-12f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid - mid.ln() > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Probability of picking one of the two best items with times `(t1, t2, 1, 1, ...)`.
pub fn one_two_value(t1: f64, t2: f64) -> f64 {
    t1 * t1 + 2.0 * t1 * ((t2 / t1).ln() + 1.0) - 3.0 * t1 * t2
}

/// `t_i = prod_{m >= i} (m / (m + 2))^{1/(m+1)}` for `i = 1..=k`.
fn min_rank_times(k: usize) -> Vec<f64> {
    const TERMS: usize = 1_000_000;
    let top = TERMS.max(k);
    let term = |m: usize| -(2.0 / m as f64).ln_1p() / (m + 1) as f64;
    // Tail beyond `top`: sum_{m > M} of -2/m^2 + 4/m^3 + O(m^-4).
    let mf = top as f64;
    let mut suffix = -2.0 / (mf + 0.5) + 2.0 / (mf * mf);
    for m in (k + 1..=top).rev() {
        suffix += term(m);
    }
    let mut times = vec![0.0; k];
    for i in (1..=k).rev() {
        suffix += term(i);
        times[i - 1] = suffix.exp();
    }
    times
}

/// Closed-form optimal schedule for the rank problem, truncated after `k` times.
pub fn min_rank_schedule(k: usize) -> ThresholdSchedule {
    ThresholdSchedule::new(0.0, min_rank_times(k), true).expect("valid")
}

/// Expected rank of the picked item under a threshold schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankEstimate {
    pub value: f64,
    /// `(1/2) sum_{i<=K} T_i / t_i^{i+1}` over the listed times.
    pub partial: f64,
    /// Extrapolated remainder of the series.
    pub tail: f64,
}

/// Expected rank `(1/2) sum_i T_i / t_i^{i+1}`, the telescoped form of
/// `sum_i T_i (i/2) (t_i^{-(i+1)} - t_{i+1}^{-(i+1)})`. The listed times are taken as the
/// leading part of an infinite schedule; the remainder is extrapolated from the last term
/// assuming the quadratic decay `T_i / t_i^{i+1} ~ c / i^2` of the optimal schedule.
pub fn min_rank_expected_rank(schedule: &ThresholdSchedule) -> RankEstimate {
    let t = schedule.times();
    let mut u = 1.0;
    let mut partial = 0.0;
    let mut last = 0.0;
    for i in 1..=t.len() {
        if i > 1 {
            u *= (t[i - 2] / t[i - 1]).powi(i as i32 - 1);
        }
        last = 0.5 * u / t[i - 1];
        partial += last;
    }
    let k = t.len() as f64;
    let tail = if k > 0.0 { last * k * k / (k + 0.5) } else { 0.0 };
    RankEstimate { value: partial + tail, partial, tail }
}

/// Optimal cost `C_k` of the times after `t_k`, per unit of `T_k`.
///
/// `C_{i-1} = min_x x^{-i}/2 + x C_i`, run backward from `C_M ~ M e^2 / 2` at `M = 200 k`.
/// The minimizer `x` is near `1 - 2/i`, so a seed error shrinks by roughly `(k/M)^2`.
fn min_rank_tail_cost(k: usize) -> f64 {
    let top = 200 * k.max(50);
    let mut c = top as f64 * std::f64::consts::E.powi(2) / 2.0;
    for i in (k + 1..=top).rev() {
        let x = (i as f64 / (2.0 * c)).powf(1.0 / (i + 1) as f64).min(1.0);
        c = 0.5 * x.powi(-(i as i32)) + x * c;
    }
    c
}

/// Cyclic coordinate descent on the telescoped expected rank
/// `E(t) = (1/2) sum_{i<=K} T_i / t_i^{i+1} + C_K T_K` over `p <= t_1 <= ... <= t_K <= 1`.
///
/// Per unit of `T_{i-1}`, the cost of `t_i` and everything after it is `x^{-i}/2 + u x` with
/// `x = t_i` and `u` the cost past `t_i` per unit of `T_i`. Its minimizer `(i / (2u))^{1/(i+1)}`
/// is clamped to the neighbours. Sweeps run from `t_K` down, so `u` is always current. The
/// reported value is `-E`.
pub fn optimize_min_rank(p: f64, k: usize, max_sweeps: usize) -> Result<RpSolution> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p = {p} not in [0, 1)")));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one time".into()));
    }
    let tail = min_rank_tail_cost(k);
    let mut t: Vec<f64> = (1..=k).map(|i| p + (1.0 - p) * i as f64 / (k + 1) as f64).collect();
    let mut history = Vec::new();
    let mut previous = f64::INFINITY;
    for _ in 0..max_sweeps {
        let mut u = tail;
        for i in (1..=k).rev() {
            let lo = if i == 1 { p } else { t[i - 2] };
            let hi = if i == k { 1.0 } else { t[i] };
            let x = (i as f64 / (2.0 * u)).powf(1.0 / (i + 1) as f64).clamp(lo, hi);
            t[i - 1] = x;
            u = 0.5 * x.powi(-(i as i32)) + u * x;
        }
        history.push(-u);
        if previous - u <= 1e-15 * u {
            let schedule = ThresholdSchedule::new(p, t, true)?;
            return Ok(RpSolution { schedule, value: -u, history, start_values: vec![-u] });
        }
        previous = u;
    }
    Err(Error::MaxSweeps(max_sweeps))
}
