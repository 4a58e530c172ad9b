use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::engine::KernelEngine;
use crate::{Error, Instance, Result, ThresholdSchedule};

/// Value of the reduced problem at a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RpValue {
    pub value: f64,
    /// Quadrature error bound propagated through the value differences.
    pub error: f64,
}

/// Expected limit reward `Y_1 - sum_k (Y_k - Y_{k+1}) (1 - F_k(t))` of a threshold schedule.
pub fn rp_objective(instance: &Instance, schedule: &ThresholdSchedule) -> Result<RpValue> {
    let m = instance.distinct_prefix();
    if m == 0 {
        return Ok(RpValue { value: instance.value(1), error: 0.0 });
    }
    let engine = KernelEngine::new(schedule.times().to_vec(), schedule.tail_is_one(), m);
    let probs = engine.rank_probs();
    let mut f = 0.0;
    let mut value = instance.value(1);
    let mut spread = 0.0;
    for k in 1..=m {
        f += probs[k - 1];
        let d = instance.value(k) - instance.value(k + 1);
        value -= d * (1.0 - f.min(1.0));
        spread += d;
    }
    if !value.is_finite() {
        return Err(Error::Diverged(format!("non-finite partial sum {value}")));
    }
    Ok(RpValue { value, error: spread * engine.error() })
}

/// Maximizes a concave function on `[lo, hi]` by golden-section search.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, xtol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    if b - a <= xtol {
        let x = 0.5 * (a + b);
        return (x, f(x));
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > xtol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Knobs for [`optimize_rp_with`].
#[derive(Debug, Clone)]
pub struct RpOptions {
    pub max_sweeps: usize,
    /// A sweep improving the objective by less than this ends the ascent.
    pub sweep_tol: f64,
    /// Golden-section bracket width.
    pub xtol: f64,
    /// Random restarts on top of the linear initialization.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for RpOptions {
    fn default() -> Self {
        Self { max_sweeps: 500, sweep_tol: 1e-12, xtol: 1e-10, restarts: 5, seed: 0x5eed }
    }
}

/// Best schedule found by coordinate ascent.
#[derive(Debug, Clone, Serialize)]
pub struct RpSolution {
    pub schedule: ThresholdSchedule,
    pub value: f64,
    /// Objective after each sweep of the winning start.
    pub history: Vec<f64>,
    /// Final value of every start, linear initialization first.
    pub start_values: Vec<f64>,
}

/// `max(m, ceil(ln(1e-6) / ln p))`: horizon past which the ignored tail mass is below 1e-6.
pub fn default_horizon(m: usize, p: f64) -> usize {
    if p <= 0.0 {
        return m.max(1);
    }
    m.max((1e-6f64.ln() / p.ln()).ceil() as usize).max(1)
}

/// Coordinate ascent on the reduced problem with the default options.
pub fn optimize_rp(instance: &Instance, p: f64, k: usize) -> Result<RpSolution> {
    optimize_rp_with(instance, p, k, &RpOptions::default())
}

/// Cyclic coordinate ascent over `t_1..t_m` with golden-section line searches on
/// `[max(p, t_{i-1}), t_{i+1}]`; times `m+1..K` stay at 1. Sweeps visit coordinates from the
/// last to the first because the optimality condition for `t_i` involves only later times.
pub fn optimize_rp_with(instance: &Instance, p: f64, k: usize, opts: &RpOptions) -> Result<RpSolution> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p = {p} not in [0, 1)")));
    }
    let m = instance.distinct_prefix();
    if k < m {
        return Err(Error::InvalidArgument(format!("horizon {k} below the {m} distinct values")));
    }
    let base = instance.default_tail();
    let weights: Vec<f64> = (1..=m).map(|j| instance.value(j) - base).collect();
    let objective = move |probs: &[f64]| base + probs.iter().zip(&weights).map(|(p, w)| p * w).sum::<f64>();

    let mut starts: Vec<Vec<f64>> = vec![(1..=m).map(|i| p + (1.0 - p) * i as f64 / (k + 1) as f64).collect()];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.restarts {
        let mut t: Vec<f64> = (0..m).map(|_| p + (1.0 - p) * rng.gen::<f64>()).collect();
        t.sort_by(f64::total_cmp);
        starts.push(t);
    }
    let runs: Vec<Result<Ascent>> =
        crate::sim::par_map(starts, |t| ascend(t, p, m, &objective, opts));
    let mut best: Option<(Vec<f64>, f64, Vec<f64>)> = None;
    let mut start_values = Vec::new();
    for run in runs {
        let run = run?;
        if !run.3 {
            return Err(Error::MaxSweeps(opts.max_sweeps));
        }
        let run = (run.0, run.1, run.2);
        start_values.push(run.1);
        if best.as_ref().is_none_or(|b| run.1 > b.1) {
            best = Some(run);
        }
    }
    let (mut times, value, history) = best.expect("at least one start");
    times.resize(k, 1.0);
    Ok(RpSolution { schedule: ThresholdSchedule::new(p, times, true)?, value, history, start_values })
}

/// Final times, value, per-sweep history and whether the sweep tolerance was met.
pub(crate) type Ascent = (Vec<f64>, f64, Vec<f64>, bool);

/// Coordinate ascent from one start on an objective of the rank probabilities.
pub(crate) fn ascend<O: Fn(&[f64]) -> f64>(
    start: Vec<f64>,
    p: f64,
    kmax: usize,
    objective: &O,
    opts: &RpOptions,
) -> Result<Ascent> {
    let mut engine = KernelEngine::new(start, true, kmax);
    let mut value = objective(&engine.rank_probs());
    let mut history = vec![value];
    let mut buf = vec![0.0; kmax];
    let n = engine.times().len();
    for _ in 0..opts.max_sweeps {
        let before = value;
        for s in (1..=n).rev() {
            let lo = if s == 1 { p } else { engine.times()[s - 2] }.max(1e-9);
            let hi = engine.times().get(s).copied().unwrap_or(1.0);
            if hi <= lo {
                continue;
            }
            let frame = engine.frame(s);
            let (t, v) = golden_max(
                |t| {
                    let prop = engine.propose(s, t);
                    engine.probs_with(&frame, &prop, &mut buf);
                    objective(&buf)
                },
                lo,
                hi,
                opts.xtol,
            );
            if v > value {
                engine.commit(engine.propose(s, t));
                value = v;
            }
        }
        history.push(value);
        if value - before < opts.sweep_tol {
            return Ok((engine.times().to_vec(), value, history, true));
        }
    }
    Ok((engine.times().to_vec(), value, history, false))
}
