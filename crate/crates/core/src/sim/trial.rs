use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::lp::StoppingRuleMatrix;
use crate::{Error, Instance, Result, SamplingModel, ThresholdSchedule};

/// Outcome of one simulated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Global rank (1 = best) of the accepted item.
    pub selected_rank: Option<usize>,
    /// `Y_{selected_rank}`, or `Y_{N+1}` when nothing was accepted.
    pub selected_value: f64,
    /// Best value in the online set, or `Y_{N+1}` when it is empty.
    pub opt_value: f64,
    /// Global rank of the best online item.
    pub opt_rank: Option<usize>,
    /// Arrival time of the accepted item; for stopping-rule matrices, the step divided by `N`.
    pub stop_time: Option<f64>,
}

/// Online algorithm driven by the simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Algorithm {
    Threshold(ThresholdSchedule),
    Policy(StoppingRuleMatrix),
    /// Runs a threshold rule tuned for sample rate `p_from` at the higher rate `p_to`: items
    /// arriving before `f = (p_to - p_from)/(1 - p_from)` get value zero and fresh uniform
    /// times on `[f, 1]`, and the base rule sees times rescaled from `[f, 1]` to `[0, 1]`.
    Lifted { p_from: f64, p_to: f64, base: Box<Algorithm> },
}

/// Per-trial generator: stream `trial` of the ChaCha8 generator keyed by `seed`.
pub(crate) fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Independent generator for the re-timed items of a lifted rule.
fn lift_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    trial_rng(seed ^ 0x6c69_6674_5f74_696d, trial)
}

/// Largest local rank that can still be accepted before time `b`; `usize::MAX` if unbounded.
fn rank_cap(schedule: &ThresholdSchedule, b: f64) -> usize {
    let times = schedule.times();
    let listed = times.iter().take_while(|&&t| t <= b).count();
    if listed == times.len() && !schedule.tail_is_one() && !times.is_empty() {
        usize::MAX
    } else {
        listed
    }
}

/// Result of a threshold rule fed with items in order of decreasing value.
pub(crate) struct RankedRun {
    /// Position in the feed and arrival time of the accepted item.
    pub(crate) selected: Option<(usize, f64)>,
    /// Position of the first online item in the feed.
    pub(crate) first_online: Option<usize>,
}

/// Runs a threshold rule on items supplied best first as `(time, in_history)`.
///
/// An item's local rank depends only on better items, so the accepted item is the acceptable
/// one with the earliest time. Feeding stops once no worse item can be accepted earlier: every
/// later item has at least `c` better items before `t_1`, where `c` counts fed items before
/// `t_1`, so it is rejected once `c` reaches the number of thresholds below the current pick.
pub(crate) fn run_ranked<S: FnMut(usize) -> (f64, bool)>(
    schedule: &ThresholdSchedule,
    n: usize,
    need_online: bool,
    mut source: S,
) -> RankedRun {
    let t1 = schedule.time(1);
    let mut seen: Vec<f64> = Vec::new();
    let mut below_t1 = 0usize;
    let mut selected: Option<(usize, f64)> = None;
    let mut first_online = None;
    let mut settled = rank_cap(schedule, 1.0) == 0;
    for r in 0..n {
        if settled && (first_online.is_some() || !need_online) {
            break;
        }
        let (t, history) = source(r);
        if !history && first_online.is_none() {
            first_online = Some(r);
        }
        if settled {
            continue;
        }
        let pos = seen.partition_point(|&s| s < t);
        if !history && t >= schedule.time(pos + 1) && selected.is_none_or(|(_, b)| t < b) {
            selected = Some((r, t));
        }
        seen.insert(pos, t);
        if t < t1 {
            below_t1 += 1;
        }
        settled = below_t1 >= rank_cap(schedule, selected.map_or(1.0, |(_, b)| b));
    }
    RankedRun { selected, first_online }
}

fn record(instance: &Instance, selected: Option<(usize, f64)>, opt_rank: Option<usize>) -> TrialRecord {
    let tail = instance.default_tail();
    TrialRecord {
        selected_rank: selected.map(|(r, _)| r),
        selected_value: selected.map_or(tail, |(r, _)| instance.value(r)),
        opt_value: opt_rank.map_or(tail, |r| instance.value(r)),
        opt_rank,
        stop_time: selected.map(|(_, t)| t),
    }
}

/// `N + 1` sorted uniforms' first `N` entries from normalized exponential spacings.
fn sorted_uniforms<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = (0..n)
        .map(|_| {
            acc += -(1.0 - rng.gen::<f64>()).ln();
            acc
        })
        .collect();
    let total = acc - (1.0 - rng.gen::<f64>()).ln();
    out.iter_mut().for_each(|v| *v /= total);
    out
}

fn threshold_trial(
    instance: &Instance,
    schedule: &ThresholdSchedule,
    model: &SamplingModel,
    rng: &mut ChaCha8Rng,
) -> TrialRecord {
    let n = instance.n();
    let run = match *model {
        SamplingModel::Independent { p } => run_ranked(schedule, n, true, |_| {
            let t: f64 = rng.gen();
            (t, t < p)
        }),
        SamplingModel::Dependent { h, .. } => {
            let times = sorted_uniforms(n, rng);
            let mut slots: Vec<usize> = (0..n).collect();
            run_ranked(schedule, n, true, |r| {
                let j = rng.gen_range(r..n);
                slots.swap(r, j);
                (times[slots[r]], slots[r] < h)
            })
        }
    };
    record(instance, run.selected.map(|(r, t)| (r + 1, t)), run.first_online.map(|r| r + 1))
}

fn lifted_trial(
    instance: &Instance,
    p_from: f64,
    p_to: f64,
    base: &ThresholdSchedule,
    model: &SamplingModel,
    seed: u64,
    trial: u64,
) -> Result<TrialRecord> {
    if !matches!(model, SamplingModel::Independent { p } if (p - p_to).abs() < 1e-12) {
        return Err(Error::InvalidArgument(format!("lifted rule needs independent sampling at p = {p_to}")));
    }
    let n = instance.n();
    let mut rng = trial_rng(seed, trial);
    let mut retime = lift_rng(seed, trial);
    let f = (p_to - p_from) / (1.0 - p_from);
    let times: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
    // Zeroed items go below every kept item; both groups keep their original order.
    let mut order: Vec<usize> = (0..n).filter(|&r| times[r] >= f).collect();
    let kept = order.len();
    order.extend((0..n).filter(|&r| times[r] < f));
    let sim_time: Vec<f64> = order
        .iter()
        .map(|&r| if times[r] >= f { times[r] } else { f + (1.0 - f) * retime.gen::<f64>() })
        .collect();
    let run = run_ranked(base, n, false, |k| {
        let s = (sim_time[k] - f) / (1.0 - f);
        (s, s < p_from)
    });
    let selected = run.selected.filter(|&(k, _)| k < kept).map(|(k, _)| (order[k] + 1, sim_time[k]));
    let opt_rank = (0..n).find(|&r| times[r] >= p_to).map(|r| r + 1);
    Ok(record(instance, selected, opt_rank))
}

/// Fenwick tree counting inserted ranks.
struct Fenwick(Vec<u32>);

impl Fenwick {
    fn new(n: usize) -> Self {
        Self(vec![0; n + 1])
    }

    fn insert(&mut self, mut i: usize) {
        while i < self.0.len() {
            self.0[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Number of inserted ranks `<= i`.
    fn count(&self, mut i: usize) -> usize {
        let mut s = 0;
        while i > 0 {
            s += self.0[i] as usize;
            i -= i & i.wrapping_neg();
        }
        s
    }
}

/// Pre-computed conditional stopping probabilities of a rule.
pub(crate) struct PolicyTable {
    h: usize,
    n: usize,
    /// `stop[i - h - 1][l - 1]`.
    stop: Vec<Vec<f64>>,
}

impl PolicyTable {
    pub(crate) fn new(rule: &StoppingRuleMatrix) -> Result<Self> {
        let violation = rule.max_violation();
        if violation > 1e-9 {
            return Err(Error::InfeasiblePolicy(violation));
        }
        let (h, n) = (rule.h(), rule.n());
        let mut done = 0.0;
        let mut stop = Vec::with_capacity(n - h);
        for i in h + 1..=n {
            let reach = 1.0 - done;
            stop.push(
                (1..=i)
                    .map(|l| if reach > 0.0 { (i as f64 * rule.x(i, l) / reach).clamp(0.0, 1.0) } else { 0.0 })
                    .collect::<Vec<f64>>(),
            );
            done += (1..=i).map(|l| rule.x(i, l)).sum::<f64>();
        }
        Ok(Self { h, n, stop })
    }
}

fn policy_trial(instance: &Instance, table: &PolicyTable, rng: &mut ChaCha8Rng) -> TrialRecord {
    let n = table.n;
    let mut ranks: Vec<usize> = (1..=n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        ranks.swap(i, j);
    }
    let mut tree = Fenwick::new(n);
    let mut selected = None;
    for (step0, &rank) in ranks.iter().enumerate() {
        let i = step0 + 1;
        if i > table.h && selected.is_none() {
            let l = tree.count(rank - 1) + 1;
            let q = table.stop[i - table.h - 1][l - 1];
            if q > 0.0 && rng.gen::<f64>() < q {
                selected = Some((rank, i as f64 / n as f64));
            }
        }
        tree.insert(rank);
    }
    let opt_rank = ranks[table.h..].iter().copied().min();
    record(instance, selected, opt_rank)
}

/// Compiled algorithm and model for repeated trials.
pub(crate) enum Runner<'a> {
    Threshold(&'a ThresholdSchedule),
    Policy(PolicyTable),
    Lifted { p_from: f64, p_to: f64, base: &'a ThresholdSchedule },
}

impl<'a> Runner<'a> {
    pub(crate) fn new(instance: &Instance, algorithm: &'a Algorithm, model: &SamplingModel) -> Result<Self> {
        match algorithm {
            Algorithm::Threshold(s) => {
                if (s.p() - model.p()).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "schedule built for p = {} but the model has p = {}",
                        s.p(),
                        model.p()
                    )));
                }
                if let SamplingModel::Dependent { n, .. } = *model {
                    if n != instance.n() {
                        return Err(Error::InvalidArgument(format!("model has N = {n}, instance has {}", instance.n())));
                    }
                }
                Ok(Self::Threshold(s))
            }
            Algorithm::Policy(rule) => {
                match *model {
                    SamplingModel::Dependent { h, n } if h == rule.h() && n == rule.n() => {}
                    _ => return Err(Error::InvalidArgument("stopping-rule matrix needs the matching dependent model".into())),
                }
                if instance.n() != rule.n() {
                    return Err(Error::InvalidArgument("instance length differs from rule".into()));
                }
                Ok(Self::Policy(PolicyTable::new(rule)?))
            }
            Algorithm::Lifted { p_from, p_to, base } => match base.as_ref() {
                Algorithm::Threshold(s) if (s.p() - p_from).abs() < 1e-12 => {
                    Ok(Self::Lifted { p_from: *p_from, p_to: *p_to, base: s })
                }
                _ => Err(Error::InvalidArgument("lifting needs a threshold rule built for the lower rate".into())),
            },
        }
    }

    pub(crate) fn run(&self, instance: &Instance, model: &SamplingModel, seed: u64, trial: u64) -> Result<TrialRecord> {
        match self {
            Self::Threshold(s) => Ok(threshold_trial(instance, s, model, &mut trial_rng(seed, trial))),
            Self::Policy(table) => Ok(policy_trial(instance, table, &mut trial_rng(seed, trial))),
            Self::Lifted { p_from, p_to, base } => lifted_trial(instance, *p_from, *p_to, base, model, seed, trial),
        }
    }
}

/// One run of a threshold rule (trial 0 of `seed`).
pub fn run_threshold_alg(
    instance: &Instance,
    schedule: &ThresholdSchedule,
    model: &SamplingModel,
    seed: u64,
) -> TrialRecord {
    threshold_trial(instance, schedule, model, &mut trial_rng(seed, 0))
}

/// One run of a stopping-rule matrix under the dependent model (trial 0 of `seed`).
pub fn run_policy_matrix(instance: &Instance, rule: &StoppingRuleMatrix, seed: u64) -> Result<TrialRecord> {
    if instance.n() != rule.n() {
        return Err(Error::InvalidArgument("instance length differs from rule".into()));
    }
    Ok(policy_trial(instance, &PolicyTable::new(rule)?, &mut trial_rng(seed, 0)))
}

/// One run of any algorithm (trial `trial` of `seed`).
pub fn run_trial(
    instance: &Instance,
    algorithm: &Algorithm,
    model: &SamplingModel,
    seed: u64,
    trial: u64,
) -> Result<TrialRecord> {
    Runner::new(instance, algorithm, model)?.run(instance, model, seed, trial)
}
