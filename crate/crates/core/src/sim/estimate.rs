use serde::{Deserialize, Serialize};

use super::par_map;
use super::trial::{Algorithm, Runner, TrialRecord};
use crate::numeric::KahanSum;
use crate::{Error, Instance, Result, SamplingModel, ThresholdSchedule};

/// Trials per parallel task. Fixed so that the merge order never depends on the thread count.
const CHUNK: u64 = 4096;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(trials)`.
    pub stderr: f64,
    pub trials: usize,
}

/// Running first and second moments of one or two paired quantities.
#[derive(Debug, Clone, Default)]
pub(crate) struct Moments {
    n: usize,
    sum: KahanSum,
    sq: KahanSum,
}

impl Moments {
    pub(crate) fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum.add(x);
        self.sq.add(x * x);
    }

    pub(crate) fn merge(&mut self, other: &Self) {
        self.n += other.n;
        self.sum.merge(&other.sum);
        self.sq.merge(&other.sq);
    }

    pub(crate) fn estimate(&self) -> Estimate {
        let n = self.n.max(1) as f64;
        let mean = self.sum.value() / n;
        let var = if self.n > 1 { ((self.sq.value() - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
        Estimate { mean, stderr: (var / n).sqrt(), trials: self.n }
    }
}

/// Paired sums for the algorithm and the benchmark, including the cross moment.
#[derive(Debug, Clone, Default)]
pub(crate) struct Paired {
    alg: Moments,
    opt: Moments,
    cross: KahanSum,
}

impl Paired {
    pub(crate) fn push(&mut self, a: f64, o: f64) {
        self.alg.push(a);
        self.opt.push(o);
        self.cross.add(a * o);
    }

    pub(crate) fn merge(&mut self, other: &Self) {
        self.alg.merge(&other.alg);
        self.opt.merge(&other.opt);
        self.cross.merge(&other.cross);
    }

    pub(crate) fn ratio(&self) -> Result<RatioEstimate> {
        let alg = self.alg.estimate();
        let opt = self.opt.estimate();
        if opt.mean == 0.0 {
            return Err(Error::DegenerateOpt);
        }
        let ratio = alg.mean / opt.mean;
        // Delta method with the paired covariance.
        let n = self.alg.n as f64;
        let cov = if n > 1.0 { (self.cross.value() - n * alg.mean * opt.mean) / (n - 1.0) / n } else { 0.0 };
        let var = (alg.stderr.powi(2) - 2.0 * ratio * cov + ratio * ratio * opt.stderr.powi(2)) / (opt.mean * opt.mean);
        Ok(RatioEstimate { alg, opt, ratio, ratio_stderr: var.max(0.0).sqrt() })
    }
}

/// Paired estimates of the algorithm's reward and the online maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub alg: Estimate,
    pub opt: Estimate,
    /// `alg.mean / opt.mean`.
    pub ratio: f64,
    /// Delta-method standard error of the ratio.
    pub ratio_stderr: f64,
}

/// Runs `trials` trials in fixed chunks, folding each chunk with `fold` and merging in order.
pub(crate) fn run_chunked<A, F, M>(trials: u64, init: A, fold: F, merge: M) -> Result<A>
where
    A: Clone + Send + Sync,
    F: Fn(&mut A, u64) -> Result<()> + Sync + Send,
    M: Fn(&mut A, &A),
{
    let chunks: Vec<(u64, u64)> =
        (0..trials.div_ceil(CHUNK)).map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(trials))).collect();
    let parts = par_map(chunks, |(lo, hi)| {
        let mut acc = init.clone();
        for t in lo..hi {
            fold(&mut acc, t)?;
        }
        Ok::<A, Error>(acc)
    });
    let mut total = init;
    for part in parts {
        merge(&mut total, &part?);
    }
    Ok(total)
}

/// Estimates `E[ALG]`, `E[OPT]` and their ratio with common random numbers: trial `t` uses
/// stream `t` of `seed` for both quantities.
pub fn estimate_ratio(
    instance: &Instance,
    algorithm: &Algorithm,
    model: &SamplingModel,
    trials: usize,
    seed: u64,
) -> Result<RatioEstimate> {
    if trials < 2 {
        return Err(Error::InvalidArgument("need at least two trials".into()));
    }
    let runner = Runner::new(instance, algorithm, model)?;
    let acc = run_chunked(
        trials as u64,
        Paired::default(),
        |acc, t| {
            let r = runner.run(instance, model, seed, t)?;
            acc.push(r.selected_value, r.opt_value);
            Ok(())
        },
        Paired::merge,
    )?;
    acc.ratio()
}

/// Selection frequency of every global rank, plus the no-selection frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopDistribution {
    /// `per_rank[j-1]` estimates `P(ALG = Y_j)`.
    pub per_rank: Vec<Estimate>,
    pub none: Estimate,
}

impl StopDistribution {
    pub fn rank(&self, j: usize) -> Estimate {
        self.per_rank[j - 1]
    }
}

/// Empirical law of the selected rank of a threshold rule.
pub fn empirical_stop_distribution(
    instance: &Instance,
    schedule: &ThresholdSchedule,
    model: &SamplingModel,
    trials: usize,
    seed: u64,
) -> Result<StopDistribution> {
    if trials < 10_000 {
        return Err(Error::InvalidArgument("stop distributions need at least 10^4 trials".into()));
    }
    let algorithm = Algorithm::Threshold(schedule.clone());
    let runner = Runner::new(instance, &algorithm, model)?;
    let n = instance.n();
    // Per-rank counts; indicators have second moment equal to the mean.
    let counts = run_chunked(
        trials as u64,
        vec![0u64; n + 1],
        |acc, t| {
            let r = runner.run(instance, model, seed, t)?;
            acc[r.selected_rank.unwrap_or(n + 1) - 1] += 1;
            Ok(())
        },
        |a, b| a.iter_mut().zip(b).for_each(|(x, y)| *x += y),
    )?;
    let est = |c: u64| {
        let m = c as f64 / trials as f64;
        let var = m * (1.0 - m) * trials as f64 / (trials as f64 - 1.0);
        Estimate { mean: m, stderr: (var / trials as f64).sqrt(), trials }
    };
    Ok(StopDistribution { per_rank: counts[..n].iter().map(|&c| est(c)).collect(), none: est(counts[n]) })
}

/// Ratio on the 0/1 step instance with `k` ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRatio {
    pub k: usize,
    pub estimate: RatioEstimate,
}

/// Ratios on every step instance `Y^k`, `k = 1..=k_cap`, from one set of trials on `N` items.
///
/// On `Y^k` the algorithm earns 1 iff its pick has rank at most `k`, and the benchmark is 1 iff
/// the best online rank is at most `k`, so a single run scores all `k` at once.
pub fn step_instance_sweep(
    n: usize,
    algorithm: &Algorithm,
    model: &SamplingModel,
    k_cap: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<StepRatio>> {
    if trials < 2 {
        return Err(Error::InvalidArgument("need at least two trials".into()));
    }
    let k_cap = k_cap.min(n).max(1);
    let instance = Instance::secretary(n)?;
    let runner = Runner::new(&instance, algorithm, model)?;
    let acc = run_chunked(
        trials as u64,
        vec![Paired::default(); k_cap],
        |acc, t| {
            let r: TrialRecord = runner.run(&instance, model, seed, t)?;
            let sel = r.selected_rank.unwrap_or(usize::MAX);
            let opt = r.opt_rank.unwrap_or(usize::MAX);
            for (k0, p) in acc.iter_mut().enumerate() {
                let k = k0 + 1;
                p.push(f64::from(u8::from(sel <= k)), f64::from(u8::from(opt <= k)));
            }
            Ok(())
        },
        |a, b| a.iter_mut().zip(b).for_each(|(x, y)| x.merge(y)),
    )?;
    acc.iter().enumerate().map(|(k0, p)| Ok(StepRatio { k: k0 + 1, estimate: p.ratio()? })).collect()
}

/// `ceil(ln(eps) / ln(p))`: step instances beyond this size are dominated up to `eps`.
pub fn step_cap(p: f64, eps: f64) -> usize {
    if p <= 0.0 {
        return 1;
    }
    ((eps.ln() / p.ln()).ceil() as usize).max(1)
}
