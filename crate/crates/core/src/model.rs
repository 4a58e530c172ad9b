//! Domain types: value instances, sampling models and threshold schedules.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A non-increasing value sequence `Y_1 >= ... >= Y_N` plus the reward `Y_{N+1}`
/// collected when nothing is selected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRepr", into = "InstanceRepr")]
pub struct Instance {
    values: Vec<f64>,
    default_tail: f64,
}

#[derive(Serialize, Deserialize)]
struct InstanceRepr {
    values: Vec<f64>,
    #[serde(default)]
    default_tail: f64,
}

impl TryFrom<InstanceRepr> for Instance {
    type Error = Error;
    fn try_from(r: InstanceRepr) -> Result<Self> {
        Instance::new(r.values, r.default_tail)
    }
}

impl From<Instance> for InstanceRepr {
    fn from(i: Instance) -> Self {
        InstanceRepr { values: i.values, default_tail: i.default_tail }
    }
}

impl Instance {
    pub fn new(values: Vec<f64>, default_tail: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInstance("empty value sequence".into()));
        }
        if values.iter().chain([&default_tail]).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInstance("non-finite value".into()));
        }
        if let Some(w) = values.windows(2).position(|w| w[0] < w[1]) {
            return Err(Error::InvalidInstance(format!(
                "values must be non-increasing (Y_{} < Y_{})",
                w + 1,
                w + 2
            )));
        }
        if default_tail > values[values.len() - 1] {
            return Err(Error::InvalidInstance("default tail exceeds the last value".into()));
        }
        Ok(Self { values, default_tail })
    }

    /// Instance with the adversarial normalization `Y_{N+1} = 0`.
    pub fn with_zero_tail(values: Vec<f64>) -> Result<Self> {
        Self::new(values, 0.0)
    }

    /// The 0/1 step instance `Y^k`: `k` ones followed by `n - k` zeros.
    pub fn step(k: usize, n: usize) -> Result<Self> {
        if k > n {
            return Err(Error::InvalidInstance(format!("step size {k} exceeds length {n}")));
        }
        Self::new((0..n).map(|j| if j < k { 1.0 } else { 0.0 }).collect(), 0.0)
    }

    /// Classic secretary payoff: only the best item is worth anything.
    pub fn secretary(n: usize) -> Result<Self> {
        Self::step(1, n)
    }

    /// Minimum-rank payoff `Y_k = -k`, truncated at `n` with tail `-(n+1)`.
    pub fn min_rank(n: usize) -> Result<Self> {
        Self::new((1..=n).map(|k| -(k as f64)).collect(), -((n + 1) as f64))
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn default_tail(&self) -> f64 {
        self.default_tail
    }

    /// `Y_j` for `1 <= j <= N + 1`.
    pub fn value(&self, j: usize) -> f64 {
        assert!(j >= 1 && j <= self.n() + 1, "rank {j} out of range");
        if j == self.n() + 1 {
            self.default_tail
        } else {
            self.values[j - 1]
        }
    }

    /// Non-negative values with zero tail.
    pub fn is_adversarial(&self) -> bool {
        self.default_tail == 0.0 && self.values.iter().all(|&v| v >= 0.0)
    }

    /// Number of leading ranks whose value exceeds the tail.
    pub fn distinct_prefix(&self) -> usize {
        self.values.iter().rposition(|&v| v > self.default_tail).map_or(0, |j| j + 1)
    }

    /// Returns a copy with `Y_{N+1}` appended as an extra item.
    pub fn append_tail_item(&self) -> Self {
        let mut values = self.values.clone();
        values.push(self.default_tail);
        Self { values, default_tail: self.default_tail }
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument("scale must be positive".into()));
        }
        Self::new(self.values.iter().map(|v| v * lambda).collect(), self.default_tail * lambda)
    }
}

/// How the history set is formed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplingModel {
    /// Each item lands in the history independently with probability `p`.
    Independent { p: f64 },
    /// Exactly `h` of the `n` items land in the history.
    Dependent { h: usize, n: usize },
}

impl SamplingModel {
    pub fn independent(p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("sampling rate {p} not in [0, 1)")));
        }
        Ok(Self::Independent { p })
    }

    pub fn dependent(h: usize, n: usize) -> Result<Self> {
        if h >= n {
            return Err(Error::InvalidArgument(format!("history size {h} must be below {n}")));
        }
        Ok(Self::Dependent { h, n })
    }

    /// Dependent model with `h = floor(p n)`.
    pub fn dependent_from_rate(p: f64, n: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("sampling rate {p} not in [0, 1)")));
        }
        Self::dependent((p * n as f64 + 1e-9).floor() as usize, n)
    }

    /// Sampling rate; `h / n` in the dependent model.
    pub fn p(&self) -> f64 {
        match *self {
            Self::Independent { p } => p,
            Self::Dependent { h, n } => h as f64 / n as f64,
        }
    }
}

/// Acceptance times `p <= t_1 <= ... <= t_K <= 1`: an item that is the `l`-th best so far
/// is accepted when it arrives at or after `t_l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleRepr", into = "ScheduleRepr")]
pub struct ThresholdSchedule {
    p: f64,
    times: Vec<f64>,
    tail_is_one: bool,
}

#[derive(Serialize, Deserialize)]
struct ScheduleRepr {
    p: f64,
    times: Vec<f64>,
    #[serde(default = "default_true")]
    tail_is_one: bool,
}

fn default_true() -> bool {
    true
}

impl TryFrom<ScheduleRepr> for ThresholdSchedule {
    type Error = Error;
    fn try_from(r: ScheduleRepr) -> Result<Self> {
        ThresholdSchedule::new(r.p, r.times, r.tail_is_one)
    }
}

impl From<ThresholdSchedule> for ScheduleRepr {
    fn from(s: ThresholdSchedule) -> Self {
        ScheduleRepr { p: s.p, times: s.times, tail_is_one: s.tail_is_one }
    }
}

impl ThresholdSchedule {
    /// `tail_is_one` sets `t_i = 1` beyond the listed times; otherwise the last time repeats.
    pub fn new(p: f64, times: Vec<f64>, tail_is_one: bool) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidSchedule(format!("p = {p} not in [0, 1)")));
        }
        let mut prev = p;
        for (i, &t) in times.iter().enumerate() {
            if !(t >= prev && t <= 1.0) {
                return Err(Error::InvalidSchedule(format!(
                    "t_{} = {t} breaks p <= t_1 <= ... <= 1",
                    i + 1
                )));
            }
            prev = t;
        }
        Ok(Self { p, times, tail_is_one })
    }

    /// Never accepts anything.
    pub fn all_ones(p: f64) -> Result<Self> {
        Self::new(p, vec![], true)
    }

    /// Accepts the best-so-far item from `max(p, 1/e)` on.
    pub fn secretary(p: f64) -> Result<Self> {
        Self::new(p, vec![p.max((-1.0f64).exp())], true)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn tail_is_one(&self) -> bool {
        self.tail_is_one
    }

    /// Number of explicit times.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `t_i` for any `i >= 1`.
    pub fn time(&self, i: usize) -> f64 {
        assert!(i >= 1);
        match self.times.get(i - 1) {
            Some(&t) => t,
            None if self.tail_is_one => 1.0,
            None => self.times.last().copied().unwrap_or(1.0),
        }
    }

    /// Largest `l` with `t_l <= tau`, i.e. the deepest local rank accepted at time `tau`.
    /// Saturates at `cap` when the tail repeats below `tau`.
    pub fn accepted_depth(&self, tau: f64, cap: usize) -> usize {
        let d = self.times.partition_point(|&t| t <= tau);
        if d == self.times.len() && !self.tail_is_one && d > 0 {
            cap.max(d)
        } else {
            d
        }
    }
}
