use serde::Serialize;

use crate::kernels::capped_binomial_cdf;
use crate::quadrature::integrate_vec;
use crate::{Error, Result, ThresholdSchedule};

/// Per-interval quadrature tolerance.
pub(crate) const INTERVAL_TOL: f64 = 1e-12;

/// `F_1..F_kmax` for one schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelEval {
    pub schedule: ThresholdSchedule,
    /// `per_k[k-1] = F_k`.
    pub per_k: Vec<f64>,
    pub quadrature_error: f64,
}

impl KernelEval {
    pub fn f(&self, k: usize) -> f64 {
        self.per_k[k - 1]
    }
}

/// Evaluates `F_1..F_kmax`.
pub fn eval_kernel(schedule: &ThresholdSchedule, kmax: usize) -> Result<KernelEval> {
    if kmax == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let engine = KernelEngine::new(schedule.times().to_vec(), schedule.tail_is_one(), kmax);
    let mut acc = 0.0;
    let per_k = engine
        .rank_probs()
        .into_iter()
        .map(|p| {
            acc += p;
            acc.min(1.0)
        })
        .collect();
    Ok(KernelEval { schedule: schedule.clone(), per_k, quadrature_error: engine.error() })
}

/// `F_k(t)`: limit probability that the threshold policy stops on global rank at most `k`.
pub fn eval_fk(schedule: &ThresholdSchedule, k: usize) -> Result<f64> {
    Ok(eval_kernel(schedule, k)?.f(k))
}

/// Limit probability of stopping on exactly global rank `j`, for `j = 1..=kmax`.
pub fn rank_stop_probabilities(schedule: &ThresholdSchedule, kmax: usize) -> Vec<f64> {
    KernelEngine::new(schedule.times().to_vec(), schedule.tail_is_one(), kmax).rank_probs()
}

/// Interval-decomposed kernel supporting cheap single-coordinate updates.
///
/// On `[t_i, t_{i+1})` the stop density for rank `j` is
/// `T_i / tau^{i+1} * tau * P(Bin(j-1, tau) <= i-1)`. With `U_i = T_i / t_i^i` it becomes
/// `U_i (t_i/tau)^i P(Bin(j-1, tau) <= i-1)`, which stays bounded for any `i`.
#[derive(Debug, Clone)]
pub(crate) struct KernelEngine {
    times: Vec<f64>,
    tail_is_one: bool,
    kmax: usize,
    u: Vec<f64>,
    rows: Vec<Vec<f64>>,
    errs: Vec<f64>,
}

/// Replacement data for a single coordinate.
#[derive(Debug, Clone)]
pub(crate) struct Proposal {
    s: usize,
    t: f64,
    prev_row: Option<(Vec<f64>, f64)>,
    row: (Vec<f64>, f64),
    u_s: f64,
}

/// Contributions of the untouched intervals around coordinate `s`.
#[derive(Debug, Clone)]
pub(crate) struct Frame {
    s: usize,
    before: Vec<f64>,
    after: Vec<f64>,
}

fn interval_row(i: usize, lo: f64, hi: f64, kmax: usize) -> (Vec<f64>, f64) {
    if !(hi > lo) || lo <= 0.0 {
        return (vec![0.0; kmax], 0.0);
    }
    let q = integrate_vec(
        |tau, out| {
            capped_binomial_cdf(tau, i - 1, out);
            let w = (lo / tau).powi(i as i32) / tau;
            out.iter_mut().for_each(|v| *v *= w);
        },
        lo,
        hi,
        kmax,
        INTERVAL_TOL,
    );
    (q.value, q.error)
}

impl KernelEngine {
    pub(crate) fn new(times: Vec<f64>, tail_is_one: bool, kmax: usize) -> Self {
        let mut e = Self { times, tail_is_one, kmax, u: vec![], rows: vec![], errs: vec![] };
        e.rebuild();
        e
    }

    pub(crate) fn times(&self) -> &[f64] {
        &self.times
    }

    fn k(&self) -> usize {
        self.times.len()
    }

    /// `t_{i+1}` for the right end of interval `i` (1-based).
    fn right(&self, i: usize) -> f64 {
        match self.times.get(i) {
            Some(&t) => t,
            None if self.tail_is_one => 1.0,
            None => self.times[i - 1],
        }
    }

    fn rebuild(&mut self) {
        let k = self.k();
        self.u = Vec::with_capacity(k);
        for i in 1..=k {
            let u = if self.times[i - 1] <= 0.0 {
                0.0
            } else if i == 1 {
                1.0
            } else {
                self.u[i - 2] * (self.times[i - 2] / self.times[i - 1]).powi(i as i32 - 1)
            };
            self.u.push(u);
        }
        let (rows, errs) = (1..=k).map(|i| interval_row(i, self.times[i - 1], self.right(i), self.kmax)).unzip();
        self.rows = rows;
        self.errs = errs;
    }

    pub(crate) fn error(&self) -> f64 {
        self.u.iter().zip(&self.errs).map(|(u, e)| u * e).sum()
    }

    pub(crate) fn rank_probs(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.kmax];
        for (u, row) in self.u.iter().zip(&self.rows) {
            if *u == 0.0 {
                continue;
            }
            for (pj, r) in p.iter_mut().zip(row) {
                *pj += u * r;
            }
        }
        p
    }

    /// Sums of the contributions of intervals `< s-1` and `> s` at the current point.
    pub(crate) fn frame(&self, s: usize) -> Frame {
        let mut before = vec![0.0; self.kmax];
        let mut after = vec![0.0; self.kmax];
        for i in 1..=self.k() {
            let target = if i + 1 < s {
                &mut before
            } else if i > s {
                &mut after
            } else {
                continue;
            };
            let u = self.u[i - 1];
            for (a, r) in target.iter_mut().zip(&self.rows[i - 1]) {
                *a += u * r;
            }
        }
        Frame { s, before, after }
    }

    /// Interval data after moving `t_s` to `t`; requires `t_{s-1} <= t <= t_{s+1}` and `t > 0`.
    pub(crate) fn propose(&self, s: usize, t: f64) -> Proposal {
        let prev_row = (s >= 2).then(|| interval_row(s - 1, self.times[s - 2], t, self.kmax));
        let row = interval_row(s, t, self.right(s), self.kmax);
        let u_s = if t <= 0.0 {
            0.0
        } else if s == 1 {
            1.0
        } else {
            self.u[s - 2] * (self.times[s - 2] / t).powi(s as i32 - 1)
        };
        Proposal { s, t, prev_row, row, u_s }
    }

    /// Rank probabilities under a proposal, using a frame built for the same coordinate.
    pub(crate) fn probs_with(&self, frame: &Frame, prop: &Proposal, out: &mut [f64]) {
        debug_assert_eq!(frame.s, prop.s);
        let s = prop.s;
        let old = self.times[s - 1];
        let scale = if old > 0.0 { prop.t / old } else { 0.0 };
        for j in 0..self.kmax {
            let mut v = frame.before[j] + frame.after[j] * scale + prop.u_s * prop.row.0[j];
            if let Some((row, _)) = &prop.prev_row {
                v += self.u[s - 2] * row[j];
            }
            out[j] = v;
        }
    }

    pub(crate) fn commit(&mut self, prop: Proposal) {
        let s = prop.s;
        let old = self.times[s - 1];
        self.times[s - 1] = prop.t;
        if old > 0.0 {
            let scale = prop.t / old;
            for u in &mut self.u[s..] {
                *u *= scale;
            }
            self.u[s - 1] = prop.u_s;
            if let Some((row, err)) = prop.prev_row {
                self.rows[s - 2] = row;
                self.errs[s - 2] = err;
            }
            self.rows[s - 1] = prop.row.0;
            self.errs[s - 1] = prop.row.1;
        } else {
            self.rebuild();
        }
    }
}
