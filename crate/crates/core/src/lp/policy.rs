use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::kernels::local_rank_prob;
use crate::{Error, Instance, Result};

const FEAS_TOL: f64 = 1e-9;

/// Joint stop probabilities `x_{i,l}` for steps `h < i <= N` and local ranks `l <= i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingRuleMatrix {
    h: usize,
    n: usize,
    /// `x[i - h - 1][l - 1]`.
    x: Vec<Vec<f64>>,
}

/// Validates an LP assignment and turns it into a stopping rule.
/// Missing entries are zero; entries slightly below zero are clamped.
pub fn extract_policy(assignment: &BTreeMap<(usize, usize), f64>, h: usize, n: usize) -> Result<StoppingRuleMatrix> {
    if h >= n {
        return Err(Error::InvalidArgument(format!("history size {h} must be below N = {n}")));
    }
    let mut x: Vec<Vec<f64>> = (h + 1..=n).map(|i| vec![0.0; i]).collect();
    for (&(i, l), &v) in assignment {
        if i <= h || i > n || l == 0 || l > i {
            return Err(Error::InvalidArgument(format!("entry ({i}, {l}) outside the rule's shape")));
        }
        if !(v >= -FEAS_TOL) {
            return Err(Error::InfeasiblePolicy(-v));
        }
        x[i - h - 1][l - 1] = v.max(0.0);
    }
    let rule = StoppingRuleMatrix { h, n, x };
    let violation = rule.max_violation();
    if violation > FEAS_TOL {
        return Err(Error::InfeasiblePolicy(violation));
    }
    Ok(rule)
}

impl StoppingRuleMatrix {
    /// Rule that never stops.
    pub fn zero(h: usize, n: usize) -> Result<Self> {
        extract_policy(&BTreeMap::new(), h, n)
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `x_{i,l}`; zero outside the shape.
    pub fn x(&self, i: usize, l: usize) -> f64 {
        if i <= self.h || i > self.n || l == 0 || l > i {
            0.0
        } else {
            self.x[i - self.h - 1][l - 1]
        }
    }

    /// Probability of reaching step `i` without having stopped: `1 - sum_{j<i} sum_s x_{j,s}`.
    pub fn survival(&self, i: usize) -> f64 {
        let done: f64 = self.x.iter().take(i.saturating_sub(self.h + 1)).flat_map(|r| r.iter()).sum();
        (1.0 - done).max(0.0)
    }

    /// Probability of stopping at step `i` on an `l`-local item given step `i` is reached.
    pub fn conditional_stop(&self, i: usize, l: usize) -> f64 {
        let reach = self.survival(i);
        if reach <= 0.0 {
            return 0.0;
        }
        (i as f64 * self.x(i, l) / reach).clamp(0.0, 1.0)
    }

    /// Largest excess of any feasibility row or of the total mass over one.
    pub fn max_violation(&self) -> f64 {
        let mut done = 0.0;
        let mut worst = f64::NEG_INFINITY;
        for (offset, row) in self.x.iter().enumerate() {
            let i = (self.h + 1 + offset) as f64;
            for &v in row {
                worst = worst.max(i * v + done - 1.0);
            }
            done += row.iter().sum::<f64>();
        }
        worst.max(done - 1.0)
    }

    /// `P(ALG = Y_j)` for `j = 1..=N`.
    pub fn rank_distribution(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for (offset, row) in self.x.iter().enumerate() {
            let i = self.h + 1 + offset;
            for (l0, &v) in row.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let l = l0 + 1;
                for j in l..=n - (i - l) {
                    out[j - 1] += i as f64 / n as f64 * v * local_rank_prob(n, i, j, l);
                }
            }
        }
        out
    }

    /// Expected reward of the rule on `instance`, counting `Y_{N+1}` when it never stops.
    pub fn expected_reward(&self, instance: &Instance) -> Result<f64> {
        if instance.n() != self.n {
            return Err(Error::InvalidArgument("instance length differs from rule".into()));
        }
        let dist = self.rank_distribution();
        let stop: f64 = dist.iter().sum();
        Ok(dist.iter().zip(instance.values()).map(|(p, y)| p * y).sum::<f64>()
            + (1.0 - stop) * instance.default_tail())
    }
}
