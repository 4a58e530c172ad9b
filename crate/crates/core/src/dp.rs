//! Backward induction over (step, local rank) for known values and a history of size `h`.

use crate::numeric::Field;
use crate::{Error, Instance, Result};

/// Optimal expected reward when exactly `h` of the `N` items form the history.
pub fn dp_optimal(instance: &Instance, h: usize) -> Result<f64> {
    dp_optimal_in::<f64>(instance, h)
}

/// [`dp_optimal`] over an arbitrary field, e.g. exact rationals.
pub fn dp_optimal_in<F: Field>(instance: &Instance, h: usize) -> Result<F> {
    let n = instance.n();
    if h > n {
        return Err(Error::InvalidArgument(format!("history size {h} exceeds N = {n}")));
    }
    let ys: Vec<F> = (1..=n + 1).map(|j| F::from_f64(instance.value(j))).collect();
    let mut v = ys[n].clone();
    for i in (h + 1..=n).rev() {
        // Item at step i with local rank l has global rank j with probability (i/N) P(B|C).
        let scale = F::from_u64(i as u64) / F::from_u64(n as u64);
        let mut total = F::zero();
        for l in 1..=i {
            let mut accept = F::zero();
            for j in l..=n - (i - l) {
                let w = F::local_rank_prob(n as u64, i as u64, j as u64, l as u64);
                accept = accept + ys[j - 1].clone() * w;
            }
            accept = accept * scale.clone();
            total = total + if accept > v { accept } else { v.clone() };
        }
        v = total / F::from_u64(i as u64);
    }
    Ok(v)
}
