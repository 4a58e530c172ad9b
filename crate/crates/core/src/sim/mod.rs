//! Seeded Monte Carlo engine for threshold rules, stopping-rule matrices and lifted rules
//! under both sampling models.
//!
//! Trial `t` draws from stream `t` of a ChaCha8 generator keyed by the master seed, and
//! per-chunk sums are merged in a fixed order, so parallel and serial runs agree bit for bit.

mod estimate;
mod trial;

pub use estimate::{
    empirical_stop_distribution, estimate_ratio, step_cap, step_instance_sweep, Estimate, RatioEstimate,
    StepRatio, StopDistribution,
};
pub use trial::{run_policy_matrix, run_threshold_alg, run_trial, Algorithm, TrialRecord};

pub(crate) use estimate::run_chunked;
pub(crate) use trial::{run_ranked, trial_rng};
pub(crate) use estimate::{Moments, Paired};

/// Maps `f` over `items`, in parallel when the `parallel` feature is on. Output order matches input.
pub fn par_map<T: Send, R: Send, F: Fn(T) -> R + Sync + Send>(items: Vec<T>, f: F) -> Vec<R> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().map(f).collect()
    }
}
