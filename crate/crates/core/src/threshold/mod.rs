//! Limit kernel `F_k(t)` of threshold policies, the reduced optimization problem for known
//! values, and the classic secretary-type solutions.

mod classic;
pub(crate) mod engine;
mod rp;

pub use classic::{
    classic_closed_forms, min_rank_expected_rank, min_rank_schedule, one_two_root, optimize_min_rank, one_two_value, ClassicProblem,
    ClassicSolution, RankEstimate, MIN_RANK_HORIZON,
};
pub use engine::{eval_fk, eval_kernel, rank_stop_probabilities, KernelEval};
pub(crate) use rp::ascend;
pub use rp::{default_horizon, golden_max, optimize_rp, optimize_rp_with, rp_objective, RpOptions, RpSolution, RpValue};
