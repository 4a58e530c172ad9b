//! Optimal stopping when part of the input is revealed in advance as a sample.
//!
//! Items with values `Y_1 >= Y_2 >= ...` arrive in random order; a history set is observed
//! first, then the decision maker sees the remaining items one by one and may stop once.
//! The crate computes optimal policies for known values (exact backward induction and a finite
//! LP), threshold policies in the many-items limit, numerical bounds on the best achievable
//! competitive ratio as a function of the sampling rate, and Monte Carlo checks of all of it.

// Negated comparisons are how this crate rejects NaN inputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dp;
pub mod error;
pub mod kernels;
pub mod limit;
pub mod lp;
pub mod matroid;
pub mod model;
pub mod numeric;
pub mod quadrature;
pub mod sim;
pub mod threshold;

pub use error::{Error, Result};
pub use model::{Instance, SamplingModel, ThresholdSchedule};
