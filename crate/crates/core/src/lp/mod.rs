//! Finite linear programs for known values and for stochastic dominance, a dense simplex
//! solver, and conversion of LP solutions into executable stopping rules.

mod model;
mod policy;
mod programs;
mod simplex;

pub use model::{Constraint, LpModel, Relation, VarKey};
pub use policy::{extract_policy, StoppingRuleMatrix};
pub use programs::{build_known_values_lp, build_known_values_lp_in, build_sdlp, build_sdlp_in};
pub use simplex::{solve_lp, solve_lp_with, LpSolution, SimplexOptions};
