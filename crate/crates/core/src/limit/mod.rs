//! Limit of the adversarial problem as the number of items grows: the constants `alpha*` and
//! `alpha~(p)`, the explicit threshold construction, and numerical lower and upper bounds.

mod alpha;
mod bounds;
mod construction;

pub use alpha::{
    alpha_star, alpha_star_integral, alpha_tilde, alpha_tilde_detail, closed_alpha_small_p, f_term, g_series, gamma,
    mu, AlphaStar, AlphaTilde, SeriesValue,
};
pub use bounds::{
    build_ubp, certify_alpha, default_lbp_kmax, default_ubp_kmax, lbp_lower_bound, lbp_ratios, ubp_upper_bound,
    AlphaCertificate, CertificateParams, LbpSolution, LowerMethod, UbpSolution, UpperMethod,
};
pub use construction::{construct_thresholds, implied_feasibility, implied_q, ConstructionState};
