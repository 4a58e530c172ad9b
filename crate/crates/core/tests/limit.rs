use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use pdos::limit::{
    alpha_star, alpha_star_integral, alpha_tilde, alpha_tilde_detail, certify_alpha, closed_alpha_small_p,
    construct_thresholds, default_lbp_kmax, default_ubp_kmax, implied_feasibility, lbp_lower_bound, ubp_upper_bound,
    CertificateParams,
};
use pdos::threshold::eval_kernel;

const INV_E: f64 = 0.367_879_441_171_442_33;

/// Frozen from bisection on the defining integral at tolerance 1e-15.
const ALPHA_STAR: f64 = 0.745_440_332;
/// Frozen from bisection of the limit condition, cross-checked by the construction below.
const ALPHA_TILDE_HALF: f64 = 0.600_197_151;

/// Strict increase until the times reach their limit to double precision.
fn increasing_to_limit(times: &[f64], log_limit: f64) -> bool {
    let limit = log_limit.min(0.0).exp();
    times.windows(2).all(|w| w[1] > w[0] || limit - w[0] <= 1e-12)
}

#[test]
fn alpha_star_golden() {
    let a = alpha_star();
    assert_abs_diff_eq!(a.value, ALPHA_STAR, epsilon = 1e-9);
    assert!((a.value - 0.745).abs() <= 1e-3);
    assert!(a.residual.abs() <= 1e-10);
    assert_abs_diff_eq!(alpha_star_integral(a.value), 1.0, epsilon = 1e-10);
}

#[test]
fn alpha_tilde_golden_and_feasible() {
    let d = alpha_tilde_detail(0.5).unwrap();
    assert_abs_diff_eq!(d.value, ALPHA_TILDE_HALF, epsilon = 1e-9);
    assert!(d.residual.abs() <= 1e-10);
    let at = construct_thresholds(0.5, d.value, 60).unwrap();
    assert!(at.times.time(60) <= 1.0);
    assert!(construct_thresholds(0.5, d.value + 1e-4, 60).is_err());
    let near_one = alpha_tilde(0.99).unwrap();
    assert!((ALPHA_STAR * 0.99 - 1e-9..=ALPHA_STAR + 1e-9).contains(&near_one), "{near_one}");
    assert!(alpha_tilde(0.0).is_err() && alpha_tilde(1.0).is_err());
}

#[test]
fn construction_examples() {
    for (p, alpha) in [(0.5, alpha_tilde(0.5).unwrap()), (0.2, 0.3), (0.8, 0.5)] {
        let c = construct_thresholds(p, alpha, 40).unwrap();
        let t = c.times.times();
        assert_eq!(t[0], p);
        assert_abs_diff_eq!(t[1], p * (alpha * (1.0 - p).powi(2) / p).exp(), epsilon = 1e-12);
        assert!(increasing_to_limit(t, c.log_limit), "not strictly increasing at p = {p}");
        assert!(t[39] <= c.log_limit.min(0.0).exp() + 1e-12);
        for k in 1..=40 {
            let gamma = 1.0 - alpha + alpha * (k as f64 * p.powi(k as i32 - 1) - (k - 1) as f64 * p.powi(k as i32));
            assert_abs_diff_eq!(c.gammas[k - 1], gamma, epsilon = 1e-14);
            assert!(gamma > 0.0 && gamma <= 1.0);
        }
    }
    let c = construct_thresholds(0.5, alpha_tilde(0.5).unwrap(), 400).unwrap();
    assert!(1.0 - c.times.time(400) < 1e-2, "t_400 = {}", c.times.time(400));
    assert!(construct_thresholds(0.0, 0.5, 5).is_err());
}

#[test]
fn construction_solves_the_balance_equations() {
    for (p, alpha) in [(0.5, alpha_tilde(0.5).unwrap()), (0.3, 0.45), (0.7, 0.6)] {
        let c = construct_thresholds(p, alpha, 25).unwrap();
        let t = c.times.times();
        let mu = |k: usize| p * (1.0 - alpha + alpha * p.powi(k as i32 - 2)) / (k - 2) as f64;
        for k in 3..=26 {
            assert_abs_diff_eq!(c.mu(k), mu(k), epsilon = 1e-14);
        }
        let first = p * (t[1] / p).ln() + p - mu(3);
        assert_abs_diff_eq!(alpha * (1.0 - p), first, epsilon = 1e-10);
        assert!(c.first_residual().abs() <= 1e-10);
        for k in 2..=20 {
            let big_t: f64 = t[..k].iter().product();
            let rhs = big_t / ((k - 1) as f64 * t[k - 1].powi(k as i32 - 1)) - mu(k + 1);
            assert_abs_diff_eq!(alpha * (1.0 - p) * p.powi(k as i32 - 1), rhs, epsilon = 1e-9);
            assert!(c.rank_residual(k).abs() <= 1e-9);
        }
    }
}

#[test]
fn constructed_policy_is_feasible() {
    let c = construct_thresholds(0.5, alpha_tilde(0.5).unwrap(), 80).unwrap();
    let grid: Vec<f64> = (1..=400).map(|i| 0.5 + 0.5 * i as f64 / 400.0).collect();
    assert!(implied_feasibility(&c.times, &grid) <= 1.0 + 1e-9);
}

#[test]
fn closed_form_examples() {
    assert_abs_diff_eq!(closed_alpha_small_p(0.0).unwrap(), INV_E, epsilon = 1e-15);
    let v = closed_alpha_small_p(0.2).unwrap();
    assert!((0.459..=0.460).contains(&v), "{v}");
    assert_abs_diff_eq!(closed_alpha_small_p(INV_E).unwrap(), 1.0 / (std::f64::consts::E - 1.0), epsilon = 1e-12);
    assert!(closed_alpha_small_p(0.4).is_err());
    // The single threshold 1/e attains the closed form for every k.
    let p = 0.25;
    let eval = eval_kernel(&pdos::ThresholdSchedule::new(p, vec![INV_E], true).unwrap(), 30).unwrap();
    for k in 1..=30 {
        assert!(eval.f(k) / (1.0 - p.powi(k as i32)) >= INV_E / (1.0 - p) - 1e-9);
    }
}

#[test]
fn lower_bound_program_examples() {
    let low = lbp_lower_bound(0.1, default_lbp_kmax(0.1)).unwrap();
    assert!(low.value >= 0.408 - 1e-3, "{}", low.value);
    assert!(low.value >= closed_alpha_small_p(0.1).unwrap() - 1e-4);
    let worst = low.ratios.iter().copied().fold(f64::INFINITY, f64::min);
    assert_abs_diff_eq!(worst, low.value, epsilon = 1e-12);
    let half = lbp_lower_bound(0.5, default_lbp_kmax(0.5)).unwrap();
    assert!(half.value >= 0.671 - 1e-3, "{}", half.value);
}

#[test]
fn upper_bound_program_examples() {
    let n = 300;
    let half = ubp_upper_bound(0.5, n, default_ubp_kmax(0.5, n)).unwrap();
    assert!((0.672..=0.680).contains(&half.value), "{}", half.value);
    assert_eq!(half.h, 150);
    let low = ubp_upper_bound(0.1, n, default_ubp_kmax(0.1, n)).unwrap();
    assert!((low.value - 0.409).abs() <= 0.01, "{}", low.value);
    assert!(low.value <= closed_alpha_small_p(0.1).unwrap() + 0.01);
    assert!(ubp_upper_bound(0.333, 100, 5).is_err());
}

#[test]
fn certificate_brackets() {
    for p in [0.2, 0.6] {
        let cert = certify_alpha(p, CertificateParams::defaults(p, 200)).unwrap();
        assert!(0.0 <= cert.lower && cert.lower <= cert.upper && cert.upper <= 1.0);
        assert!(cert.lower <= ALPHA_STAR + 1e-9);
        assert!(cert.lbp <= cert.ubp + 1e-9);
    }
}

/// Shape of the construction ratio on a grid, printed and not asserted.
#[test]
fn alpha_tilde_shape_report() {
    let grid: Vec<f64> = (1..=19).map(|i| 0.05 * i as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&p| alpha_tilde(p).unwrap()).collect();
    let drops = vals.windows(2).filter(|w| w[1] < w[0]).count();
    let max_second = vals.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).fold(f64::NEG_INFINITY, f64::max);
    println!("alpha_tilde on p = 0.05..0.95: {drops} decreases, largest second difference {max_second:.3e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn alpha_tilde_between_scaled_and_full_cap(p in 0.01f64..0.99) {
        let v = alpha_tilde(p).unwrap();
        prop_assert!(v >= ALPHA_STAR * p - 1e-9 && v <= ALPHA_STAR + 1e-9, "p = {p}: {v}");
    }

    #[test]
    fn construction_is_strictly_increasing(p in 0.05f64..0.95) {
        let c = construct_thresholds(p, alpha_tilde(p).unwrap(), 30).unwrap();
        prop_assert!(increasing_to_limit(c.times.times(), c.log_limit));
        prop_assert!(c.times.time(30) <= 1.0);
    }
}
