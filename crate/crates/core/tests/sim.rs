use std::collections::BTreeMap;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use pdos::kernels::opt_dist_independent;
use pdos::lp::extract_policy;
use pdos::quadrature::integrate;
use pdos::sim::{
    empirical_stop_distribution, estimate_ratio, run_policy_matrix, run_threshold_alg, run_trial, step_instance_sweep,
    Algorithm,
};
use pdos::threshold::{eval_fk, eval_kernel};
use pdos::{Instance, SamplingModel, ThresholdSchedule};

const INV_E: f64 = 0.367_879_441_171_442_33;
const HALF_SCHEDULE: [f64; 10] = [0.500, 0.836, 0.903, 0.941, 0.957, 0.985, 0.994, 0.994, 0.994, 0.994];

fn schedule(p: f64, times: &[f64]) -> ThresholdSchedule {
    ThresholdSchedule::new(p, times.to_vec(), true).unwrap()
}

/// Chance that the single threshold `t` picks the best of `n` items with uniform arrival times:
/// the best item arrives at `s >= t` and the best earlier item, if any, arrived before `t`.
fn finite_secretary(n: usize, t: f64) -> f64 {
    let m = (n - 1) as i32;
    integrate(|s| (1.0 - s).powi(m) + (1.0 - (1.0 - s).powi(m)) * t / s, t, 1.0, 1e-13).value
}

#[test]
fn trivial_runs() {
    let inst = Instance::new(vec![3.0, 2.0, 1.0], 0.5).unwrap();
    let model = SamplingModel::independent(0.3).unwrap();
    for seed in 0..50 {
        let rec = run_threshold_alg(&inst, &ThresholdSchedule::all_ones(0.3).unwrap(), &model, seed);
        assert_eq!(rec.selected_rank, None);
        assert_eq!(rec.selected_value, 0.5);
        assert_eq!(rec.stop_time, None);
    }
    let one = Instance::new(vec![1.0], 0.0).unwrap();
    for seed in 0..200 {
        let rec = run_threshold_alg(&one, &schedule(0.3, &[0.3]), &model, seed);
        // Online exactly when nothing was put in the history.
        assert_eq!(rec.selected_rank.is_some(), rec.opt_rank.is_some());
    }
}

#[test]
fn records_are_consistent() {
    let inst = Instance::new(vec![5.0, 4.0, 4.0, 1.0, 0.5], 0.1).unwrap();
    let model = SamplingModel::independent(0.4).unwrap();
    let s = schedule(0.4, &[0.5, 0.7]);
    for seed in 0..500 {
        let rec = run_threshold_alg(&inst, &s, &model, seed);
        match rec.selected_rank {
            Some(j) => {
                assert_eq!(rec.selected_value, inst.value(j));
                let t = rec.stop_time.unwrap();
                assert!((0.5..=1.0).contains(&t));
            }
            None => assert_eq!(rec.selected_value, inst.default_tail()),
        }
        match rec.opt_rank {
            Some(j) => assert_eq!(rec.opt_value, inst.value(j)),
            None => assert_eq!(rec.opt_value, inst.default_tail()),
        }
        assert!(rec.selected_value <= rec.opt_value || rec.selected_rank.is_none());
    }
}

#[test]
fn secretary_success_matches_kernel() {
    let s = schedule(0.0, &[INV_E]);
    let model = SamplingModel::independent(0.0).unwrap();
    let dist = empirical_stop_distribution(&Instance::secretary(200).unwrap(), &s, &model, 1_000_000, 3).unwrap();
    let est = dist.rank(1);
    let exact = finite_secretary(200, INV_E);
    assert!((est.mean - exact).abs() <= 3.0 * est.stderr, "{} vs {exact}", est.mean);
    // The finite-N value approaches the limit kernel.
    assert!((exact - eval_fk(&s, 1).unwrap()).abs() < 1e-12);
    assert!(finite_secretary(10, INV_E) - INV_E > 1e-4);
}

#[test]
fn stop_distribution_examples() {
    let model = SamplingModel::independent(0.0).unwrap();
    let inst = Instance::secretary(500).unwrap();
    let none = empirical_stop_distribution(&inst, &ThresholdSchedule::all_ones(0.0).unwrap(), &model, 10_000, 1).unwrap();
    assert!(none.per_rank.iter().all(|e| e.mean == 0.0));
    assert_eq!(none.none.mean, 1.0);

    let sec = empirical_stop_distribution(&inst, &schedule(0.0, &[INV_E]), &model, 200_000, 2).unwrap();
    let e = sec.rank(1);
    assert!((e.mean - finite_secretary(500, INV_E)).abs() <= 3.0 * e.stderr);
    assert!((e.mean - INV_E).abs() <= 3.0 * e.stderr + 1e-3);

    let two = schedule(0.0, &[0.347, 2.0 / 3.0]);
    let eval = eval_kernel(&two, 2).unwrap();
    let big = Instance::secretary(2000).unwrap();
    let d = empirical_stop_distribution(&big, &two, &model, 400_000, 4).unwrap();
    let j2 = d.rank(2);
    assert!((j2.mean - (eval.f(2) - eval.f(1))).abs() <= 3.0 * j2.stderr + 1e-3, "{}", j2.mean);
    assert!(empirical_stop_distribution(&big, &two, &model, 100, 4).is_err());
}

#[test]
fn single_mass_rule_stops_where_placed() {
    let (h, n) = (3, 6);
    let rule = extract_policy(&BTreeMap::from([((h + 1, 1), 1.0 / (h + 1) as f64)]), h, n).unwrap();
    let inst = Instance::secretary(n).unwrap();
    let trials = 200_000u64;
    let mut hits = 0u64;
    for seed in 0..trials {
        let rec = run_policy_matrix(&inst, &rule, seed).unwrap();
        if let Some(t) = rec.stop_time {
            assert_abs_diff_eq!(t, (h + 1) as f64 / n as f64, epsilon = 1e-12);
            hits += 1;
        }
    }
    let target = 1.0 / (h + 1) as f64;
    let f = hits as f64 / trials as f64;
    assert!((f - target).abs() <= 3.0 * (target * (1.0 - target) / trials as f64).sqrt(), "{f}");
    assert!(run_policy_matrix(&Instance::secretary(5).unwrap(), &rule, 0).is_err());
}

#[test]
fn ratio_examples() {
    let constant = Instance::new(vec![2.0; 6], 2.0).unwrap();
    let model = SamplingModel::independent(0.4).unwrap();
    let e = estimate_ratio(&constant, &Algorithm::Threshold(schedule(0.4, &[0.4])), &model, 5_000, 9).unwrap();
    assert_eq!(e.ratio, 1.0);

    let half = SamplingModel::independent(0.5).unwrap();
    let sec = Instance::secretary(100).unwrap();
    let e = estimate_ratio(&sec, &Algorithm::Threshold(schedule(0.5, &[0.6])), &half, 200_000, 10).unwrap();
    let exact_opt: f64 = (1..=100).map(|j| sec.value(j) * opt_dist_independent(0.5, j)).sum();
    assert!((e.opt.mean - exact_opt).abs() <= 3.0 * e.opt.stderr, "{} vs {exact_opt}", e.opt.mean);
    assert!(e.alg.stderr >= 0.0 && e.alg.trials == 200_000);

    let zero = Instance::new(vec![0.0; 4], 0.0).unwrap();
    assert!(estimate_ratio(&zero, &Algorithm::Threshold(schedule(0.0, &[0.5])), &model, 100, 1).is_err());
    assert!(estimate_ratio(&sec, &Algorithm::Threshold(schedule(0.5, &[0.6])), &half, 1, 1).is_err());
}

#[test]
fn published_half_schedule_is_competitive_at_finite_n() {
    let alg = Algorithm::Threshold(schedule(0.5, &HALF_SCHEDULE));
    let model = SamplingModel::independent(0.5).unwrap();
    let sweep = step_instance_sweep(2000, &alg, &model, 20, 200_000, 21).unwrap();
    let worst = sweep.iter().map(|s| s.estimate.ratio).fold(f64::INFINITY, f64::min);
    assert!(worst >= 0.671 - 0.005, "{worst}");
}

#[test]
fn ratio_does_not_grow_with_n() {
    let alg = Algorithm::Threshold(schedule(0.5, &HALF_SCHEDULE));
    let model = SamplingModel::independent(0.5).unwrap();
    let small = step_instance_sweep(50, &alg, &model, 10, 200_000, 31).unwrap();
    let large = step_instance_sweep(100, &alg, &model, 10, 200_000, 32).unwrap();
    for (a, b) in small.iter().zip(&large) {
        let se = a.estimate.ratio_stderr.hypot(b.estimate.ratio_stderr);
        assert!(a.estimate.ratio >= b.estimate.ratio - 3.0 * se, "k = {}", a.k);
    }
}

#[test]
fn runs_are_reproducible() {
    let inst = Instance::min_rank(40).unwrap();
    let alg = Algorithm::Threshold(schedule(0.2, &[0.3, 0.5, 0.7]));
    let model = SamplingModel::dependent(8, 40).unwrap();
    for trial in 0..20 {
        assert_eq!(run_trial(&inst, &alg, &model, 77, trial).unwrap(), run_trial(&inst, &alg, &model, 77, trial).unwrap());
    }
    let a = estimate_ratio(&Instance::secretary(40).unwrap(), &alg, &model, 10_000, 5).unwrap();
    let b = estimate_ratio(&Instance::secretary(40).unwrap(), &alg, &model, 10_000, 5).unwrap();
    assert_eq!(a, b);
}

/// Gap between the two sampling models at matched rate, reported for growing N.
#[test]
fn sampling_models_converge_report() {
    let alg = Algorithm::Threshold(schedule(0.5, &HALF_SCHEDULE));
    let gaps: Vec<(usize, f64)> = [40, 160, 640]
        .into_iter()
        .map(|n| {
            let ind = step_instance_sweep(n, &alg, &SamplingModel::independent(0.5).unwrap(), 1, 100_000, 5).unwrap();
            let dep = step_instance_sweep(n, &alg, &SamplingModel::dependent_from_rate(0.5, n).unwrap(), 1, 100_000, 5)
                .unwrap();
            (n, (ind[0].estimate.ratio - dep[0].estimate.ratio).abs())
        })
        .collect();
    println!("independent vs dependent ratio gap on the best-item instance: {gaps:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn appending_zero_never_helps(mut vals in prop::collection::vec(1u8..20, 1..8), seed in 0u64..1000) {
        vals.sort_unstable_by(|a, b| b.cmp(a));
        let inst = Instance::new(vals.iter().map(|&v| f64::from(v)).collect(), 0.0).unwrap();
        let longer = inst.append_tail_item();
        let alg = Algorithm::Threshold(schedule(0.3, &[0.4, 0.6]));
        let model = SamplingModel::independent(0.3).unwrap();
        let a = estimate_ratio(&inst, &alg, &model, 20_000, seed).unwrap();
        let b = estimate_ratio(&longer, &alg, &model, 20_000, seed).unwrap();
        prop_assert!(b.alg.mean <= a.alg.mean + 3.0 * a.alg.stderr.hypot(b.alg.stderr));
    }
}
