use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pdos::matroid::{
    down_shift, down_shift_guarantee, estimate_partition_ratio, lift_policy, parallel_threshold_select,
    UnitaryPartitionMatroid,
};
use pdos::sim::{estimate_ratio, step_instance_sweep, Algorithm};
use pdos::{Instance, SamplingModel, ThresholdSchedule};

const INV_E: f64 = 0.367_879_441_171_442_33;
const HALF_SCHEDULE: [f64; 10] = [0.500, 0.836, 0.903, 0.941, 0.957, 0.985, 0.994, 0.994, 0.994, 0.994];

fn schedule(p: f64, times: &[f64]) -> ThresholdSchedule {
    ThresholdSchedule::new(p, times.to_vec(), true).unwrap()
}

fn random_weights(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(0.0..10.0)).collect()
}

#[test]
fn forbidden_weight_is_never_selected() {
    let s = schedule(0.2, &[0.3]);
    let all_forbidden = UnitaryPartitionMatroid::new(4, vec![], vec![0, 1, 2, 3]).unwrap();
    let mixed = UnitaryPartitionMatroid::new(5, vec![vec![3, 4]], vec![0, 1, 2]).unwrap();
    for seed in 0..200 {
        let sel = parallel_threshold_select(&all_forbidden, &[5.0, 4.0, 3.0, 2.0], 0.2, &s, seed).unwrap();
        assert!(sel.selected.is_empty() && sel.weight == 0.0);
        let sel = parallel_threshold_select(&mixed, &[9.0, 8.0, 7.0, 0.0, 0.0], 0.2, &s, seed).unwrap();
        assert!(sel.selected.iter().all(|&e| e >= 3));
        assert_eq!(sel.weight, 0.0);
    }
}

#[test]
fn single_element_selected_after_threshold() {
    let m = UnitaryPartitionMatroid::uniform(1, 1).unwrap();
    let (p, t1) = (0.2, 0.45);
    let s = schedule(p, &[t1]);
    let trials = 100_000;
    let hits = (0..trials).filter(|&seed| !parallel_threshold_select(&m, &[1.0], p, &s, seed).unwrap().selected.is_empty()).count();
    let f = hits as f64 / trials as f64;
    let target = 1.0 - t1;
    assert!((f - target).abs() <= 3.0 * (target * t1 / trials as f64).sqrt(), "{f}");
}

#[test]
fn twenty_parts_keep_the_single_selection_ratio() {
    let m = UnitaryPartitionMatroid::uniform(20, 10).unwrap();
    let w = random_weights(200, 1);
    let est = estimate_partition_ratio(&m, &w, 0.5, &schedule(0.5, &HALF_SCHEDULE), 100_000, 2).unwrap();
    assert!(est.total.ratio >= 0.671 - 0.01, "{}", est.total.ratio);
    assert_eq!(est.independent_fraction.mean, 1.0);
    assert_eq!(est.per_part.len(), 20);
}

#[test]
fn per_part_matches_single_selection() {
    let m = UnitaryPartitionMatroid::new(9, vec![vec![0, 4, 8], vec![1, 2, 3, 5, 6, 7]], vec![]).unwrap();
    let w = [3.0, 1.0, 2.0, 6.0, 5.0, 4.0, 3.5, 0.5, 1.0];
    let p = 0.3;
    let s = schedule(p, &[0.4, 0.7]);
    let est = estimate_partition_ratio(&m, &w, p, &s, 100_000, 8).unwrap();
    let model = SamplingModel::independent(p).unwrap();
    for (i, part) in m.parts().iter().enumerate() {
        let mut vals: Vec<f64> = part.iter().map(|&e| w[e]).collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        let single = estimate_ratio(&Instance::new(vals, 0.0).unwrap(), &Algorithm::Threshold(s.clone()), &model, 100_000, 99)
            .unwrap();
        let got = &est.per_part[i];
        let se = got.alg.stderr.hypot(single.alg.stderr);
        assert!((got.alg.mean - single.alg.mean).abs() <= 3.0 * se, "part {i}: {} vs {}", got.alg.mean, single.alg.mean);
        let se = got.opt.stderr.hypot(single.opt.stderr);
        assert!((got.opt.mean - single.opt.mean).abs() <= 3.0 * se, "part {i}");
    }
}

#[test]
fn near_degenerate_lift_matches_base() {
    let (p_to, times) = (0.3, [0.4, 0.75]);
    let lifted = lift_policy(p_to - 1e-9, p_to, Algorithm::Threshold(schedule(p_to - 1e-9, &times))).unwrap();
    let direct = Algorithm::Threshold(schedule(p_to, &times));
    let model = SamplingModel::independent(p_to).unwrap();
    let inst = Instance::min_rank(30).unwrap();
    let a = estimate_ratio(&inst, &lifted, &model, 100_000, 3).unwrap();
    let b = estimate_ratio(&inst, &direct, &model, 100_000, 4).unwrap();
    assert!((a.alg.mean - b.alg.mean).abs() <= 3.0 * a.alg.stderr.hypot(b.alg.stderr), "{} vs {}", a.alg.mean, b.alg.mean);
}

#[test]
fn secretary_lift_keeps_its_ratio() {
    let lifted = lift_policy(0.0, 0.3, Algorithm::Threshold(schedule(0.0, &[INV_E]))).unwrap();
    let model = SamplingModel::independent(0.3).unwrap();
    let sec = Instance::secretary(1000).unwrap();
    let e = estimate_ratio(&sec, &lifted, &model, 200_000, 5).unwrap();
    assert!((e.ratio - INV_E).abs() <= 3.0 * e.ratio_stderr + 1e-3, "{}", e.ratio);
    // The single threshold used directly at the higher rate does better.
    let direct = estimate_ratio(&sec, &Algorithm::Threshold(schedule(0.3, &[INV_E])), &model, 200_000, 5).unwrap();
    assert!(direct.ratio >= 1.0 / (std::f64::consts::E * 0.7) - 0.01, "{}", direct.ratio);
    assert!(lift_policy(0.3, 0.3, Algorithm::Threshold(schedule(0.3, &[INV_E]))).is_err());
    assert!(lift_policy(0.1, 0.3, Algorithm::Threshold(schedule(0.0, &[INV_E]))).is_err());
}

#[test]
fn down_shift_keeps_scaled_guarantee() {
    let shifted = down_shift(&schedule(0.5, &HALF_SCHEDULE), 0.3).unwrap();
    assert_eq!(shifted.p(), 0.3);
    let bound = down_shift_guarantee(0.671, 0.5, 0.3);
    let model = SamplingModel::independent(0.3).unwrap();
    let sweep = step_instance_sweep(1000, &Algorithm::Threshold(shifted), &model, 20, 100_000, 6).unwrap();
    for s in &sweep {
        assert!(s.estimate.ratio >= bound - 3.0 * s.estimate.ratio_stderr, "k = {}: {}", s.k, s.estimate.ratio);
    }
    assert!(down_shift(&schedule(0.5, &HALF_SCHEDULE), 0.6).is_err());
}

/// Best single-threshold ratio on the best-item instance at growing sample rates; observed only.
#[test]
fn ratio_grows_with_p_report() {
    let sec = Instance::secretary(500).unwrap();
    let rows: Vec<(f64, f64)> = [0.0, 0.2, 0.4]
        .into_iter()
        .map(|p| {
            let s = schedule(p, &[INV_E.max(p)]);
            let e = estimate_ratio(&sec, &Algorithm::Threshold(s), &SamplingModel::independent(p).unwrap(), 50_000, 7)
                .unwrap();
            (p, e.ratio)
        })
        .collect();
    println!("best-item ratio of the single threshold by sample rate: {rows:?}");
}

#[test]
fn json_layout() {
    let m = UnitaryPartitionMatroid::from_json(r#"{"ground_size": 3, "parts": [[0, 2]], "forbidden": [1]}"#).unwrap();
    assert_eq!(m.part_of(2), Some(0));
    assert_eq!(m.part_of(1), None);
    assert!(UnitaryPartitionMatroid::from_json(r#"{"ground_size": 2, "parts": [[0]]}"#).is_err());
    assert_eq!(UnitaryPartitionMatroid::from_json(&m.to_json()).unwrap(), m);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn selection_is_independent(
        assign in prop::collection::vec(0usize..5, 1..30),
        p in 0.0f64..0.9,
        seed in 0u64..10_000,
    ) {
        // Label 0 is the forbidden part.
        let n = assign.len();
        let parts: Vec<Vec<usize>> = (1..5).map(|k| (0..n).filter(|&e| assign[e] == k).collect()).collect();
        let forbidden = (0..n).filter(|&e| assign[e] == 0).collect();
        let m = UnitaryPartitionMatroid::new(n, parts, forbidden).unwrap();
        let w = random_weights(n, seed);
        let s = schedule(p, &[p.max(0.4), p.max(0.7)]);
        let sel = parallel_threshold_select(&m, &w, p, &s, seed).unwrap();
        prop_assert!(m.is_independent(&sel.selected));
        prop_assert!((sel.weight - sel.selected.iter().map(|&e| w[e]).sum::<f64>()).abs() < 1e-9);
    }
}
