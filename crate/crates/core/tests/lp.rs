use std::collections::BTreeMap;

use approx::assert_abs_diff_eq;
use num::{BigInt, BigRational, ToPrimitive};
use proptest::prelude::*;

use pdos::dp::dp_optimal;
use pdos::kernels::opt_dist_dependent;
use pdos::lp::{
    build_known_values_lp, build_sdlp, build_sdlp_in, extract_policy, solve_lp, LpModel, Relation, StoppingRuleMatrix,
    VarKey,
};
use pdos::sim::{estimate_ratio, run_policy_matrix, Algorithm};
use pdos::{Instance, SamplingModel};

fn sdlp_ratio(rule: &StoppingRuleMatrix) -> f64 {
    let (n, h) = (rule.n(), rule.h());
    let dist = rule.rank_distribution();
    let (mut alg, mut opt, mut worst) = (0.0, 0.0, f64::INFINITY);
    for k in 1..=h + 1 {
        alg += dist[k - 1];
        opt += opt_dist_dependent(n, h, k);
        worst = worst.min(alg / opt);
    }
    worst
}

/// Rule stopping at step `i` on local rank `l` with conditional probability `c[i][l]`.
fn rule_from_conditionals(h: usize, n: usize, c: &[Vec<f64>]) -> StoppingRuleMatrix {
    let mut x = BTreeMap::new();
    let mut reach = 1.0;
    for i in h + 1..=n {
        let mut stopped = 0.0;
        for l in 1..=i {
            let v = reach * c[i - h - 1][l - 1] / i as f64;
            x.insert((i, l), v);
            stopped += v;
        }
        reach -= stopped;
    }
    extract_policy(&x, h, n).unwrap()
}

#[test]
fn one_variable_program() {
    let mut m = LpModel::<f64>::new();
    let x = m.add_var(VarKey::Column(0));
    m.set_objective(vec![(x, 1.0)], 0.0);
    m.add_constraint(vec![(x, 1.0)], Relation::Le, 1.0);
    let sol = solve_lp(&m).unwrap();
    assert_eq!(sol.objective, 1.0);
    assert_eq!(sol.value(&m, VarKey::Column(0)), Some(1.0));
}

#[test]
fn known_values_examples() {
    let sec5 = Instance::secretary(5).unwrap();
    let model = build_known_values_lp(&sec5, 0).unwrap();
    assert_abs_diff_eq!(solve_lp(&model).unwrap().objective, 13.0 / 30.0, epsilon = 1e-12);
    let sec6 = Instance::secretary(6).unwrap();
    assert!(solve_lp(&build_known_values_lp(&sec6, 0).unwrap()).unwrap().objective <= 13.0 / 30.0 + 1e-12);
    let h2 = solve_lp(&build_known_values_lp(&sec5, 2).unwrap()).unwrap().objective;
    assert_abs_diff_eq!(h2, dp_optimal(&sec5, 2).unwrap(), epsilon = 1e-12);
    for h in 0..4 {
        let c = Instance::new(vec![2.5; 4], 2.5).unwrap();
        assert_abs_diff_eq!(solve_lp(&build_known_values_lp(&c, h).unwrap()).unwrap().objective, 2.5, epsilon = 1e-12);
    }
}

#[test]
fn all_zero_instance_gives_zero_rule() {
    let zero = Instance::new(vec![0.0; 5], 0.0).unwrap();
    let model = build_known_values_lp(&zero, 1).unwrap();
    let sol = solve_lp(&model).unwrap();
    assert_eq!(sol.objective, 0.0);
    let rule = extract_policy(&sol.x_map(&model), 1, 5).unwrap();
    assert!(rule.rank_distribution().iter().all(|&p| p == 0.0));
}

#[test]
fn sdlp_single_item() {
    let model = build_sdlp(1, 0).unwrap();
    let sol = solve_lp(&model).unwrap();
    assert_abs_diff_eq!(sol.objective, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(sol.value(&model, VarKey::X { i: 1, l: 1 }).unwrap(), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(sol.value(&model, VarKey::Alpha).unwrap(), 1.0, epsilon = 1e-12);
    assert!(build_sdlp(3, 3).is_err());
}

#[test]
fn sdlp_four_two_exact_and_grid_search() {
    let exact = solve_lp(&build_sdlp_in::<BigRational>(4, 2).unwrap()).unwrap().objective;
    assert!(exact > BigRational::from_integer(BigInt::from(0)) && exact < BigRational::from_integer(BigInt::from(1)));
    let v = exact.to_f64().unwrap();
    assert_abs_diff_eq!(v, solve_lp(&build_sdlp(4, 2).unwrap()).unwrap().objective, epsilon = 1e-12);

    // Conditional stopping probabilities on a grid {0, 1/2, 1} for steps 3 and 4.
    let levels = [0.0, 0.5, 1.0];
    let mut best: f64 = 0.0;
    for code in 0..3usize.pow(7) {
        let mut digits = (0..7).scan(code, |c, _| {
            let d = *c % 3;
            *c /= 3;
            Some(levels[d])
        });
        let c = vec![digits.by_ref().take(3).collect::<Vec<_>>(), digits.take(4).collect()];
        best = best.max(sdlp_ratio(&rule_from_conditionals(2, 4, &c)));
    }
    assert!(best <= v + 1e-12, "grid {best} beats LP {v}");
    assert!(v - best < 0.05, "grid {best} far below LP {v}");
}

#[test]
fn sdlp_forty_near_half_rate_value() {
    let v = solve_lp(&build_sdlp(40, 20).unwrap()).unwrap().objective;
    assert!((v - 0.671).abs() < 0.05, "{v}");
}

#[test]
fn sdlp_optimum_dominates_and_is_tight() {
    for (n, h) in [(6, 2), (10, 5), (12, 3)] {
        let model = build_sdlp(n, h).unwrap();
        let sol = solve_lp(&model).unwrap();
        let rule = extract_policy(&sol.x_map(&model), h, n).unwrap();
        let dist = rule.rank_distribution();
        let (mut alg, mut opt, mut tight) = (0.0, 0.0, false);
        for k in 1..=h + 1 {
            alg += dist[k - 1];
            opt += opt_dist_dependent(n, h, k);
            assert!(alg >= sol.objective * opt - 1e-9);
            tight |= (alg - sol.objective * opt).abs() < 1e-9;
        }
        assert!(tight, "no dominance row tight for ({n}, {h})");
        assert_abs_diff_eq!(sdlp_ratio(&rule), sol.objective, epsilon = 1e-9);
    }
}

#[test]
fn extracted_rule_examples() {
    let h = 3;
    let single = extract_policy(&BTreeMap::from([((h + 1, 1), 1.0 / (h + 1) as f64)]), h, 6).unwrap();
    assert_abs_diff_eq!(single.conditional_stop(h + 1, 1), 1.0, epsilon = 1e-12);
    let inst = Instance::secretary(6).unwrap();
    let zero = StoppingRuleMatrix::zero(h, 6).unwrap();
    assert_eq!(zero.expected_reward(&inst).unwrap(), inst.default_tail());
    let rec = run_policy_matrix(&inst, &zero, 4).unwrap();
    assert_eq!(rec.selected_rank, None);
    assert!(extract_policy(&BTreeMap::from([((2, 1), 0.9)]), 0, 3).is_err());
}

#[test]
fn simulated_rule_matches_its_matrix() {
    let model = build_sdlp(4, 2).unwrap();
    let sol = solve_lp(&model).unwrap();
    let rule = extract_policy(&sol.x_map(&model), 2, 4).unwrap();
    let inst = Instance::secretary(4).unwrap();
    let trials = 1_000_000u64;
    let (mut by_rank, mut by_step) = ([0u64; 4], [0u64; 4]);
    for t in 0..trials {
        let rec = run_policy_matrix(&inst, &rule, 1_000 + t).unwrap();
        if let (Some(r), Some(s)) = (rec.selected_rank, rec.stop_time) {
            by_rank[r - 1] += 1;
            by_step[(s * 4.0).round() as usize - 1] += 1;
        }
    }
    let within = |count: u64, p: f64| {
        let f = count as f64 / trials as f64;
        let se = (p * (1.0 - p) / trials as f64).sqrt().max(1e-9);
        (f - p).abs() <= 3.0 * se
    };
    for (j, &p) in rule.rank_distribution().iter().enumerate() {
        assert!(within(by_rank[j], p), "rank {}: {} vs {p}", j + 1, by_rank[j]);
    }
    for i in 3..=4 {
        let p: f64 = (1..=i).map(|l| rule.x(i, l)).sum();
        assert!(within(by_step[i - 1], p), "step {i}: {} vs {p}", by_step[i - 1]);
    }
}

#[test]
fn sdlp_rule_meets_its_ratio_on_step_instances() {
    let (n, h) = (10, 5);
    let model = build_sdlp(n, h).unwrap();
    let sol = solve_lp(&model).unwrap();
    let alg = Algorithm::Policy(extract_policy(&sol.x_map(&model), h, n).unwrap());
    let dep = SamplingModel::dependent(h, n).unwrap();
    for k in 1..=n {
        let e = estimate_ratio(&Instance::step(k, n).unwrap(), &alg, &dep, 100_000, 40 + k as u64).unwrap();
        assert!(e.ratio >= sol.objective - 3.0 * e.ratio_stderr - 1e-9, "k = {k}: {} vs {}", e.ratio, sol.objective);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn scaling_scales_optimum_and_keeps_tight_rows(
        mut vals in prop::collection::vec(0u8..30, 2..9),
        h_frac in 0.0f64..1.0,
        lambda in 0.1f64..10.0,
    ) {
        vals.sort_unstable_by(|a, b| b.cmp(a));
        let inst = Instance::new(vals.iter().map(|&v| f64::from(v)).collect(), 0.0).unwrap();
        let h = (h_frac * inst.n() as f64) as usize;
        let base = build_known_values_lp(&inst, h).unwrap();
        let scaled = build_known_values_lp(&inst.scaled(lambda).unwrap(), h).unwrap();
        let (a, b) = (solve_lp(&base).unwrap(), solve_lp(&scaled).unwrap());
        prop_assert!((b.objective - lambda * a.objective).abs() <= 1e-9 * (1.0 + b.objective.abs()));
        prop_assert_eq!(a.tight_rows(&base, 1e-9), b.tight_rows(&scaled, 1e-9));
    }

    #[test]
    fn text_format_round_trips(n in 2usize..8, h_frac in 0.0f64..1.0) {
        let h = ((h_frac * n as f64) as usize).min(n - 1);
        let model = build_sdlp(n, h).unwrap();
        let back = LpModel::<f64>::from_text(&model.to_text()).unwrap();
        prop_assert_eq!(back.to_text(), model.to_text());
        prop_assert_eq!(solve_lp(&back).unwrap().objective, solve_lp(&model).unwrap().objective);
    }
}
