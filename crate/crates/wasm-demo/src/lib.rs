//! Browser bindings for three pdos computations. Every export returns a JSON string; errors
//! become JavaScript exceptions carrying the message.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use pdos::limit::{alpha_star, alpha_tilde, closed_alpha_small_p, construct_thresholds};
use pdos::sim::{step_cap, step_instance_sweep, Algorithm};
use pdos::threshold::{classic_closed_forms, default_horizon, optimize_min_rank, optimize_rp, ClassicProblem};
use pdos::{Instance, SamplingModel, ThresholdSchedule};

type Out = Result<Value, String>;

fn to_js(r: Out) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

/// Guaranteed ratio of the constructed schedule, the closed form where it applies, and the
/// rate-free upper bound, on `points + 1` evenly spaced rates in `[0, p_max]`.
pub fn alpha_curve_value(points: usize, p_max: f64) -> Out {
    if points == 0 || !(0.0..1.0).contains(&p_max) {
        return Err("need at least one point and 0 <= p_max < 1".into());
    }
    let star = alpha_star().value;
    let rows = (0..=points)
        .map(|i| {
            let p = p_max * i as f64 / points as f64;
            // The constructed schedule needs a positive rate.
            let tilde = if p > 0.0 { Some(alpha_tilde(p).map_err(|e| e.to_string())?) } else { None };
            Ok(json!({
                "p": p,
                "alpha_tilde": tilde,
                "closed_form": closed_alpha_small_p(p).ok(),
                "alpha_star": star,
            }))
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(Value::Array(rows))
}

/// Optimal thresholds of `secretary`, `one-two` or `min-rank` (first 30 times shown) at rate `p`.
pub fn optimize_thresholds_value(problem: &str, p: f64) -> Out {
    let problem: ClassicProblem = problem.parse().map_err(|e: pdos::Error| e.to_string())?;
    if p == 0.0 {
        let sol = classic_closed_forms(problem);
        let shown = sol.schedule.times().len().min(30);
        return Ok(json!({"method": "closed_form", "value": sol.value, "times": &sol.schedule.times()[..shown]}));
    }
    let instance = match problem {
        ClassicProblem::Secretary => Instance::step(1, 1),
        ClassicProblem::OneTwoSecretary => Instance::step(2, 2),
        ClassicProblem::MinRank => {
            let sol = optimize_min_rank(p, 500, 1_000).map_err(|e| e.to_string())?;
            let times = &sol.schedule.times()[..30];
            return Ok(json!({"method": "telescoped_descent", "value": sol.value, "times": times}));
        }
    }
    .map_err(|e| e.to_string())?;
    let m = instance.distinct_prefix();
    let sol = optimize_rp(&instance, p, default_horizon(m, p)).map_err(|e| e.to_string())?;
    Ok(json!({"method": "coordinate_ascent", "value": sol.value, "times": &sol.schedule.times()[..m]}))
}

/// Monte Carlo ratio on every 0/1 step instance of `n` items, for the constructed schedule
/// (`times` empty) or the given comma-separated thresholds.
pub fn simulate_ratio_value(p: f64, times: &str, n: usize, trials: usize, seed: u64) -> Out {
    let cap = step_cap(p, 1e-3).min(n);
    let schedule = if times.trim().is_empty() {
        let alpha = alpha_tilde(p).map_err(|e| e.to_string())?;
        construct_thresholds(p, alpha, cap).map_err(|e| e.to_string())?.times
    } else {
        let parsed = times
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| format!("threshold {t:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        ThresholdSchedule::new(p, parsed, true).map_err(|e| e.to_string())?
    };
    let model = SamplingModel::independent(p).map_err(|e| e.to_string())?;
    let alg = Algorithm::Threshold(schedule.clone());
    let sweep = step_instance_sweep(n, &alg, &model, cap, trials, seed).map_err(|e| e.to_string())?;
    let rows: Vec<Value> = sweep
        .iter()
        .map(|s| json!({"k": s.k, "ratio": s.estimate.ratio, "stderr": s.estimate.ratio_stderr}))
        .collect();
    Ok(json!({"times": schedule.times(), "rows": rows}))
}

#[wasm_bindgen]
pub fn alpha_curve(points: usize, p_max: f64) -> Result<String, JsValue> {
    to_js(alpha_curve_value(points, p_max))
}

#[wasm_bindgen]
pub fn optimize_thresholds(problem: &str, p: f64) -> Result<String, JsValue> {
    to_js(optimize_thresholds_value(problem, p))
}

#[wasm_bindgen]
pub fn simulate_ratio(p: f64, times: &str, n: usize, trials: usize, seed: u64) -> Result<String, JsValue> {
    to_js(simulate_ratio_value(p, times, n, trials, seed))
}
