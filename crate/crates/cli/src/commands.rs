use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::json;

use pdos::limit::{certify_alpha, default_lbp_kmax, default_ubp_kmax, CertificateParams};
use pdos::lp::{build_known_values_lp, build_sdlp, extract_policy, solve_lp, StoppingRuleMatrix};
use pdos::sim::{estimate_ratio, par_map, step_cap, step_instance_sweep, Algorithm, RatioEstimate};
use pdos::threshold::{
    classic_closed_forms, default_horizon, min_rank_expected_rank, optimize_min_rank, optimize_rp_with, ClassicProblem, RpOptions,
};
use pdos::{Instance, SamplingModel, ThresholdSchedule};

use crate::output::{emit, g12, ser_opt_r12, ser_r12, version_string, RunManifest, Table};
use crate::{BoundsArgs, ClassicArgs, Command, LpArgs, LpMode, ModelKind, SimulateArgs};

/// Runs a command; `Ok(false)` means some rows failed but output was still written.
pub fn run(command: Command) -> Result<bool> {
    match command {
        Command::Replay(args) => {
            let text = std::fs::read_to_string(&args.manifest)
                .with_context(|| format!("reading {}", args.manifest.display()))?;
            let manifest: RunManifest = serde_json::from_str(&text).context("parsing manifest")?;
            let mut recorded: Command = serde_json::from_value(manifest.params).context("manifest parameters")?;
            if let Some(out) = args.out {
                set_out(&mut recorded, out)?;
            }
            run(recorded)
        }
        other => {
            let params = serde_json::to_value(&other)?;
            let name = params["command"].as_str().unwrap_or_default().to_string();
            let (bytes, seed, ok, out) = match &other {
                Command::Classic(a) => (classic(a)?, a.seed, true, a.output.out.clone()),
                Command::Bounds(a) => {
                    let (bytes, ok) = bounds(a)?;
                    (bytes, 0, ok, a.output.out.clone())
                }
                Command::Simulate(a) => (simulate(a)?, a.seed, true, a.output.out.clone()),
                Command::Lp(a) => (lp(a)?, 0, true, a.out.clone()),
                Command::Replay(_) => unreachable!("handled above"),
            };
            let manifest = RunManifest {
                command: name,
                params,
                seed,
                git_like_version: version_string(),
                outputs: out.iter().map(|p| p.display().to_string()).collect(),
            };
            emit(&bytes, out.as_deref(), &manifest)?;
            Ok(ok)
        }
    }
}

fn set_out(command: &mut Command, out: PathBuf) -> Result<()> {
    match command {
        Command::Classic(a) => a.output.out = Some(out),
        Command::Bounds(a) => a.output.out = Some(out),
        Command::Simulate(a) => a.output.out = Some(out),
        Command::Lp(a) => a.out = Some(out),
        Command::Replay(_) => bail!("a manifest cannot record a replay"),
    }
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {what} {}", path.display()))?;
    serde_json::from_str(&text)
        .map_err(|e| anyhow!("{what} {} line {} column {}: {e}", path.display(), e.line(), e.column()))
}

#[derive(Serialize)]
struct ClassicRow {
    problem: String,
    #[serde(serialize_with = "ser_r12")]
    p: f64,
    method: &'static str,
    #[serde(serialize_with = "ser_r12")]
    value: f64,
    #[serde(serialize_with = "ser_opt_r12")]
    expected_rank: Option<f64>,
    times: Vec<f64>,
}

fn classic(a: &ClassicArgs) -> Result<Vec<u8>> {
    let row = if a.problem.eq_ignore_ascii_case("constant") {
        let instance = Instance::new(vec![a.value], a.value)?;
        let sol = optimize_rp_with(&instance, a.p, a.kmax.unwrap_or(1), &rp_opts(a.seed))?;
        ClassicRow {
            problem: "constant".into(),
            p: a.p,
            method: "coordinate_ascent",
            value: sol.value,
            expected_rank: None,
            times: sol.schedule.times().to_vec(),
        }
    } else {
        let problem: ClassicProblem = a.problem.parse()?;
        let name = serde_json::to_value(problem)?.as_str().unwrap_or_default().to_string();
        if a.p == 0.0 {
            let sol = classic_closed_forms(problem);
            let expected_rank =
                (problem == ClassicProblem::MinRank).then(|| min_rank_expected_rank(&sol.schedule).value);
            ClassicRow {
                problem: name,
                p: 0.0,
                method: "closed_form",
                value: sol.value,
                expected_rank,
                times: sol.schedule.times().to_vec(),
            }
        } else if problem == ClassicProblem::MinRank {
            let sol = optimize_min_rank(a.p, a.kmax.unwrap_or(500), 1_000)?;
            ClassicRow {
                problem: name,
                p: a.p,
                method: "telescoped_descent",
                value: sol.value,
                expected_rank: Some(-sol.value),
                times: sol.schedule.times().to_vec(),
            }
        } else {
            let instance = match problem {
                ClassicProblem::Secretary => Instance::step(1, 1)?,
                ClassicProblem::OneTwoSecretary => Instance::step(2, 2)?,
                ClassicProblem::MinRank => unreachable!(),
            };
            let k = default_horizon(instance.distinct_prefix(), a.p).max(a.kmax.unwrap_or(0));
            let sol = optimize_rp_with(&instance, a.p, k, &rp_opts(a.seed))?;
            ClassicRow {
                problem: name,
                p: a.p,
                method: "coordinate_ascent",
                value: sol.value,
                expected_rank: None,
                times: sol.schedule.times()[..instance.distinct_prefix()].to_vec(),
            }
        }
    };
    let times = row.times.iter().map(|t| g12(*t)).collect::<Vec<_>>().join(" ");
    let table = Table {
        header: vec!["problem", "p", "method", "value", "expected_rank", "times"],
        rows: vec![vec![
            row.problem.clone(),
            g12(row.p),
            row.method.into(),
            g12(row.value),
            row.expected_rank.map(g12).unwrap_or_default(),
            times,
        ]],
        json: json!([round_times(serde_json::to_value(&row)?)]),
    };
    table.render(a.output.format)
}

fn rp_opts(seed: u64) -> RpOptions {
    RpOptions { seed, ..RpOptions::default() }
}

/// Rounds the `times` array of a serialized row to 12 significant digits.
fn round_times(mut v: serde_json::Value) -> serde_json::Value {
    if let Some(serde_json::Value::Array(ts)) = v.get_mut("times") {
        for t in ts.iter_mut() {
            if let Some(x) = t.as_f64() {
                *t = json!(crate::output::r12(x));
            }
        }
    }
    v
}

#[derive(Serialize)]
struct BoundsRow {
    #[serde(serialize_with = "ser_r12")]
    p: f64,
    #[serde(serialize_with = "ser_opt_r12")]
    lower: Option<f64>,
    #[serde(serialize_with = "ser_opt_r12")]
    upper: Option<f64>,
    method_lower: String,
    method_upper: String,
    #[serde(rename = "N")]
    n: usize,
    k_max: usize,
    #[serde(serialize_with = "ser_opt_r12")]
    runtime_ms: Option<f64>,
}

fn bounds(a: &BoundsArgs) -> Result<(Vec<u8>, bool)> {
    let results = par_map(a.p.clone(), |p| {
        let params = CertificateParams {
            n: a.n,
            ubp_k_max: a.kmax.unwrap_or_else(|| default_ubp_kmax(p, a.n)),
            lbp_k_max: a.lbp_kmax.unwrap_or_else(|| default_lbp_kmax(p)),
        };
        (p, params, certify_alpha(p, params))
    });
    let mut ok = true;
    let mut rows = Vec::new();
    for (p, params, res) in results {
        rows.push(match res {
            Ok(c) => BoundsRow {
                p,
                lower: Some(c.lower),
                upper: Some(c.upper),
                method_lower: c.method_lower.as_str().into(),
                method_upper: c.method_upper.as_str().into(),
                n: params.n,
                k_max: params.ubp_k_max,
                runtime_ms: Some(c.runtime_ms),
            },
            Err(e) => {
                eprintln!("p = {p}: {e}");
                ok = false;
                BoundsRow {
                    p,
                    lower: None,
                    upper: None,
                    method_lower: "error".into(),
                    method_upper: "error".into(),
                    n: params.n,
                    k_max: params.ubp_k_max,
                    runtime_ms: None,
                }
            }
        });
    }
    let opt = |x: Option<f64>| x.map(g12).unwrap_or_default();
    let table = Table {
        header: vec!["p", "lower", "upper", "method_lower", "method_upper", "N", "k_max", "runtime_ms"],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    g12(r.p),
                    opt(r.lower),
                    opt(r.upper),
                    r.method_lower.clone(),
                    r.method_upper.clone(),
                    r.n.to_string(),
                    r.k_max.to_string(),
                    opt(r.runtime_ms),
                ]
            })
            .collect(),
        json: serde_json::to_value(&rows)?,
    };
    Ok((table.render(a.output.format)?, ok))
}

#[derive(Serialize)]
struct SimRow {
    instance_id: String,
    k: Option<usize>,
    #[serde(rename = "N")]
    n: usize,
    trials: usize,
    #[serde(serialize_with = "ser_r12")]
    alg_mean: f64,
    #[serde(serialize_with = "ser_r12")]
    alg_stderr: f64,
    #[serde(serialize_with = "ser_r12")]
    opt_mean: f64,
    #[serde(serialize_with = "ser_r12")]
    ratio: f64,
    seed: u64,
}

impl SimRow {
    fn new(instance_id: &str, k: Option<usize>, n: usize, e: &RatioEstimate, seed: u64) -> Self {
        Self {
            instance_id: instance_id.into(),
            k,
            n,
            trials: e.alg.trials,
            alg_mean: e.alg.mean,
            alg_stderr: e.alg.stderr,
            opt_mean: e.opt.mean,
            ratio: e.ratio,
            seed,
        }
    }
}

fn simulate(a: &SimulateArgs) -> Result<Vec<u8>> {
    let schedule: ThresholdSchedule = read_json(&a.schedule, "schedule")?;
    let p = a.p.unwrap_or(schedule.p());
    let instance = a.instance.as_ref().map(|path| read_json::<Instance>(path, "instance")).transpose()?;
    let n = instance.as_ref().map_or(a.n, Instance::n);
    let model = match a.model {
        ModelKind::Independent => SamplingModel::independent(p)?,
        ModelKind::Dependent => SamplingModel::dependent_from_rate(p, n)?,
    };
    let algorithm = Algorithm::Threshold(schedule);
    let rows: Vec<SimRow> = match (&instance, &a.instance) {
        (Some(inst), Some(path)) => {
            let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let e = estimate_ratio(inst, &algorithm, &model, a.trials, a.seed)?;
            vec![SimRow::new(&id, None, n, &e, a.seed)]
        }
        _ => {
            let cap = a.kmax.unwrap_or_else(|| step_cap(p, 1e-3));
            step_instance_sweep(n, &algorithm, &model, cap, a.trials, a.seed)?
                .iter()
                .map(|s| SimRow::new("step", Some(s.k), n, &s.estimate, a.seed))
                .collect()
        }
    };
    let table = Table {
        header: vec!["instance_id", "k", "N", "trials", "alg_mean", "alg_stderr", "opt_mean", "ratio", "seed"],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.instance_id.clone(),
                    r.k.map(|k| k.to_string()).unwrap_or_default(),
                    r.n.to_string(),
                    r.trials.to_string(),
                    g12(r.alg_mean),
                    g12(r.alg_stderr),
                    g12(r.opt_mean),
                    g12(r.ratio),
                    r.seed.to_string(),
                ]
            })
            .collect(),
        json: serde_json::to_value(&rows)?,
    };
    table.render(a.output.format)
}

#[derive(Serialize)]
struct LpReport {
    mode: LpMode,
    n: usize,
    h: usize,
    #[serde(serialize_with = "ser_r12")]
    optimum: f64,
    pivots: usize,
    policy: StoppingRuleMatrix,
    tight_constraints: Vec<usize>,
}

fn lp(a: &LpArgs) -> Result<Vec<u8>> {
    let model = match a.mode {
        LpMode::Known => {
            let instance = match &a.instance {
                Some(path) => read_json::<Instance>(path, "instance")?,
                None => Instance::secretary(a.n)?,
            };
            if instance.n() != a.n {
                bail!("instance has {} items but --n is {}", instance.n(), a.n);
            }
            build_known_values_lp(&instance, a.h)?
        }
        LpMode::Sdlp => build_sdlp(a.n, a.h)?,
    };
    let sol = solve_lp(&model)?;
    let policy = extract_policy(&sol.x_map(&model), a.h, a.n)?;
    let report = LpReport {
        mode: a.mode,
        n: a.n,
        h: a.h,
        optimum: sol.objective,
        pivots: sol.pivots,
        policy,
        tight_constraints: sol.tight_rows(&model, 1e-9),
    };
    let mut bytes = serde_json::to_vec_pretty(&report)?;
    bytes.push(b'\n');
    Ok(bytes)
}
