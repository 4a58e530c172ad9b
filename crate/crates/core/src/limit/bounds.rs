use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::alpha::{alpha_star, alpha_tilde, closed_alpha_small_p, inv_e};
use super::construction::construct_thresholds;
use crate::lp::{solve_lp, LpModel, Relation, VarKey};
use crate::numeric::binom;
use crate::threshold::{ascend, eval_kernel, RpOptions};
use crate::{Error, Result, ThresholdSchedule};

/// `max(2, ceil(ln 0.001 / ln p))`: number of ranks kept by the lower-bound program.
pub fn default_lbp_kmax(p: f64) -> usize {
    if p <= 0.0 {
        return 2;
    }
    ((0.001f64.ln() / p.ln()).ceil() as usize).max(2)
}

/// `ceil(ln(N / (1-p)))`: number of ranks kept by the upper-bound program.
pub fn default_ubp_kmax(p: f64, n: usize) -> usize {
    ((n as f64 / (1.0 - p)).ln().ceil() as usize).max(1)
}

/// Ratios of the lower-bound program: `F_k / (1 - p^k)` for `k < k_max` and `F_{k_max}`.
fn lbp_ratios_from_probs(probs: &[f64], p: f64) -> Vec<f64> {
    let kmax = probs.len();
    let mut f = 0.0;
    probs
        .iter()
        .enumerate()
        .map(|(k0, pr)| {
            f += pr;
            if k0 + 1 < kmax {
                f / (1.0 - p.powi(k0 as i32 + 1))
            } else {
                f
            }
        })
        .collect()
}

/// Ratios of the lower-bound program at a schedule, each reduced by the quadrature error bound.
pub fn lbp_ratios(schedule: &ThresholdSchedule, k_max: usize) -> Result<Vec<f64>> {
    let eval = eval_kernel(schedule, k_max)?;
    let mut probs: Vec<f64> = Vec::with_capacity(k_max);
    let mut prev = 0.0;
    for k in 1..=k_max {
        probs.push(eval.f(k) - prev);
        prev = eval.f(k);
    }
    let p = schedule.p();
    Ok(lbp_ratios_from_probs(&probs, p)
        .into_iter()
        .enumerate()
        .map(|(k0, r)| r - eval.quadrature_error / (1.0 - p.powi(k0 as i32 + 1)))
        .collect())
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Certified value of the lower-bound program and the schedule attaining it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LbpSolution {
    pub value: f64,
    pub schedule: ThresholdSchedule,
    pub ratios: Vec<f64>,
    pub k_max: usize,
}

/// Inverse temperatures of the smoothed minimum.
const SOFTMIN_BETAS: [f64; 5] = [100.0, 1e3, 1e4, 1e5, 1e6];

/// `-(1/beta) ln sum_k exp(-beta r_k)`, shifted for stability.
fn softmin(r: &[f64], beta: f64) -> f64 {
    let m = min_of(r);
    m - (r.iter().map(|x| (-beta * (x - m)).exp()).sum::<f64>()).ln() / beta
}

/// Lower bound on the limit ratio from thresholds `t_1..t_kmax` with `t_{kmax+1} = 1`.
///
/// Maximizes `min_k` of the program's ratios by coordinate ascent on a smoothed minimum with
/// increasing sharpness, from several starts. The reported value is the exact minimum at the
/// best schedule found, so it is a valid lower bound whatever the optimizer's quality.
pub fn lbp_lower_bound(p: f64, k_max: usize) -> Result<LbpSolution> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    if k_max < 2 {
        return Err(Error::InvalidArgument("k_max must be at least 2".into()));
    }
    let mut starts: Vec<Vec<f64>> = Vec::new();
    if p <= inv_e() {
        let mut t = vec![1.0; k_max];
        t[0] = inv_e();
        starts.push(t);
    }
    starts.push((1..=k_max).map(|i| p + (1.0 - p) * i as f64 / (k_max + 1) as f64).collect());
    if p > 0.0 {
        if let Ok(c) = construct_thresholds(p, alpha_tilde(p)?, k_max) {
            starts.push(c.times.times().to_vec());
        }
    }
    let opts = RpOptions { max_sweeps: 60, sweep_tol: 1e-11, xtol: 1e-9, ..RpOptions::default() };
    let runs: Vec<Result<Vec<f64>>> = crate::sim::par_map(starts, |mut t| {
        for beta in SOFTMIN_BETAS {
            let objective = |probs: &[f64]| softmin(&lbp_ratios_from_probs(probs, p), beta);
            t = ascend(t, p, k_max, &objective, &opts)?.0;
        }
        Ok(t)
    });
    let mut best: Option<LbpSolution> = None;
    for times in runs {
        let schedule = ThresholdSchedule::new(p, times?, true)?;
        let ratios = lbp_ratios(&schedule, k_max)?;
        let value = min_of(&ratios).max(0.0);
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(LbpSolution { value, schedule, ratios, k_max });
        }
    }
    Ok(best.expect("at least one start"))
}

/// Upper-bound program on a grid of `N` steps with `h = pN` history steps, ranks `l <= k_max`,
/// relaxed feasibility rows and the dominance coefficients
/// `C(j-1, l-1) (i/N)^l (1 - (i-1)/N)^{j-l}`.
pub fn build_ubp(p: f64, n: usize, k_max: usize) -> Result<LpModel<f64>> {
    let h = history_size(p, n)?;
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    let p = h as f64 / n as f64;
    let nf = n as f64;
    let mut model = LpModel::new();
    let steps: Vec<Vec<usize>> =
        (h + 1..=n).map(|i| (1..=k_max).map(|l| model.add_var(VarKey::X { i, l })).collect()).collect();
    let alpha = model.add_var(VarKey::Alpha);
    model.set_objective(vec![(alpha, 1.0)], 0.0);
    let mut earlier: Vec<(usize, f64)> = Vec::new();
    for (offset, cols) in steps.iter().enumerate() {
        let i = h + 1 + offset;
        for &c in cols {
            let mut row = earlier.clone();
            row.push((c, i as f64));
            model.add_constraint(row, Relation::Le, 1.0);
        }
        earlier.extend(cols.iter().map(|&c| (c, 1.0)));
    }
    // mass[offset][l-1] accumulates sum_{j<=k} of the dominance coefficient as k grows.
    let mut mass = vec![vec![0.0; k_max]; steps.len()];
    for k in 1..=k_max {
        let denom = 1.0 - p.powi(k as i32);
        let mut row = vec![(alpha, 1.0)];
        for (offset, cols) in steps.iter().enumerate() {
            let i = (h + 1 + offset) as f64;
            let (up, down) = (i / nf, 1.0 - (i - 1.0) / nf);
            for l in 1..=k {
                mass[offset][l - 1] += binom((k - 1) as u64, (l - 1) as u64) * up.powi(l as i32) * down.powi((k - l) as i32);
            }
            for (l0, &c) in cols.iter().enumerate() {
                if mass[offset][l0] != 0.0 {
                    row.push((c, -mass[offset][l0] / denom));
                }
            }
        }
        model.add_constraint(row, Relation::Le, 0.0);
    }
    Ok(model)
}

/// `h = pN`, which must be integral up to rounding noise.
fn history_size(p: f64, n: usize) -> Result<usize> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("N must be positive".into()));
    }
    let h = p * n as f64;
    if (h - h.round()).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("p N = {h} is not an integer")));
    }
    Ok(h.round() as usize)
}

/// Optimum of the upper-bound program.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UbpSolution {
    pub value: f64,
    pub n: usize,
    pub h: usize,
    pub k_max: usize,
    pub pivots: usize,
}

/// Upper bound on the limit ratio from the discretized dominance program.
pub fn ubp_upper_bound(p: f64, n: usize, k_max: usize) -> Result<UbpSolution> {
    let model = build_ubp(p, n, k_max)?;
    let sol = solve_lp(&model)?;
    Ok(UbpSolution { value: sol.objective, n, h: history_size(p, n)?, k_max, pivots: sol.pivots })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LowerMethod {
    ClosedForm1e,
    Construction,
    Lbp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpperMethod {
    ClosedForm1e,
    Ubp,
    AlphaStarCap,
}

impl LowerMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ClosedForm1e => "closed_form",
            Self::Construction => "construction",
            Self::Lbp => "lbp",
        }
    }
}

impl UpperMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ClosedForm1e => "closed_form",
            Self::Ubp => "ubp",
            Self::AlphaStarCap => "alpha_star",
        }
    }
}

/// Parameters of a certificate run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateParams {
    /// Grid size of the upper-bound program.
    pub n: usize,
    /// Ranks kept by the upper-bound program.
    pub ubp_k_max: usize,
    /// Ranks kept by the lower-bound program, which is also its number of thresholds.
    pub lbp_k_max: usize,
}

impl CertificateParams {
    pub fn defaults(p: f64, n: usize) -> Self {
        Self { n, ubp_k_max: default_ubp_kmax(p, n), lbp_k_max: default_lbp_kmax(p) }
    }
}

/// Bracket on the limit ratio at one sample rate, with every ingredient that was computed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaCertificate {
    pub p: f64,
    pub lower: f64,
    pub upper: f64,
    pub method_lower: LowerMethod,
    pub method_upper: UpperMethod,
    pub params: CertificateParams,
    pub lbp: f64,
    pub ubp: f64,
    pub construction: Option<f64>,
    pub closed_form: Option<f64>,
    pub alpha_star: f64,
    pub runtime_ms: f64,
}

/// Best lower and upper bounds available at `p`: the closed form when `p <= 1/e`, the lower
/// and upper programs, the explicit construction and the cap `alpha*`.
pub fn certify_alpha(p: f64, params: CertificateParams) -> Result<AlphaCertificate> {
    let start = Instant::now();
    let closed_form = if p <= inv_e() { Some(closed_alpha_small_p(p)?) } else { None };
    let lbp = lbp_lower_bound(p, params.lbp_k_max)?.value;
    let ubp = ubp_upper_bound(p, params.n, params.ubp_k_max)?.value;
    let construction = if p > 0.0 { Some(alpha_tilde(p)?) } else { None };
    let star = alpha_star().value;

    let mut lower = (lbp, LowerMethod::Lbp);
    if let Some(c) = construction.filter(|&c| c > lower.0) {
        lower = (c, LowerMethod::Construction);
    }
    if let Some(c) = closed_form.filter(|&c| c >= lower.0) {
        lower = (c, LowerMethod::ClosedForm1e);
    }
    let mut upper = (ubp, UpperMethod::Ubp);
    if star < upper.0 {
        upper = (star, UpperMethod::AlphaStarCap);
    }
    if let Some(c) = closed_form.filter(|&c| c <= upper.0) {
        upper = (c, UpperMethod::ClosedForm1e);
    }
    Ok(AlphaCertificate {
        p,
        lower: lower.0,
        upper: upper.0,
        method_lower: lower.1,
        method_upper: upper.1,
        params,
        lbp,
        ubp,
        construction,
        closed_form,
        alpha_star: star,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}
