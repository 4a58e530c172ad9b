use super::model::{LpModel, Relation, VarKey};
use crate::numeric::Field;
use crate::{Error, Instance, Result};

/// Adds `x_{i,l}` for `h < i <= n`, `l <= min(i, l_cap)` and the feasibility rows
/// `i x_{i,l} + sum_{h<j<i} sum_s x_{j,s} <= 1`. Returns the column ids grouped by step.
pub(crate) fn add_feasibility_block<F: Field>(model: &mut LpModel<F>, n: usize, h: usize, l_cap: usize) -> Vec<Vec<usize>> {
    let steps: Vec<Vec<usize>> =
        (h + 1..=n).map(|i| (1..=i.min(l_cap)).map(|l| model.add_var(VarKey::X { i, l })).collect()).collect();
    let mut earlier: Vec<(usize, F)> = Vec::new();
    for (offset, cols) in steps.iter().enumerate() {
        let i = h + 1 + offset;
        for &c in cols {
            let mut row = earlier.clone();
            row.push((c, F::from_u64(i as u64)));
            model.add_constraint(row, Relation::Le, F::one());
        }
        earlier.extend(cols.iter().map(|&c| (c, F::one())));
    }
    steps
}

/// Finite LP over joint stop probabilities whose optimum is the best expected reward
/// for known values `Y` and a history of exactly `h` items.
pub fn build_known_values_lp(instance: &Instance, h: usize) -> Result<LpModel<f64>> {
    build_known_values_lp_in::<f64>(instance, h)
}

/// [`build_known_values_lp`] over an arbitrary field.
pub fn build_known_values_lp_in<F: Field>(instance: &Instance, h: usize) -> Result<LpModel<F>> {
    let n = instance.n();
    if h >= n {
        return Err(Error::InvalidArgument(format!("history size {h} must be below N = {n}")));
    }
    let tail = F::from_f64(instance.default_tail());
    let ys: Vec<F> = instance.values().iter().map(|&v| F::from_f64(v)).collect();
    let mut model = LpModel::new();
    let steps = add_feasibility_block(&mut model, n, h, n);
    let mut objective = Vec::new();
    for (offset, cols) in steps.iter().enumerate() {
        let i = h + 1 + offset;
        let scale = F::from_u64(i as u64) / F::from_u64(n as u64);
        for (l0, &c) in cols.iter().enumerate() {
            let l = l0 + 1;
            let mut gain = F::zero();
            for j in l..=n - (i - l) {
                gain = gain + ys[j - 1].clone() * F::local_rank_prob(n as u64, i as u64, j as u64, l as u64);
            }
            objective.push((c, scale.clone() * gain - tail.clone()));
        }
    }
    model.set_objective(objective, tail);
    Ok(model)
}

/// Stochastic-dominance LP: maximize `alpha` such that for every `k <= h + 1` the stopping
/// rule selects rank at most `k` with probability at least `alpha` times the chance that the
/// best online item has rank at most `k`.
pub fn build_sdlp(n: usize, h: usize) -> Result<LpModel<f64>> {
    build_sdlp_in::<f64>(n, h)
}

/// [`build_sdlp`] over an arbitrary field.
pub fn build_sdlp_in<F: Field>(n: usize, h: usize) -> Result<LpModel<F>> {
    if h >= n {
        return Err(Error::InvalidArgument(format!("history size {h} must be below N = {n}")));
    }
    let mut model = LpModel::new();
    let steps = add_feasibility_block(&mut model, n, h, n);
    let alpha = model.add_var(VarKey::Alpha);
    model.set_objective(vec![(alpha, F::one())], F::zero());

    // Cumulative law of the best online rank via the running product.
    let nf = |v: usize| F::from_u64(v as u64);
    let mut prod = F::one();
    let mut cdf = F::zero();
    // rank_mass[c] accumulates sum_{j<=k} (i/N) P(B_{i,l} | C_{i,j}) for column c as k grows.
    let mut rank_mass: Vec<F> = vec![F::zero(); model.num_vars()];
    for k in 1..=h + 1 {
        if k >= 2 {
            prod = prod * nf(h + 2 - k) / nf(n + 2 - k);
        }
        cdf = cdf + nf(n - h) / nf(n - k + 1) * prod.clone();
        let mut row = vec![(alpha, F::one())];
        for (offset, cols) in steps.iter().enumerate() {
            let i = h + 1 + offset;
            let scale = nf(i) / nf(n);
            for (l0, &c) in cols.iter().enumerate() {
                let l = l0 + 1;
                if l <= k && k <= n - (i - l) {
                    let w = F::local_rank_prob(n as u64, i as u64, k as u64, l as u64);
                    rank_mass[c] = rank_mass[c].clone() + scale.clone() * w;
                }
                if !(rank_mass[c] == F::zero()) {
                    row.push((c, -(rank_mass[c].clone() / cdf.clone())));
                }
            }
        }
        model.add_constraint(row, Relation::Le, F::zero());
    }
    Ok(model)
}
