use std::collections::BTreeMap;

use super::model::{LpModel, Relation, VarKey};
use crate::numeric::Field;
use crate::{Error, Result};

/// Solver knobs.
#[derive(Debug, Clone)]
pub struct SimplexOptions {
    /// Pivot budget across both phases; `None` picks `20 (rows + columns) + 1000`.
    pub max_pivots: Option<usize>,
    /// Consecutive degenerate pivots tolerated under the largest-coefficient rule
    /// before switching to Bland's rule for the rest of the phase.
    pub degenerate_switch: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { max_pivots: None, degenerate_switch: 64 }
    }
}

/// Optimal basic solution.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<F = f64> {
    pub objective: F,
    /// One value per model column.
    pub values: Vec<F>,
    pub pivots: usize,
}

impl<F: Field> LpSolution<F> {
    pub fn value(&self, model: &LpModel<F>, key: VarKey) -> Option<F> {
        model.column(&key).map(|c| self.values[c].clone())
    }

    /// The `x_{i,l}` part of the solution as floats.
    pub fn x_map(&self, model: &LpModel<F>) -> BTreeMap<(usize, usize), f64> {
        model
            .vars()
            .iter()
            .zip(&self.values)
            .filter_map(|(k, v)| match k {
                VarKey::X { i, l } => Some(((*i, *l), v.to_f64())),
                _ => None,
            })
            .collect()
    }

    /// Indices of rows whose slack is at most `tol`.
    pub fn tight_rows(&self, model: &LpModel<F>, tol: f64) -> Vec<usize> {
        (0..model.num_rows())
            .filter(|&r| (model.constraints()[r].rhs.clone() - model.activity(r, &self.values)).to_f64().abs() <= tol)
            .collect()
    }
}

/// Solves with default options.
pub fn solve_lp<F: Field>(model: &LpModel<F>) -> Result<LpSolution<F>> {
    solve_lp_with(model, &SimplexOptions::default())
}

struct Tableau<F> {
    rows: usize,
    cols: usize,
    a: Vec<F>,
    b: Vec<F>,
    basis: Vec<usize>,
    cost: Vec<F>,
    pivots: usize,
    budget: usize,
}

impl<F: Field> Tableau<F> {
    fn at(&self, r: usize, c: usize) -> &F {
        &self.a[r * self.cols + c]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let cols = self.cols;
        let inv = F::one() / self.at(r, c).clone();
        let (before, rest) = self.a.split_at_mut(r * cols);
        let (prow, after) = rest.split_at_mut(cols);
        let mut nz = Vec::with_capacity(cols);
        for (j, v) in prow.iter_mut().enumerate() {
            if !(*v == F::zero()) {
                *v = v.clone() * inv.clone();
                nz.push(j);
            }
        }
        prow[c] = F::one();
        self.b[r] = self.b[r].clone() * inv;
        let br = self.b[r].clone();
        let apply = |row: &mut [F], bk: &mut F| {
            let f = row[c].clone();
            if f == F::zero() {
                return;
            }
            for &j in &nz {
                row[j] = row[j].clone() - f.clone() * prow[j].clone();
            }
            row[c] = F::zero();
            *bk = bk.clone() - f * br.clone();
            if *bk < F::zero() && !bk.is_negative() {
                *bk = F::zero();
            }
        };
        let (b_before, b_rest) = self.b.split_at_mut(r);
        for (row, bk) in before.chunks_mut(cols).zip(b_before.iter_mut()) {
            apply(row, bk);
        }
        for (row, bk) in after.chunks_mut(cols).zip(b_rest[1..].iter_mut()) {
            apply(row, bk);
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Reduced costs `c_j - c_B B^{-1} A_j` for the current basis.
    fn reduced_costs(&self) -> Vec<F> {
        let mut d = self.cost.clone();
        for r in 0..self.rows {
            let cb = self.cost[self.basis[r]].clone();
            if cb == F::zero() {
                continue;
            }
            for (j, dj) in d.iter_mut().enumerate().take(self.cols) {
                let v = self.at(r, j);
                if !(*v == F::zero()) {
                    *dj = dj.clone() - cb.clone() * v.clone();
                }
            }
        }
        d
    }

    /// Runs primal simplex on the current cost vector over columns `< allowed`.
    fn optimize(&mut self, allowed: usize, switch: usize) -> Result<()> {
        let mut d = self.reduced_costs();
        let mut bland = false;
        let mut degenerate_run = 0usize;
        loop {
            let entering = if bland {
                (0..allowed).find(|&j| d[j].is_positive())
            } else {
                let mut best: Option<usize> = None;
                for j in 0..allowed {
                    if d[j].is_positive() && best.is_none_or(|b| d[j] > d[b]) {
                        best = Some(j);
                    }
                }
                best
            };
            let Some(c) = entering else { return Ok(()) };
            let mut leave: Option<(usize, F)> = None;
            for r in 0..self.rows {
                let v = self.at(r, c);
                if !v.is_positive() {
                    continue;
                }
                let ratio = self.b[r].clone() / v.clone();
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        let tie = (ratio.clone() - lratio.clone()).is_negligible();
                        if (!tie && ratio < lratio) || (tie && self.basis[r] < self.basis[lr]) {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
            let Some((r, ratio)) = leave else { return Err(Error::Unbounded) };
            if self.pivots >= self.budget {
                return Err(Error::IterationLimit(self.pivots));
            }
            if ratio.is_negligible() {
                degenerate_run += 1;
                if degenerate_run > switch {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            let dc = d[c].clone();
            self.pivot(r, c);
            let row = &self.a[r * self.cols..(r + 1) * self.cols];
            for (j, v) in row.iter().enumerate() {
                if !(*v == F::zero()) {
                    d[j] = d[j].clone() - dc.clone() * v.clone();
                }
            }
            d[c] = F::zero();
        }
    }
}

/// Two-phase dense tableau simplex. Entering columns follow the largest reduced cost
/// (lowest index on ties) and fall back to Bland's rule after a run of degenerate pivots;
/// ratio-test ties go to the lowest basic column. The result is deterministic.
pub fn solve_lp_with<F: Field>(model: &LpModel<F>, opts: &SimplexOptions) -> Result<LpSolution<F>> {
    let n = model.num_vars();
    let m = model.num_rows();
    // Orient rows so rhs >= 0; a flipped `<=` becomes `>=`.
    struct RowPlan<F> {
        sign_neg: bool,
        rel: Relation,
        rhs: F,
    }
    let plans: Vec<RowPlan<F>> = model
        .constraints()
        .iter()
        .map(|c| {
            let neg = c.rhs < F::zero();
            RowPlan { sign_neg: neg, rel: c.rel, rhs: if neg { -c.rhs.clone() } else { c.rhs.clone() } }
        })
        .collect();
    let n_slack = plans.iter().filter(|p| p.rel == Relation::Le).count();
    let n_art = plans.iter().filter(|p| p.rel == Relation::Eq || p.sign_neg).count();
    let cols = n + n_slack + n_art;
    let mut a = vec![F::zero(); m * cols];
    let mut b = Vec::with_capacity(m);
    let mut basis = vec![0usize; m];
    let (mut next_slack, mut next_art) = (n, n + n_slack);
    for (r, (con, plan)) in model.constraints().iter().zip(&plans).enumerate() {
        let row = &mut a[r * cols..(r + 1) * cols];
        for (c, v) in &con.coeffs {
            row[*c] = if plan.sign_neg { -v.clone() } else { v.clone() };
        }
        b.push(plan.rhs.clone());
        if plan.rel == Relation::Le {
            row[next_slack] = if plan.sign_neg { -F::one() } else { F::one() };
            if !plan.sign_neg {
                basis[r] = next_slack;
            }
            next_slack += 1;
        }
        if plan.rel == Relation::Eq || plan.sign_neg {
            row[next_art] = F::one();
            basis[r] = next_art;
            next_art += 1;
        }
    }
    let budget = opts.max_pivots.unwrap_or(20 * (m + cols) + 1000);
    let mut t = Tableau { rows: m, cols, a, b, basis, cost: vec![F::zero(); cols], pivots: 0, budget };

    if n_art > 0 {
        for j in n + n_slack..cols {
            t.cost[j] = -F::one();
        }
        t.optimize(cols, opts.degenerate_switch)?;
        let infeasibility = (0..m)
            .filter(|&r| t.basis[r] >= n + n_slack)
            .fold(F::zero(), |acc, r| acc + t.b[r].clone());
        if infeasibility > F::tolerance() * F::from_u64(100) {
            return Err(Error::Infeasible);
        }
        for r in 0..m {
            if t.basis[r] >= n + n_slack {
                if let Some(j) = (0..n + n_slack).find(|&j| !t.at(r, j).is_negligible()) {
                    t.pivot(r, j);
                }
            }
        }
    }

    t.cost = vec![F::zero(); cols];
    for (c, v) in model.objective() {
        t.cost[*c] = v.clone();
    }
    t.optimize(n + n_slack, opts.degenerate_switch)?;

    let mut values = vec![F::zero(); n];
    for r in 0..m {
        if t.basis[r] < n {
            values[t.basis[r]] = t.b[r].clone();
        }
    }
    Ok(LpSolution { objective: model.evaluate(&values), values, pivots: t.pivots })
}
