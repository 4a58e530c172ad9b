use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::numeric::Field;
use crate::{Error, Result};

/// Meaning of an LP column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VarKey {
    /// Joint probability of stopping at step `i` on an item of local rank `l`.
    X { i: usize, l: usize },
    /// Competitive-ratio variable of the dominance programs.
    Alpha,
    /// Column read back from text without a semantic label.
    Column(usize),
}

impl std::fmt::Display for VarKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VarKey::X { i, l } => write!(f, "x[{i},{l}]"),
            VarKey::Alpha => write!(f, "alpha"),
            VarKey::Column(c) => write!(f, "c{c}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
}

impl Relation {
    fn token(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<F> {
    /// Sparse row, sorted by column with no duplicates.
    pub coeffs: Vec<(usize, F)>,
    pub rel: Relation,
    pub rhs: F,
}

/// Maximization problem over non-negative variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LpModel<F = f64> {
    vars: Vec<VarKey>,
    index: HashMap<VarKey, usize>,
    objective: Vec<(usize, F)>,
    offset: F,
    constraints: Vec<Constraint<F>>,
}

impl<F: Field> Default for LpModel<F> {
    fn default() -> Self {
        Self::new()
    }
}

fn normalize<F: Field>(mut row: Vec<(usize, F)>) -> Vec<(usize, F)> {
    row.sort_by_key(|(c, _)| *c);
    let mut out: Vec<(usize, F)> = Vec::with_capacity(row.len());
    for (c, v) in row {
        match out.last_mut() {
            Some((lc, lv)) if *lc == c => *lv = lv.clone() + v,
            _ => out.push((c, v)),
        }
    }
    out.retain(|(_, v)| !(v.clone().abs() == F::zero()));
    out
}

impl<F: Field> LpModel<F> {
    pub fn new() -> Self {
        Self { vars: vec![], index: HashMap::new(), objective: vec![], offset: F::zero(), constraints: vec![] }
    }

    /// Registers a column and returns its id; re-adding a key returns the existing id.
    pub fn add_var(&mut self, key: VarKey) -> usize {
        if let Some(&c) = self.index.get(&key) {
            return c;
        }
        let c = self.vars.len();
        self.vars.push(key);
        self.index.insert(key, c);
        c
    }

    pub fn set_objective(&mut self, coeffs: Vec<(usize, F)>, offset: F) {
        self.objective = normalize(coeffs);
        self.offset = offset;
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, F)>, rel: Relation, rhs: F) -> usize {
        let coeffs = normalize(coeffs);
        assert!(coeffs.iter().all(|(c, _)| *c < self.vars.len()), "constraint references unknown column");
        self.constraints.push(Constraint { coeffs, rel, rhs });
        self.constraints.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.len()
    }

    pub fn vars(&self) -> &[VarKey] {
        &self.vars
    }

    pub fn column(&self, key: &VarKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn objective(&self) -> &[(usize, F)] {
        &self.objective
    }

    pub fn offset(&self) -> &F {
        &self.offset
    }

    pub fn constraints(&self) -> &[Constraint<F>] {
        &self.constraints
    }

    /// Objective value of an assignment.
    pub fn evaluate(&self, x: &[F]) -> F {
        self.objective.iter().fold(self.offset.clone(), |acc, (c, v)| acc + v.clone() * x[*c].clone())
    }

    /// Left-hand side of row `r` at an assignment.
    pub fn activity(&self, r: usize, x: &[F]) -> F {
        self.constraints[r].coeffs.iter().fold(F::zero(), |acc, (c, v)| acc + v.clone() * x[*c].clone())
    }
}

impl LpModel<f64> {
    /// Plain-text sparse rendering. Row 0 is the objective; rows `1..=m` are constraints.
    /// The objective's `rel rhs` line is `obj <offset>`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "vars {} rows {} maximize", self.vars.len(), self.constraints.len());
        for (c, v) in &self.objective {
            let _ = writeln!(s, "0 {c} {v:.16e}");
        }
        for (r, row) in self.constraints.iter().enumerate() {
            for (c, v) in &row.coeffs {
                let _ = writeln!(s, "{} {c} {v:.16e}", r + 1);
            }
        }
        let _ = writeln!(s, "obj {:.16e}", self.offset);
        for row in &self.constraints {
            let _ = writeln!(s, "{} {:.16e}", row.rel.token(), row.rhs);
        }
        s
    }

    /// Parses [`LpModel::to_text`] output. Columns come back as [`VarKey::Column`].
    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, msg: &str| Error::Parse { line, msg: msg.to_string() };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hl, header) = lines.next().ok_or_else(|| err(1, "missing header"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 5 || h[0] != "vars" || h[2] != "rows" || h[4] != "maximize" {
            return Err(err(hl + 1, "expected `vars n rows m maximize`"));
        }
        let n: usize = h[1].parse().map_err(|_| err(hl + 1, "bad variable count"))?;
        let m: usize = h[3].parse().map_err(|_| err(hl + 1, "bad row count"))?;
        let mut rows: Vec<Vec<(usize, f64)>> = vec![vec![]; m + 1];
        let mut tails: Vec<(Relation, f64)> = vec![];
        let mut offset = None;
        for (ln, line) in lines {
            let t: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| err(ln + 1, "bad number"));
            match t.as_slice() {
                [rel, rhs] => {
                    let v = num(rhs)?;
                    match *rel {
                        "obj" if offset.is_none() && tails.is_empty() => offset = Some(v),
                        "<=" => tails.push((Relation::Le, v)),
                        "=" => tails.push((Relation::Eq, v)),
                        _ => return Err(err(ln + 1, "expected `obj`, `<=` or `=`")),
                    }
                }
                [r, c, v] => {
                    if offset.is_some() {
                        return Err(err(ln + 1, "coefficient after row terminators"));
                    }
                    let r: usize = r.parse().map_err(|_| err(ln + 1, "bad row id"))?;
                    let c: usize = c.parse().map_err(|_| err(ln + 1, "bad column id"))?;
                    if r > m || c >= n {
                        return Err(err(ln + 1, "row or column out of range"));
                    }
                    rows[r].push((c, num(v)?));
                }
                _ => return Err(err(ln + 1, "unrecognized line")),
            }
        }
        if tails.len() != m {
            return Err(err(text.lines().count(), "row terminator count mismatch"));
        }
        let mut model = LpModel::new();
        for c in 0..n {
            model.add_var(VarKey::Column(c));
        }
        let mut rows = rows.into_iter();
        model.set_objective(rows.next().unwrap_or_default(), offset.unwrap_or(0.0));
        for (row, (rel, rhs)) in rows.zip(tails) {
            model.add_constraint(row, rel, rhs);
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_roundtrip_is_bit_exact() {
        let mut m = LpModel::<f64>::new();
        let a = m.add_var(VarKey::X { i: 1, l: 1 });
        let b = m.add_var(VarKey::Alpha);
        m.set_objective(vec![(a, 1.0 / 3.0), (b, 2.0)], 0.1);
        m.add_constraint(vec![(a, 1.0), (b, std::f64::consts::PI)], Relation::Le, 1.0);
        m.add_constraint(vec![(b, 1.0)], Relation::Eq, 0.25);
        let text = m.to_text();
        let back = LpModel::from_text(&text).unwrap();
        assert_eq!(back.to_text(), text);
        assert_eq!(back.objective()[0].1, 1.0 / 3.0);
        assert_eq!(back.constraints()[0].coeffs[1].1, std::f64::consts::PI);
    }

    #[test]
    fn duplicate_entries_merge() {
        let mut m = LpModel::<f64>::new();
        let a = m.add_var(VarKey::Alpha);
        m.add_constraint(vec![(a, 1.0), (a, 2.0)], Relation::Le, 1.0);
        assert_eq!(m.constraints()[0].coeffs, vec![(a, 3.0)]);
    }

    #[test]
    fn malformed_text_reports_line() {
        let bad = "vars 1 rows 1 maximize\n0 0 1\nobj 0\n<< 1\n";
        match LpModel::from_text(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }
}
