//! Multiple selection on unitary partition matroids by running one threshold rule per part,
//! and the reductions that move a rule between sample rates.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::sim::{run_chunked, run_ranked, trial_rng, Algorithm, Estimate, Moments, Paired, RatioEstimate};
use crate::{Error, Result, ThresholdSchedule};

/// JSON layout: `{"ground_size": n, "parts": [[ids]...], "forbidden": [ids]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct MatroidJson {
    ground_size: usize,
    parts: Vec<Vec<usize>>,
    #[serde(default)]
    forbidden: Vec<usize>,
}

/// Partition of the ground set into capacity-one parts plus one part that may not be used.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MatroidJson", into = "MatroidJson")]
pub struct UnitaryPartitionMatroid {
    ground_size: usize,
    parts: Vec<Vec<usize>>,
    forbidden: Vec<usize>,
    /// `part_of[e]`: index into `parts`, or `None` for the forbidden part.
    part_of: Vec<Option<usize>>,
}

impl TryFrom<MatroidJson> for UnitaryPartitionMatroid {
    type Error = Error;

    fn try_from(raw: MatroidJson) -> Result<Self> {
        Self::new(raw.ground_size, raw.parts, raw.forbidden)
    }
}

impl From<UnitaryPartitionMatroid> for MatroidJson {
    fn from(m: UnitaryPartitionMatroid) -> Self {
        Self { ground_size: m.ground_size, parts: m.parts, forbidden: m.forbidden }
    }
}

impl UnitaryPartitionMatroid {
    /// Every element of `0..ground_size` must appear exactly once across `parts` and `forbidden`.
    pub fn new(ground_size: usize, parts: Vec<Vec<usize>>, forbidden: Vec<usize>) -> Result<Self> {
        let mut part_of: Vec<Option<Option<usize>>> = vec![None; ground_size];
        let groups = parts.iter().enumerate().map(|(i, p)| (Some(i), p)).chain([(None, &forbidden)]);
        for (id, members) in groups {
            for &e in members {
                match part_of.get_mut(e) {
                    None => return Err(Error::InvalidInstance(format!("element {e} outside ground set"))),
                    Some(Some(_)) => return Err(Error::InvalidInstance(format!("element {e} in two parts"))),
                    Some(slot) => *slot = Some(id),
                }
            }
        }
        let part_of = part_of
            .into_iter()
            .enumerate()
            .map(|(e, p)| p.ok_or_else(|| Error::InvalidInstance(format!("element {e} in no part"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { ground_size, parts, forbidden, part_of })
    }

    /// `m` parts of `size` consecutive elements and no forbidden elements.
    pub fn uniform(m: usize, size: usize) -> Result<Self> {
        Self::new(m * size, (0..m).map(|i| (i * size..(i + 1) * size).collect()).collect(), vec![])
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("matroid serializes")
    }

    pub fn ground_size(&self) -> usize {
        self.ground_size
    }

    pub fn parts(&self) -> &[Vec<usize>] {
        &self.parts
    }

    pub fn forbidden(&self) -> &[usize] {
        &self.forbidden
    }

    pub fn part_of(&self, e: usize) -> Option<usize> {
        self.part_of[e]
    }

    /// A set is independent iff it avoids the forbidden part and uses each part at most once.
    pub fn is_independent(&self, set: &[usize]) -> bool {
        let mut used = BTreeSet::new();
        set.iter().all(|&e| e < self.ground_size && self.part_of[e].is_some_and(|p| used.insert(p)))
    }
}

/// One run of the per-part rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSelection {
    /// Selected elements in part order.
    pub selected: Vec<usize>,
    pub weight: f64,
    /// `per_part[i] = (selected weight, best online weight)` for part `i`.
    pub per_part: Vec<(f64, f64)>,
}

impl PartitionSelection {
    /// Sum over parts of the best online weight.
    pub fn benchmark(&self) -> f64 {
        self.per_part.iter().map(|x| x.1).sum()
    }
}

fn check_inputs(matroid: &UnitaryPartitionMatroid, weights: &[f64], p: f64, schedule: &ThresholdSchedule) -> Result<()> {
    if weights.len() != matroid.ground_size() {
        return Err(Error::InvalidArgument("one weight per element required".into()));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidArgument("weights must be finite and non-negative".into()));
    }
    if (schedule.p() - p).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("schedule built for p = {}, not {p}", schedule.p())));
    }
    Ok(())
}

/// Elements of each part sorted by decreasing weight, ties by element id.
fn ranked_parts(matroid: &UnitaryPartitionMatroid, weights: &[f64]) -> Vec<Vec<usize>> {
    matroid
        .parts()
        .iter()
        .map(|part| {
            let mut v = part.clone();
            v.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
            v
        })
        .collect()
}

fn select_with_times(
    ranked: &[Vec<usize>],
    weights: &[f64],
    times: &[f64],
    p: f64,
    schedule: &ThresholdSchedule,
) -> PartitionSelection {
    let mut selected = Vec::new();
    let mut per_part = Vec::with_capacity(ranked.len());
    for part in ranked {
        let run = run_ranked(schedule, part.len(), true, |r| (times[part[r]], times[part[r]] < p));
        let pick = run.selected.map(|(r, _)| part[r]);
        selected.extend(pick);
        per_part.push((pick.map_or(0.0, |e| weights[e]), run.first_online.map_or(0.0, |r| weights[part[r]])));
    }
    PartitionSelection { weight: per_part.iter().map(|x| x.0).sum(), selected, per_part }
}

fn trial_selection(
    matroid: &UnitaryPartitionMatroid,
    ranked: &[Vec<usize>],
    weights: &[f64],
    p: f64,
    schedule: &ThresholdSchedule,
    seed: u64,
    trial: u64,
) -> PartitionSelection {
    let mut rng = trial_rng(seed, trial);
    let times: Vec<f64> = (0..matroid.ground_size()).map(|_| rng.gen()).collect();
    select_with_times(ranked, weights, times.as_slice(), p, schedule)
}

/// Draws arrival times, treats elements before `p` as history and runs the threshold rule
/// separately in every part. At most one element per part is picked and the forbidden part
/// is never touched, so the output is independent.
pub fn parallel_threshold_select(
    matroid: &UnitaryPartitionMatroid,
    weights: &[f64],
    p: f64,
    schedule: &ThresholdSchedule,
    seed: u64,
) -> Result<PartitionSelection> {
    check_inputs(matroid, weights, p, schedule)?;
    Ok(trial_selection(matroid, &ranked_parts(matroid, weights), weights, p, schedule, seed, 0))
}

/// Aggregate and per-part estimates of the selected weight against the online maxima.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionEstimate {
    pub total: RatioEstimate,
    pub per_part: Vec<RatioEstimate>,
    /// Fraction of trials whose output was independent.
    pub independent_fraction: Estimate,
}

/// Monte Carlo estimate of [`parallel_threshold_select`] over `trials` seeded trials.
pub fn estimate_partition_ratio(
    matroid: &UnitaryPartitionMatroid,
    weights: &[f64],
    p: f64,
    schedule: &ThresholdSchedule,
    trials: usize,
    seed: u64,
) -> Result<PartitionEstimate> {
    check_inputs(matroid, weights, p, schedule)?;
    if trials < 2 {
        return Err(Error::InvalidArgument("need at least two trials".into()));
    }
    let ranked = ranked_parts(matroid, weights);
    let m = matroid.parts().len();
    let init = (Paired::default(), vec![Paired::default(); m], Moments::default());
    let (total, parts, indep) = run_chunked(
        trials as u64,
        init,
        |acc, t| {
            let sel = trial_selection(matroid, &ranked, weights, p, schedule, seed, t);
            acc.0.push(sel.weight, sel.benchmark());
            for (a, &(w, o)) in acc.1.iter_mut().zip(&sel.per_part) {
                a.push(w, o);
            }
            acc.2.push(f64::from(u8::from(matroid.is_independent(&sel.selected))));
            Ok(())
        },
        |a, b| {
            a.0.merge(&b.0);
            a.1.iter_mut().zip(&b.1).for_each(|(x, y)| x.merge(y));
            a.2.merge(&b.2);
        },
    )?;
    Ok(PartitionEstimate {
        total: total.ratio()?,
        per_part: parts.iter().map(Paired::ratio).collect::<Result<_>>()?,
        independent_fraction: indep.estimate(),
    })
}

/// Turns a threshold rule for sample rate `p_from` into a rule for the higher rate `p_to`
/// with the same competitive ratio (see [`Algorithm::Lifted`]).
pub fn lift_policy(p_from: f64, p_to: f64, base: Algorithm) -> Result<Algorithm> {
    if !(0.0 <= p_from && p_from < p_to && p_to < 1.0) {
        return Err(Error::InvalidArgument(format!("lifting needs 0 <= p_from < p_to < 1, got {p_from}, {p_to}")));
    }
    match &base {
        Algorithm::Threshold(s) if (s.p() - p_from).abs() < 1e-12 => {}
        _ => return Err(Error::InvalidArgument("lifting needs a threshold rule built for p_from".into())),
    }
    Ok(Algorithm::Lifted { p_from, p_to, base: Box::new(base) })
}

/// Reuses a rule built for rate `p_high` at a lower rate: it keeps its thresholds, which all
/// lie after `p_high`, so every item it accepts is online at the lower rate too.
pub fn down_shift(schedule: &ThresholdSchedule, p_low: f64) -> Result<ThresholdSchedule> {
    if !(0.0 <= p_low && p_low <= schedule.p()) {
        return Err(Error::InvalidArgument(format!("down-shift needs 0 <= {p_low} <= {}", schedule.p())));
    }
    ThresholdSchedule::new(p_low, schedule.times().to_vec(), schedule.tail_is_one())
}

/// Guaranteed ratio after a down-shift: `alpha (1 - p_high) / (1 - p_low)`.
pub fn down_shift_guarantee(alpha: f64, p_high: f64, p_low: f64) -> f64 {
    alpha * (1.0 - p_high) / (1.0 - p_low)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_validation() {
        let m = UnitaryPartitionMatroid::from_json(r#"{"ground_size": 4, "parts": [[0, 2], [1]], "forbidden": [3]}"#)
            .unwrap();
        assert_eq!(m.part_of(2), Some(0));
        assert_eq!(m.part_of(3), None);
        assert_eq!(UnitaryPartitionMatroid::from_json(&m.to_json()).unwrap(), m);
        assert!(UnitaryPartitionMatroid::from_json(r#"{"ground_size": 2, "parts": [[0, 0]]}"#).is_err());
        assert!(UnitaryPartitionMatroid::from_json(r#"{"ground_size": 2, "parts": [[0]]}"#).is_err());
        assert!(UnitaryPartitionMatroid::from_json(r#"{"ground_size": 1, "parts": [[5]]}"#).is_err());
    }

    #[test]
    fn independence() {
        let m = UnitaryPartitionMatroid::new(5, vec![vec![0, 1], vec![2, 3]], vec![4]).unwrap();
        assert!(m.is_independent(&[0, 2]));
        assert!(!m.is_independent(&[0, 1]));
        assert!(!m.is_independent(&[4]));
        assert!(m.is_independent(&[]));
    }

    #[test]
    fn down_shift_keeps_thresholds() {
        let s = ThresholdSchedule::new(0.5, vec![0.6, 0.9], true).unwrap();
        let d = down_shift(&s, 0.2).unwrap();
        assert_eq!(d.p(), 0.2);
        assert_eq!(d.times(), &[0.6, 0.9]);
        assert!(down_shift(&s, 0.7).is_err());
    }
}
