//! Data-sufficiency conditions under which an error-minimizing learner is
//! guaranteed to recover the relevance ordering.
//!
//! With `ε = ½ min |P_ij − P_ji|`, enough data means that for every pair
//! `|1 − n_ji / n_ij| < ε` (the two presentation orders are balanced) and
//! `|p_ij − P_ij| < ε / 2` (the click rate estimates are accurate).

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::click_model::ClickModel;
use crate::types::{DocumentId, Query};

use super::{wilson_interval, PairStats, StatsError};

/// Expected bottom-click probabilities `P_ij` for the ordered document pairs
/// that can appear together inside a pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PreferenceMatrix {
    entries: BTreeMap<(DocumentId, DocumentId), f64>,
}

impl PreferenceMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, i: DocumentId, j: DocumentId, p: f64) {
        self.entries.insert((i, j), p);
    }

    pub fn get(&self, i: DocumentId, j: DocumentId) -> Option<f64> {
        self.entries.get(&(i, j)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((DocumentId, DocumentId), f64)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl FromIterator<((DocumentId, DocumentId), f64)> for PreferenceMatrix {
    fn from_iter<T: IntoIterator<Item = ((DocumentId, DocumentId), f64)>>(iter: T) -> Self {
        PreferenceMatrix { entries: iter.into_iter().collect() }
    }
}

/// Exact `P_ij` for pair-flip logs of `query` under an independent-click
/// model.
///
/// Without probe insertion, two documents only ever share a pair when they
/// are adjacent in the base ranking, and the pair always occupies the same
/// two ranks, so `P_ij = E(r + 1) · A(r_i) · G(r_j)` for the pair at ranks
/// `(r, r + 1)`.
pub fn fairpairs_preference_matrix(model: &ClickModel, query: &Query) -> Result<PreferenceMatrix, StatsError> {
    if !model.is_independent() {
        return Err(StatsError::NoClosedForm);
    }
    let mut m = PreferenceMatrix::new();
    for (idx, w) in query.candidates().windows(2).enumerate() {
        let bottom_rank = idx + 2;
        let (a, ra) = w[0];
        let (b, rb) = w[1];
        m.insert(b, a, model.click_prob(bottom_rank, rb.value(), Some(ra.value())));
        m.insert(a, b, model.click_prob(bottom_rank, ra.value(), Some(rb.value())));
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceParams {
    pub epsilon: f64,
}

/// `ε = ½ min |P_ij − P_ji|` over the pairs present in `true_p`.
pub fn epsilon_from_model(true_p: &PreferenceMatrix) -> Result<ConvergenceParams, StatsError> {
    let mut min_gap = f64::INFINITY;
    for ((i, j), p_ij) in true_p.iter() {
        let p_ji = true_p.get(j, i).ok_or(StatsError::MissingEntry { i: j, j: i })?;
        let gap = (p_ij - p_ji).abs();
        if gap == 0.0 {
            return Err(StatsError::ZeroGap { i, j });
        }
        min_gap = min_gap.min(gap);
    }
    if min_gap.is_infinite() {
        return Err(StatsError::EmptyModel);
    }
    Ok(ConvergenceParams { epsilon: min_gap / 2.0 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSufficiency {
    /// The pair, with `i < j`.
    pub i: DocumentId,
    pub j: DocumentId,
    pub balanced: bool,
    pub accurate: bool,
}

impl PairSufficiency {
    pub fn holds(&self) -> bool {
        self.balanced && self.accurate
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SufficiencyReport {
    pub pairs: Vec<PairSufficiency>,
    /// The accuracy condition was checked with the 95% interval half-width
    /// proxy instead of known click probabilities.
    pub proxy: bool,
    pub holds: bool,
}

fn half_width(c: u64, n: u64) -> Result<f64, StatsError> {
    let ci = wilson_interval(c, n, 0.95)?;
    let p = c as f64 / n as f64;
    Ok((ci.hi - p).max(p - ci.lo))
}

/// Checks the balance and accuracy conditions on every pair with data.
///
/// With `true_p` the accuracy condition is checked exactly; without it the
/// 95% Wilson half-width of each estimate must be below `ε / 2`. A pair seen
/// in one orientation only is an error, and an empty `stats` never holds.
pub fn sufficiency_check(
    stats: &PairStats,
    params: ConvergenceParams,
    true_p: Option<&PreferenceMatrix>,
) -> Result<SufficiencyReport, StatsError> {
    let eps = params.epsilon;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(StatsError::InvalidEpsilon(eps));
    }
    let mut pairs = Vec::new();
    for (i, j) in stats.unordered_pairs() {
        let ij = stats.get(i, j);
        let ji = stats.get(j, i);
        if ij.impressions == 0 {
            return Err(StatsError::NoData { i, j });
        }
        if ji.impressions == 0 {
            return Err(StatsError::NoData { i: j, j: i });
        }
        let (n_ij, n_ji) = (ij.impressions as f64, ji.impressions as f64);
        let balanced = (1.0 - n_ji / n_ij).abs() < eps && (1.0 - n_ij / n_ji).abs() < eps;
        let accurate = match true_p {
            Some(m) => {
                let p_ij = m.get(i, j).ok_or(StatsError::MissingEntry { i, j })?;
                let p_ji = m.get(j, i).ok_or(StatsError::MissingEntry { i: j, j: i })?;
                (ij.clicks as f64 / n_ij - p_ij).abs() < eps / 2.0 && (ji.clicks as f64 / n_ji - p_ji).abs() < eps / 2.0
            }
            None => half_width(ij.clicks, ij.impressions)? < eps / 2.0 && half_width(ji.clicks, ji.impressions)? < eps / 2.0,
        };
        pairs.push(PairSufficiency { i, j, balanced, accurate });
    }
    let holds = !pairs.is_empty() && pairs.iter().all(PairSufficiency::holds);
    Ok(SufficiencyReport { pairs, proxy: true_p.is_none(), holds })
}
