use alloc::collections::{BTreeMap, BTreeSet};

use crate::perturbation::{PerturbedList, Slot};
use crate::record::ClickLogRecord;
use crate::types::DocumentId;

use super::StatsError;

/// Counts for one ordered pair `(i, j)`: impressions with `d_j` presented
/// directly above `d_i` inside a pair, and clicks on `d_i` in that
/// configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PairCount {
    pub impressions: u64,
    pub clicks: u64,
}

impl PairCount {
    pub fn p_hat(&self) -> Option<f64> {
        (self.impressions > 0).then(|| self.clicks as f64 / self.impressions as f64)
    }
}

impl core::ops::AddAssign for PairCount {
    fn add_assign(&mut self, rhs: Self) {
        self.impressions += rhs.impressions;
        self.clicks += rhs.clicks;
    }
}

/// Accumulated `n_ij` / `c_ij`, keyed by `(bottom, top)`.
///
/// Merging is an entrywise sum, so shards can be accumulated independently
/// and combined in any order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PairStats {
    counts: BTreeMap<(DocumentId, DocumentId), PairCount>,
}

impl PairStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    /// Counts for `d_i` presented below `d_j`; zero when never observed.
    pub fn get(&self, i: DocumentId, j: DocumentId) -> PairCount {
        self.counts.get(&(i, j)).copied().unwrap_or_default()
    }

    /// Entries as `((i, j), counts)` in key order.
    pub fn iter(&self) -> impl Iterator<Item = ((DocumentId, DocumentId), PairCount)> + '_ {
        self.counts.iter().map(|(k, v)| (*k, *v))
    }

    pub fn documents(&self) -> BTreeSet<DocumentId> {
        self.counts.keys().flat_map(|&(i, j)| [i, j]).collect()
    }

    /// Unordered pairs `(a, b)` with `a < b` that have data in either
    /// orientation.
    pub fn unordered_pairs(&self) -> BTreeSet<(DocumentId, DocumentId)> {
        self.counts.keys().map(|&(i, j)| if i < j { (i, j) } else { (j, i) }).collect()
    }

    pub fn total_clicks(&self) -> u64 {
        self.counts.values().map(|c| c.clicks).sum()
    }

    pub fn total_impressions(&self) -> u64 {
        self.counts.values().map(|c| c.impressions).sum()
    }

    /// Adds counts for `bottom` presented directly below `top`.
    pub fn add(&mut self, bottom: DocumentId, top: DocumentId, count: PairCount) {
        *self.counts.entry((bottom, top)).or_default() += count;
    }

    /// One impression of the pair with `clicks` clicks on its bottom document.
    pub fn record_pair(&mut self, bottom: DocumentId, top: DocumentId, clicks: u64) {
        self.add(bottom, top, PairCount { impressions: 1, clicks });
    }

    /// Adds one impression per pair of the presented list and one click per
    /// click on a pair bottom. `clicked_ranks` must be sorted.
    pub fn record_perturbed(&mut self, perturbed: &PerturbedList, clicked_ranks: &[usize]) {
        let order = perturbed.order().as_slice();
        let n = order.len();
        for rank in 1..=n {
            if let Slot::Bottom(_) = perturbed.slot(rank) {
                let clicks = clicked_ranks.iter().filter(|&&r| r == rank).count() as u64;
                self.record_pair(order[rank - 1], order[rank - 2], clicks);
            }
        }
    }

    /// Replays one logged impression after checking that its presented order
    /// follows from its original order and flip plan.
    pub fn record_votes(&mut self, impression: &ClickLogRecord) -> Result<(), StatsError> {
        let perturbed = impression.perturbed()?;
        self.record_perturbed(&perturbed, &impression.clicked_ranks);
        Ok(())
    }

    pub fn merge(&mut self, other: &PairStats) {
        for (&key, &count) in &other.counts {
            *self.counts.entry(key).or_default() += count;
        }
    }

    pub fn merged(mut self, other: &PairStats) -> PairStats {
        self.merge(other);
        self
    }

    /// `p_ij = c_ij / n_ij`.
    pub fn estimate_p(&self, i: DocumentId, j: DocumentId) -> Result<f64, StatsError> {
        self.get(i, j).p_hat().ok_or(StatsError::NoData { i, j })
    }
}

impl FromIterator<((DocumentId, DocumentId), PairCount)> for PairStats {
    fn from_iter<T: IntoIterator<Item = ((DocumentId, DocumentId), PairCount)>>(iter: T) -> Self {
        let mut stats = PairStats::new();
        for ((i, j), c) in iter {
            stats.add(i, j, c);
        }
        stats
    }
}

/// Free-function form of [`PairStats::estimate_p`].
pub fn estimate_p(stats: &PairStats, i: DocumentId, j: DocumentId) -> Result<f64, StatsError> {
    stats.estimate_p(i, j)
}
