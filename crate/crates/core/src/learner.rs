//! Rankings from preference counts, and the baseline click interpretations
//! that pair-flip randomization replaces.
//!
//! A vote `c_ij` (a click on `d_i` shown directly below `d_j`) is violated by
//! any ranking that places `d_i` below `d_j`. The error-rate minimizer is the
//! ranking with the fewest violated votes.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::perturbation::PreferenceVote;
use crate::stats::PairStats;
use crate::types::{DocumentId, QueryId, RankedList};

/// Enumeration bound for [`minimize_error_exhaustive`].
pub const MAX_EXHAUSTIVE_DOCUMENTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LearnerError {
    #[error("document {0} has preference data but is not in the ranking")]
    MissingDocument(DocumentId),
    #[error("document {0} is listed twice")]
    DuplicateDocument(DocumentId),
    #[error("{n} documents exceed the exhaustive search bound of {max}")]
    TooManyDocuments { n: usize, max: usize },
    #[error("clicked rank {rank} is outside 1..={n}")]
    RankOutOfRange { rank: usize, n: usize },
}

/// Number of violated preference votes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ErrorCount(pub u64);

/// Dense vote matrix over `docs`: `votes[a][b] = c_ab`.
struct VoteMatrix {
    docs: Vec<DocumentId>,
    votes: Vec<Vec<u64>>,
}

impl VoteMatrix {
    fn build(stats: &PairStats, docs: &[DocumentId]) -> Result<Self, LearnerError> {
        let mut index = BTreeMap::new();
        for (pos, &d) in docs.iter().enumerate() {
            if index.insert(d, pos).is_some() {
                return Err(LearnerError::DuplicateDocument(d));
            }
        }
        let mut votes = vec![vec![0u64; docs.len()]; docs.len()];
        for ((i, j), count) in stats.iter() {
            let a = *index.get(&i).ok_or(LearnerError::MissingDocument(i))?;
            let b = *index.get(&j).ok_or(LearnerError::MissingDocument(j))?;
            votes[a][b] += count.clicks;
        }
        Ok(VoteMatrix { docs: docs.to_vec(), votes })
    }
}

/// Votes violated by `ranking`: `Σ c_ij · 1[rank(d_i) > rank(d_j)]`.
pub fn error_rate(ranking: &[DocumentId], stats: &PairStats) -> Result<ErrorCount, LearnerError> {
    let m = VoteMatrix::build(stats, ranking)?;
    let mut violated = 0;
    for (pos, row) in m.votes.iter().enumerate() {
        // row[other] counts votes for docs[pos] over docs[other]; violated when
        // other is ranked above.
        violated += row[..pos].iter().sum::<u64>();
    }
    Ok(ErrorCount(violated))
}

/// Globally error-minimizing ordering of `docs`, ties broken towards the
/// lexicographically smallest id sequence.
///
/// Depth-first search over prefixes in lexicographic order, pruning any
/// prefix whose violations already reach the best complete ranking.
pub fn minimize_error_exhaustive(stats: &PairStats, docs: &[DocumentId]) -> Result<Vec<DocumentId>, LearnerError> {
    if docs.len() > MAX_EXHAUSTIVE_DOCUMENTS {
        return Err(LearnerError::TooManyDocuments { n: docs.len(), max: MAX_EXHAUSTIVE_DOCUMENTS });
    }
    let mut sorted = docs.to_vec();
    sorted.sort_unstable();
    let m = VoteMatrix::build(stats, &sorted)?;
    let n = sorted.len();

    struct Search<'a> {
        votes: &'a [Vec<u64>],
        prefix: Vec<usize>,
        used: Vec<bool>,
        best: Option<(u64, Vec<usize>)>,
    }

    impl Search<'_> {
        fn go(&mut self, cost: u64) {
            if let Some((best, _)) = &self.best {
                if cost >= *best {
                    return;
                }
            }
            if self.prefix.len() == self.used.len() {
                self.best = Some((cost, self.prefix.clone()));
                return;
            }
            for next in 0..self.used.len() {
                if self.used[next] {
                    continue;
                }
                let added: u64 = self.prefix.iter().map(|&above| self.votes[next][above]).sum();
                self.used[next] = true;
                self.prefix.push(next);
                self.go(cost + added);
                self.prefix.pop();
                self.used[next] = false;
            }
        }
    }

    let mut search = Search { votes: &m.votes, prefix: Vec::with_capacity(n), used: vec![false; n], best: None };
    search.go(0);
    let (_, order) = search.best.unwrap_or_default();
    Ok(order.into_iter().map(|i| m.docs[i]).collect())
}

/// Orders documents by net wins `Σ_j (c_ij − c_ji)`, then by total
/// impressions (more first), then by id.
///
/// A heuristic: it agrees with [`minimize_error_exhaustive`] when pairwise
/// majorities are acyclic, but carries no recovery guarantee otherwise.
pub fn minimize_error_greedy(stats: &PairStats, docs: &[DocumentId]) -> Vec<DocumentId> {
    let mut net: BTreeMap<DocumentId, (i64, u64)> = docs.iter().map(|&d| (d, (0, 0))).collect();
    for ((i, j), count) in stats.iter() {
        let e = net.entry(i).or_default();
        e.0 += count.clicks as i64;
        e.1 += count.impressions;
        let e = net.entry(j).or_default();
        e.0 -= count.clicks as i64;
        e.1 += count.impressions;
    }
    let mut order: Vec<(DocumentId, (i64, u64))> = net.into_iter().collect();
    order.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then(b.1 .1.cmp(&a.1 .1)).then(a.0.cmp(&b.0)));
    order.into_iter().map(|(d, _)| d).collect()
}

/// `err(ranking) − err(reference)` on `stats`.
pub fn error_gap(stats: &PairStats, ranking: &[DocumentId], reference: &[DocumentId]) -> Result<i64, LearnerError> {
    Ok(error_rate(ranking, stats)?.0 as i64 - error_rate(reference, stats)?.0 as i64)
}

fn sorted_clicks(clicked_ranks: &[usize], n: usize) -> Result<Vec<usize>, LearnerError> {
    let mut ranks = clicked_ranks.to_vec();
    if let Some(&rank) = ranks.iter().find(|&&r| r == 0 || r > n) {
        return Err(LearnerError::RankOutOfRange { rank, n });
    }
    ranks.sort_unstable();
    ranks.dedup();
    Ok(ranks)
}

/// Skip-above interpretation: a clicked result is preferred to every
/// unclicked result presented above it.
pub fn skip_above_extractor(
    presented: &RankedList,
    clicked_ranks: &[usize],
    query_id: QueryId,
) -> Result<Vec<PreferenceVote>, LearnerError> {
    let order = presented.as_slice();
    let ranks = sorted_clicks(clicked_ranks, order.len())?;
    let mut votes = Vec::new();
    for &clicked in &ranks {
        for skipped in 1..clicked {
            if ranks.binary_search(&skipped).is_err() {
                votes.push(PreferenceVote { winner: order[clicked - 1], loser: order[skipped - 1], query_id });
            }
        }
    }
    Ok(votes)
}

/// An absolute "this document is relevant" judgement. Kept apart from
/// [`PreferenceVote`] so the two cannot be mixed into pairwise training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RelevanceVote {
    pub doc: DocumentId,
    /// Presented rank at which the click happened.
    pub rank: usize,
    pub query_id: QueryId,
}

/// Every clicked document is taken to be relevant.
pub fn naive_extractor(
    presented: &RankedList,
    clicked_ranks: &[usize],
    query_id: QueryId,
) -> Result<Vec<RelevanceVote>, LearnerError> {
    let order = presented.as_slice();
    let n = order.len();
    clicked_ranks
        .iter()
        .map(|&rank| {
            if rank == 0 || rank > n {
                Err(LearnerError::RankOutOfRange { rank, n })
            } else {
                Ok(RelevanceVote { doc: order[rank - 1], rank, query_id })
            }
        })
        .collect()
}
