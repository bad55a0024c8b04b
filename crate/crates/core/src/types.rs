//! Domain vocabulary shared by every other module: document ids, relevance
//! values, queries and rankings.

use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TypesError {
    #[error("relevance {0} is outside [0, 1]")]
    RelevanceOutOfRange(f64),
    #[error("a query needs at least one candidate document")]
    EmptyCandidates,
    #[error("document {0} appears more than once in the candidate set")]
    DuplicateDocument(DocumentId),
    #[error("documents {0} and {1} share relevance {2}")]
    TiedRelevance(DocumentId, DocumentId, f64),
}

/// Opaque document token, unique within one query's candidate set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct DocumentId(pub u32);

impl fmt::Display for DocumentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d{}", self.0)
    }
}

impl From<u32> for DocumentId {
    fn from(id: u32) -> Self {
        DocumentId(id)
    }
}

/// Opaque query token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct QueryId(pub u64);

impl fmt::Display for QueryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

/// Ground-truth relevance of a document to a query, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Relevance(f64);

impl Relevance {
    pub const ZERO: Relevance = Relevance(0.0);
    pub const ONE: Relevance = Relevance(1.0);

    pub fn new(value: f64) -> Result<Self, TypesError> {
        if (0.0..=1.0).contains(&value) {
            Ok(Relevance(value))
        } else {
            Err(TypesError::RelevanceOutOfRange(value))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for Relevance {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = f64::deserialize(deserializer)?;
        Relevance::new(value).map_err(serde::de::Error::custom)
    }
}

/// One query with its candidate documents in base-ranker order.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    id: QueryId,
    candidates: Vec<(DocumentId, Relevance)>,
}

impl Query {
    pub fn new(id: QueryId, candidates: Vec<(DocumentId, Relevance)>) -> Result<Self, TypesError> {
        if candidates.is_empty() {
            return Err(TypesError::EmptyCandidates);
        }
        let mut ids: Vec<DocumentId> = candidates.iter().map(|(d, _)| *d).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(TypesError::DuplicateDocument(w[0]));
        }
        Ok(Query { id, candidates })
    }

    pub fn id(&self) -> QueryId {
        self.id
    }

    pub fn candidates(&self) -> &[(DocumentId, Relevance)] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Base-ranker order of the candidates.
    pub fn ranked_list(&self) -> RankedList {
        RankedList(self.candidates.iter().map(|(d, _)| *d).collect())
    }

    pub fn relevance_of(&self, doc: DocumentId) -> Option<Relevance> {
        self.candidates.iter().find(|(d, _)| *d == doc).map(|(_, r)| *r)
    }
}

/// An ordered sequence of documents. Ranks are 1-based when talking about
/// positions; the backing vector is 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct RankedList(pub Vec<DocumentId>);

impl RankedList {
    pub fn new(order: Vec<DocumentId>) -> Self {
        RankedList(order)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[DocumentId] {
        &self.0
    }

    /// Document at a 1-based rank.
    pub fn at_rank(&self, rank: usize) -> Option<DocumentId> {
        rank.checked_sub(1).and_then(|i| self.0.get(i).copied())
    }

    /// 1-based rank of a document.
    pub fn rank_of(&self, doc: DocumentId) -> Option<usize> {
        self.0.iter().position(|d| *d == doc).map(|i| i + 1)
    }

    pub fn is_permutation_of(&self, other: &RankedList) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let mut a = self.0.clone();
        let mut b = other.0.clone();
        a.sort_unstable();
        b.sort_unstable();
        a == b
    }
}

impl From<Vec<DocumentId>> for RankedList {
    fn from(order: Vec<DocumentId>) -> Self {
        RankedList(order)
    }
}

/// Documents sorted by strictly decreasing relevance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrueRanking(Vec<DocumentId>);

impl TrueRanking {
    pub fn as_slice(&self) -> &[DocumentId] {
        &self.0
    }

    pub fn into_ranked_list(self) -> RankedList {
        RankedList(self.0)
    }
}

/// Orders the candidates by strictly decreasing relevance. Two candidates
/// sharing a relevance value make the ideal ranking undefined.
pub fn true_ranking(query: &Query) -> Result<TrueRanking, TypesError> {
    let mut sorted: Vec<(DocumentId, Relevance)> = query.candidates.clone();
    sorted.sort_by(|a, b| b.1.value().total_cmp(&a.1.value()));
    if let Some(w) = sorted.windows(2).find(|w| w[0].1 == w[1].1) {
        return Err(TypesError::TiedRelevance(w[0].0, w[1].0, w[0].1.value()));
    }
    Ok(TrueRanking(sorted.into_iter().map(|(d, _)| d).collect()))
}
