//! Pair counts, click-rate estimates and the statistics used to judge them.

mod convergence;
mod fisher;
mod interval;
mod pair_stats;

use thiserror::Error;

use crate::record::RecordError;
use crate::types::DocumentId;

pub use convergence::{
    epsilon_from_model, fairpairs_preference_matrix, sufficiency_check, ConvergenceParams, PairSufficiency,
    PreferenceMatrix, SufficiencyReport,
};
pub use fisher::{fisher_exact, FisherResult};
pub use interval::{normal_quantile, wilson_interval, Interval};
pub use pair_stats::{estimate_p, PairCount, PairStats};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("no impressions of {i} below {j}")]
    NoData { i: DocumentId, j: DocumentId },
    #[error("inconsistent log record: {0}")]
    InconsistentRecord(#[from] RecordError),
    #[error("confidence must lie strictly between 0 and 1, got {0}")]
    BadConfidence(f64),
    #[error("need 0 <= c <= n and n >= 1, got c = {c}, n = {n}")]
    InvalidCounts { c: u64, n: u64 },
    #[error("P({i} below {j}) equals the reverse orientation; the sufficiency bound is undefined")]
    ZeroGap { i: DocumentId, j: DocumentId },
    #[error("click probability matrix has no entry for {i} below {j}")]
    MissingEntry { i: DocumentId, j: DocumentId },
    #[error("click probability matrix is empty")]
    EmptyModel,
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("click probabilities have no closed form under a cascade model")]
    NoClosedForm,
}
