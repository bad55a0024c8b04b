//! The replayable unit of a click log: one impression with its flip plan,
//! both orders and the clicked ranks.

use alloc::vec::Vec;

use thiserror::Error;

use crate::perturbation::{apply_flip_plan, FlipPlan, Offset, PerturbError, PerturbedList};
use crate::types::{DocumentId, QueryId, RankedList};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("offset k must be 0 or 1, got {0}")]
    BadOffset(u8),
    #[error(transparent)]
    Plan(#[from] PerturbError),
    #[error("presented order is not the original order under the recorded flip plan")]
    Inconsistent,
    #[error("clicked ranks must be sorted")]
    UnsortedClicks,
}

/// `(experiment seed, query index)` that keyed the impression's random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SeedInfo {
    pub experiment_seed: u64,
    pub query_index: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ClickLogRecord {
    pub query_id: QueryId,
    pub k: u8,
    pub swap_flags: Vec<bool>,
    pub original_order: Vec<DocumentId>,
    pub presented_order: Vec<DocumentId>,
    /// 1-based presented ranks, sorted; a repeated rank is a repeated click.
    pub clicked_ranks: Vec<usize>,
    pub seed_info: SeedInfo,
    /// Seconds since the Unix epoch; only written when timestamps are enabled.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub timestamp: Option<u64>,
}

impl ClickLogRecord {
    pub fn from_impression(
        query_id: QueryId,
        perturbed: &PerturbedList,
        mut clicked_ranks: Vec<usize>,
        seed_info: SeedInfo,
    ) -> Self {
        clicked_ranks.sort_unstable();
        ClickLogRecord {
            query_id,
            k: perturbed.plan().k.as_u8(),
            swap_flags: perturbed.plan().swap_flags.clone(),
            original_order: perturbed.original().as_slice().to_vec(),
            presented_order: perturbed.order().as_slice().to_vec(),
            clicked_ranks,
            seed_info,
            timestamp: None,
        }
    }

    pub fn plan(&self) -> Result<FlipPlan, RecordError> {
        let k = Offset::from_u8(self.k).ok_or(RecordError::BadOffset(self.k))?;
        Ok(FlipPlan::new(k, self.swap_flags.clone()))
    }

    /// Rebuilds the presented list from the original order and the plan and
    /// checks it against the recorded presented order and clicks.
    pub fn perturbed(&self) -> Result<PerturbedList, RecordError> {
        let plan = self.plan()?;
        let perturbed = apply_flip_plan(&RankedList::new(self.original_order.clone()), &plan)?;
        if perturbed.order().as_slice() != self.presented_order.as_slice() {
            return Err(RecordError::Inconsistent);
        }
        let n = self.presented_order.len();
        if let Some(&rank) = self.clicked_ranks.iter().find(|&&r| r == 0 || r > n) {
            return Err(PerturbError::RankOutOfRange { rank, n }.into());
        }
        if self.clicked_ranks.windows(2).any(|w| w[0] > w[1]) {
            return Err(RecordError::UnsortedClicks);
        }
        Ok(perturbed)
    }

    pub fn validate(&self) -> Result<(), RecordError> {
        self.perturbed().map(|_| ())
    }
}
