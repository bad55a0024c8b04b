//! Pair-flip presentation randomization.
//!
//! A ranked list is split into adjacent pairs using a random offset: with
//! offset 0 the pairs are `(1,2), (3,4), ...`, with offset 1 they are
//! `(2,3), (4,5), ...`. Each pair is then swapped independently with
//! probability one half. A click on the lower document of a pair is a vote
//! for that document over the one presented directly above it.
//!
//! Ranks are 1-based throughout.

use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;
use thiserror::Error;

use crate::rng::fair_bit;
use crate::types::{DocumentId, QueryId, RankedList};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PerturbError {
    #[error("flip plan has {found} swap flags but offset {offset} on {n} results needs {expected}")]
    PlanSizeMismatch { n: usize, offset: u8, expected: usize, found: usize },
    #[error("clicked rank {rank} is outside 1..={n}")]
    RankOutOfRange { rank: usize, n: usize },
}

/// The pairing offset `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Offset {
    /// Pairs start at rank 1.
    Zero,
    /// Pairs start at rank 2; rank 1 is left alone.
    One,
}

impl Offset {
    pub fn as_u8(self) -> u8 {
        match self {
            Offset::Zero => 0,
            Offset::One => 1,
        }
    }

    pub fn from_u8(k: u8) -> Option<Self> {
        match k {
            0 => Some(Offset::Zero),
            1 => Some(Offset::One),
            _ => None,
        }
    }

    fn first_top(self) -> usize {
        self.as_u8() as usize + 1
    }
}

/// Number of pairs formed on a list of length `n`.
pub fn pair_count(n: usize, k: Offset) -> usize {
    n.saturating_sub(k.as_u8() as usize) / 2
}

/// Where a presented rank sits in the pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    /// Upper document of pair number `.0` (0-based pair index).
    Top(usize),
    /// Lower document of pair number `.0`.
    Bottom(usize),
    Unpaired,
}

/// Role of a 1-based rank on a list of length `n` under offset `k`.
pub fn slot_of(n: usize, k: Offset, rank: usize) -> Slot {
    let first = k.first_top();
    if rank < first || rank > n {
        return Slot::Unpaired;
    }
    let offset = rank - first;
    let pair = offset / 2;
    if pair >= pair_count(n, k) {
        Slot::Unpaired
    } else if offset % 2 == 0 {
        Slot::Top(pair)
    } else {
        Slot::Bottom(pair)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairAssignment {
    /// `(top_rank, bottom_rank)` with `bottom_rank = top_rank + 1`.
    pub pairs: Vec<(usize, usize)>,
    pub unpaired: Vec<usize>,
}

pub fn assign_pairs(n: usize, k: Offset) -> PairAssignment {
    let count = pair_count(n, k);
    let first = k.first_top();
    let pairs: Vec<(usize, usize)> = (0..count).map(|p| (first + 2 * p, first + 2 * p + 1)).collect();
    let unpaired = (1..=n).filter(|&r| slot_of(n, k, r) == Slot::Unpaired).collect();
    PairAssignment { pairs, unpaired }
}

/// Randomization record for one impression.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FlipPlan {
    pub k: Offset,
    /// One flag per pair, in pair order; `true` means the pair is swapped.
    pub swap_flags: Vec<bool>,
}

impl FlipPlan {
    pub fn new(k: Offset, swap_flags: Vec<bool>) -> Self {
        FlipPlan { k, swap_flags }
    }

    /// The plan that leaves a list of length `n` untouched.
    pub fn identity(n: usize, k: Offset) -> Self {
        FlipPlan { k, swap_flags: vec![false; pair_count(n, k)] }
    }

    pub fn fits(&self, n: usize) -> bool {
        self.swap_flags.len() == pair_count(n, self.k)
    }

    fn check(&self, n: usize) -> Result<(), PerturbError> {
        let expected = pair_count(n, self.k);
        if self.swap_flags.len() == expected {
            Ok(())
        } else {
            Err(PerturbError::PlanSizeMismatch {
                n,
                offset: self.k.as_u8(),
                expected,
                found: self.swap_flags.len(),
            })
        }
    }
}

/// Draws the offset and then one fair swap flag per pair, in that order.
pub fn draw_flip_plan<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> FlipPlan {
    let k = if fair_bit(rng) { Offset::One } else { Offset::Zero };
    let swap_flags = (0..pair_count(n, k)).map(|_| fair_bit(rng)).collect();
    FlipPlan { k, swap_flags }
}

/// A list as presented to the user, together with how it was produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbedList {
    order: RankedList,
    plan: FlipPlan,
    original: RankedList,
}

impl PerturbedList {
    pub fn order(&self) -> &RankedList {
        &self.order
    }

    pub fn plan(&self) -> &FlipPlan {
        &self.plan
    }

    pub fn original(&self) -> &RankedList {
        &self.original
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn slot(&self, rank: usize) -> Slot {
        slot_of(self.len(), self.plan.k, rank)
    }

    pub fn pair_assignment(&self) -> PairAssignment {
        assign_pairs(self.len(), self.plan.k)
    }

    pub fn into_parts(self) -> (RankedList, FlipPlan, RankedList) {
        (self.order, self.plan, self.original)
    }
}

/// Swaps every flagged pair. Applying the same plan to the output restores
/// the input.
pub fn apply_flip_plan(input: &RankedList, plan: &FlipPlan) -> Result<PerturbedList, PerturbError> {
    plan.check(input.len())?;
    let mut order = input.0.clone();
    let first = plan.k.first_top();
    for (p, &swap) in plan.swap_flags.iter().enumerate() {
        if swap {
            let top = first + 2 * p - 1;
            order.swap(top, top + 1);
        }
    }
    Ok(PerturbedList { order: RankedList(order), plan: plan.clone(), original: input.clone() })
}

/// `winner` was clicked while presented directly below `loser` in a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PreferenceVote {
    pub winner: DocumentId,
    pub loser: DocumentId,
    pub query_id: QueryId,
}

fn check_rank(rank: usize, n: usize) -> Result<(), PerturbError> {
    if rank == 0 || rank > n {
        Err(PerturbError::RankOutOfRange { rank, n })
    } else {
        Ok(())
    }
}

/// One vote per click on a pair bottom, for the clicked document over the
/// one presented above it. Repeated ranks in `clicked_ranks` count as
/// repeated votes. Clicks on pair tops and unpaired ranks yield nothing.
pub fn extract_preferences(
    perturbed: &PerturbedList,
    clicked_ranks: &[usize],
    query_id: QueryId,
) -> Result<Vec<PreferenceVote>, PerturbError> {
    let n = perturbed.len();
    let order = perturbed.order.as_slice();
    let mut votes = Vec::new();
    for &rank in clicked_ranks {
        check_rank(rank, n)?;
        if let Slot::Bottom(_) = perturbed.slot(rank) {
            votes.push(PreferenceVote { winner: order[rank - 1], loser: order[rank - 2], query_id });
        }
    }
    Ok(votes)
}

/// The optional top-click stream: a click on a pair top is a vote for it over
/// the document presented directly below it.
pub fn extract_top_preferences(
    perturbed: &PerturbedList,
    clicked_ranks: &[usize],
    query_id: QueryId,
) -> Result<Vec<PreferenceVote>, PerturbError> {
    let n = perturbed.len();
    let order = perturbed.order.as_slice();
    let mut votes = Vec::new();
    for &rank in clicked_ranks {
        check_rank(rank, n)?;
        if let Slot::Top(_) = perturbed.slot(rank) {
            votes.push(PreferenceVote { winner: order[rank - 1], loser: order[rank], query_id });
        }
    }
    Ok(votes)
}

/// `m[i-1][j-1]` is the probability that the document at original rank `i`
/// is presented at rank `j`, over the uniform offset and fair swap flags.
///
/// Pairs are flipped independently, so each document's position only depends
/// on the offset and on its own pair's flag; the distribution is exact.
pub fn marginal_rank_distribution(n: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; n]; n];
    for k in [Offset::Zero, Offset::One] {
        let assignment = assign_pairs(n, k);
        for &(top, bottom) in &assignment.pairs {
            m[top - 1][top - 1] += 0.25;
            m[top - 1][bottom - 1] += 0.25;
            m[bottom - 1][bottom - 1] += 0.25;
            m[bottom - 1][top - 1] += 0.25;
        }
        for &r in &assignment.unpaired {
            m[r - 1][r - 1] += 0.5;
        }
    }
    m
}
