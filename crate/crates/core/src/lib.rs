//! Pair-flip result randomization for unbiased learning from click logs.
//!
//! Adjacent results are grouped into pairs at a random offset and each pair is
//! swapped with probability ½. A click on the lower result of a pair is then a
//! vote for it over its partner, and because both presentation orders are
//! equally likely the votes can be aggregated into relevance orderings
//! without modelling position bias.
//!
//! The crate is `no_std` (it needs `alloc`). Enable `serde` for the log record
//! and click model serialization.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod click_model;
pub mod learner;
pub mod perturbation;
pub mod record;
pub mod rng;
pub mod stats;
pub mod types;

pub use click_model::{
    click_probability, ignored_relevance_score, item_relevance_score, simulate_clicks, simulate_session,
    verify_assumption2, Assumption2Report, Attraction, ClickModel, ClickModelError, ClickModelSpec, PairContext,
    ScoreReport,
};
pub use learner::{
    error_rate, minimize_error_exhaustive, minimize_error_greedy, naive_extractor, skip_above_extractor, ErrorCount,
    LearnerError, RelevanceVote,
};
pub use perturbation::{
    apply_flip_plan, draw_flip_plan, extract_preferences, marginal_rank_distribution, FlipPlan, Offset, PerturbError,
    PerturbedList, PreferenceVote,
};
pub use record::{ClickLogRecord, RecordError, SeedInfo};
pub use stats::{
    estimate_p, fisher_exact, sufficiency_check, wilson_interval, PairCount, PairStats, StatsError,
};
pub use types::{true_ranking, DocumentId, Query, QueryId, RankedList, Relevance, TrueRanking, TypesError};
