//! Simulated users.
//!
//! The click probability of a document presented at rank `p` is the product
//!
//! ```text
//! E(p) · A(r_doc) · G(r_prev)        clamped to [0, 1]
//! E(p)      = p^(-η)                       examination
//! A(r)      = attraction, non-decreasing   relevance appeal
//! G(r_prev) = max(0, 1 + γ·(r_prev − 0.5)) predecessor factor, 1 at rank 1
//! ```
//!
//! The model only ever sees relevances, never document identities, so the
//! clicked-document probability depends on the presented relevances alone.
//! The item and ignored relevance scores have closed forms under this family,
//! which the tests use as exact oracles.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand_core::RngCore;
use thiserror::Error;

use crate::perturbation::PerturbedList;
use crate::rng::{bernoulli, unit_f64};
use crate::types::{DocumentId, Relevance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClickModelError {
    #[error("invalid click model: {0}")]
    InvalidSpec(&'static str),
    #[error("presented rank must be at least 1")]
    InvalidRank,
    #[error("document {0} has no relevance")]
    MissingRelevance(DocumentId),
    #[error("relevance scores need r1 > r2, got r1 = {r1}, r2 = {r2}")]
    OrderViolation { r1: f64, r2: f64 },
}

/// Attraction `A(r)` of a document with relevance `r`. Outputs are clamped to
/// `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields))]
pub enum Attraction {
    /// `intercept + slope · r`
    Linear { intercept: f64, slope: f64 },
    /// `r^exponent`
    Power { exponent: f64 },
}

impl Attraction {
    pub const IDENTITY: Attraction = Attraction::Linear { intercept: 0.0, slope: 1.0 };

    pub fn constant(value: f64) -> Self {
        Attraction::Linear { intercept: value, slope: 0.0 }
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        let a = match *self {
            Attraction::Linear { intercept, slope } => intercept + slope * r,
            Attraction::Power { exponent } => libm::pow(r, exponent),
        };
        a.clamp(0.0, 1.0)
    }
}

/// Parameters of the simulated user.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ClickModelSpec {
    /// `η` in `E(p) = p^(-η)`.
    pub position_decay: f64,
    pub attraction: Attraction,
    /// `γ` in `G(r) = max(0, 1 + γ·(r − 0.5))`.
    pub predecessor_gain: f64,
    /// Cascade stress-test: after each click, examination stops with this
    /// probability. `None` keeps clicks independent across ranks.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub cascade_stop: Option<f64>,
}

impl ClickModelSpec {
    /// `η = 1`, `A(r) = r`, `γ = 0.1`: position-biased, satisfies both
    /// assumptions of the unbiasedness argument.
    pub fn default_biased() -> Self {
        ClickModelSpec {
            position_decay: 1.0,
            attraction: Attraction::IDENTITY,
            predecessor_gain: 0.1,
            cascade_stop: None,
        }
    }

    /// `γ = 5`, `A(r) = 0.3 + 0.05 r`: the predecessor dominates the clicked
    /// document's own relevance, so the relevance score assumption fails.
    pub fn assumption_violating() -> Self {
        ClickModelSpec {
            position_decay: 1.0,
            attraction: Attraction::Linear { intercept: 0.3, slope: 0.05 },
            predecessor_gain: 5.0,
            cascade_stop: None,
        }
    }

    /// No position or predecessor effect.
    pub fn unbiased() -> Self {
        ClickModelSpec { position_decay: 0.0, predecessor_gain: 0.0, ..Self::default_biased() }
    }

    /// The default model with cascade stopping after clicks.
    pub fn cascade(stop: f64) -> Self {
        ClickModelSpec { cascade_stop: Some(stop), ..Self::default_biased() }
    }

    pub const PRESET_NAMES: [&'static str; 4] = ["default", "violating", "unbiased", "cascade"];

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "default" => Some(Self::default_biased()),
            "violating" => Some(Self::assumption_violating()),
            "unbiased" => Some(Self::unbiased()),
            "cascade" => Some(Self::cascade(0.5)),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), ClickModelError> {
        if !(self.position_decay.is_finite() && self.position_decay >= 0.0) {
            return Err(ClickModelError::InvalidSpec("position_decay must be finite and >= 0"));
        }
        if !self.predecessor_gain.is_finite() {
            return Err(ClickModelError::InvalidSpec("predecessor_gain must be finite"));
        }
        match self.attraction {
            Attraction::Linear { intercept, slope } if !(intercept.is_finite() && slope.is_finite()) => {
                return Err(ClickModelError::InvalidSpec("attraction parameters must be finite"));
            }
            Attraction::Power { exponent } if !(exponent.is_finite() && exponent > 0.0) => {
                return Err(ClickModelError::InvalidSpec("attraction exponent must be > 0"));
            }
            _ => {}
        }
        const GRID: usize = 100;
        let mut prev = self.attraction.eval(0.0);
        for i in 1..=GRID {
            let a = self.attraction.eval(i as f64 / GRID as f64);
            if a < prev {
                return Err(ClickModelError::InvalidSpec("attraction must be non-decreasing in relevance"));
            }
            prev = a;
        }
        if let Some(stop) = self.cascade_stop {
            if !(0.0..=1.0).contains(&stop) {
                return Err(ClickModelError::InvalidSpec("cascade_stop must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// A validated [`ClickModelSpec`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClickModel {
    spec: ClickModelSpec,
}

impl ClickModel {
    pub fn new(spec: ClickModelSpec) -> Result<Self, ClickModelError> {
        spec.validate()?;
        Ok(ClickModel { spec })
    }

    pub fn default_biased() -> Self {
        ClickModel { spec: ClickModelSpec::default_biased() }
    }

    pub fn spec(&self) -> &ClickModelSpec {
        &self.spec
    }

    /// Whether clicks at different ranks are independent draws.
    pub fn is_independent(&self) -> bool {
        self.spec.cascade_stop.is_none_or(|s| s == 0.0)
    }

    #[inline]
    pub fn examination(&self, rank: usize) -> f64 {
        libm::pow(rank as f64, -self.spec.position_decay)
    }

    #[inline]
    pub fn attraction(&self, r: f64) -> f64 {
        self.spec.attraction.eval(r)
    }

    #[inline]
    pub fn predecessor_factor(&self, r_prev: f64) -> f64 {
        (1.0 + self.spec.predecessor_gain * (r_prev - 0.5)).max(0.0)
    }

    /// Click probability of a document at `rank` with relevance `r_doc`,
    /// presented directly below a document of relevance `r_prev` (if any).
    #[inline]
    pub fn click_prob(&self, rank: usize, r_doc: f64, r_prev: Option<f64>) -> f64 {
        let g = r_prev.map_or(1.0, |r| self.predecessor_factor(r));
        (self.examination(rank) * self.attraction(r_doc) * g).clamp(0.0, 1.0)
    }
}

/// Relevances surrounding a presented pair. The default family reads only
/// `top` and `bottom`; the outer context is carried for completeness.
#[derive(Debug, Clone, PartialEq)]
pub struct PairContext {
    pub above: Vec<Relevance>,
    pub top: Relevance,
    pub bottom: Relevance,
    pub below: Vec<Relevance>,
}

impl PairContext {
    pub fn isolated(top: Relevance, bottom: Relevance) -> Self {
        PairContext { above: Vec::new(), top, bottom, below: Vec::new() }
    }

    fn with_bottom(&self, bottom: Relevance) -> Self {
        PairContext { bottom, ..self.clone() }
    }

    fn with_top(&self, top: Relevance) -> Self {
        PairContext { top, ..self.clone() }
    }
}

/// Probability that the bottom document of the pair is clicked when the
/// bottom sits at `presented_rank`.
pub fn click_probability(model: &ClickModel, ctx: &PairContext, presented_rank: usize) -> Result<f64, ClickModelError> {
    if presented_rank == 0 {
        return Err(ClickModelError::InvalidRank);
    }
    Ok(model.click_prob(presented_rank, ctx.bottom.value(), Some(ctx.top.value())))
}

/// Clicks on a list whose presented relevances are `relevances`, top-down.
/// Each rank consumes exactly one uniform draw; a cascade stop after a click
/// consumes one more.
pub fn simulate_clicks<R: RngCore + ?Sized>(model: &ClickModel, relevances: &[f64], rng: &mut R) -> Vec<usize> {
    let mut clicks = Vec::new();
    let mut prev: Option<f64> = None;
    for (i, &r) in relevances.iter().enumerate() {
        let rank = i + 1;
        let p = model.click_prob(rank, r, prev);
        if unit_f64(rng) < p {
            clicks.push(rank);
            if let Some(stop) = model.spec.cascade_stop {
                if bernoulli(rng, stop) {
                    break;
                }
            }
        }
        prev = Some(r);
    }
    clicks
}

/// One simulated user session on a presented list; returns clicked ranks in
/// increasing order.
pub fn simulate_session<R: RngCore + ?Sized>(
    model: &ClickModel,
    perturbed: &PerturbedList,
    relevances: &BTreeMap<DocumentId, Relevance>,
    rng: &mut R,
) -> Result<Vec<usize>, ClickModelError> {
    let rels = perturbed
        .order()
        .as_slice()
        .iter()
        .map(|d| relevances.get(d).map(|r| r.value()).ok_or(ClickModelError::MissingRelevance(*d)))
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(simulate_clicks(model, &rels, rng))
}

fn check_order(r1: Relevance, r2: Relevance) -> Result<(), ClickModelError> {
    if r1.value() > r2.value() {
        Ok(())
    } else {
        Err(ClickModelError::OrderViolation { r1: r1.value(), r2: r2.value() })
    }
}

/// Change in the bottom document's click probability when it is replaced by
/// a less relevant one, everything else held fixed.
pub fn item_relevance_score(
    model: &ClickModel,
    ctx_base: &PairContext,
    r1: Relevance,
    r2: Relevance,
    rank: usize,
) -> Result<f64, ClickModelError> {
    check_order(r1, r2)?;
    let hi = click_probability(model, &ctx_base.with_bottom(r1), rank)?;
    let lo = click_probability(model, &ctx_base.with_bottom(r2), rank)?;
    Ok(hi - lo)
}

/// Change in the bottom document's click probability when the document above
/// it is replaced by a more relevant one.
pub fn ignored_relevance_score(
    model: &ClickModel,
    ctx_base: &PairContext,
    r1: Relevance,
    r2: Relevance,
    rank: usize,
) -> Result<f64, ClickModelError> {
    check_order(r1, r2)?;
    let hi = click_probability(model, &ctx_base.with_top(r1), rank)?;
    let lo = click_probability(model, &ctx_base.with_top(r2), rank)?;
    Ok(hi - lo)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreReport {
    pub delta_rel: f64,
    pub delta_ign: f64,
    pub assumption2_holds: bool,
}

impl ScoreReport {
    pub fn new(delta_rel: f64, delta_ign: f64) -> Self {
        ScoreReport { delta_rel, delta_ign, assumption2_holds: delta_rel > delta_ign }
    }
}

/// One evaluated grid cell: the relevance pair `r1 > r2`, the rank of the
/// bottom slot, and the relevance held fixed in the other slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub r1: f64,
    pub r2: f64,
    pub rank: usize,
    pub context: f64,
    pub report: ScoreReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assumption2Report {
    pub cells: Vec<GridCell>,
    pub holds: bool,
}

impl Assumption2Report {
    pub fn violations(&self) -> impl Iterator<Item = &GridCell> {
        self.cells.iter().filter(|c| !c.report.assumption2_holds)
    }
}

/// Compares the item and ignored relevance scores for every `r1 > r2` drawn
/// from `grid`, every rank, and every grid value for the relevance held fixed
/// (the pair top for the item score, the pair bottom for the ignored score).
pub fn verify_assumption2(model: &ClickModel, grid: &[Relevance], ranks: &[usize]) -> Assumption2Report {
    let mut cells = Vec::new();
    for &r1 in grid {
        for &r2 in grid {
            if r1.value() <= r2.value() {
                continue;
            }
            for &rank in ranks {
                for &fixed in grid {
                    // Cannot fail: r1 > r2 and rank >= 1 are checked here.
                    let (Ok(rel), Ok(ign)) = (
                        item_relevance_score(model, &PairContext::isolated(fixed, r1), r1, r2, rank.max(1)),
                        ignored_relevance_score(model, &PairContext::isolated(r1, fixed), r1, r2, rank.max(1)),
                    ) else {
                        continue;
                    };
                    cells.push(GridCell {
                        r1: r1.value(),
                        r2: r2.value(),
                        rank,
                        context: fixed.value(),
                        report: ScoreReport::new(rel, ign),
                    });
                }
            }
        }
    }
    let holds = cells.iter().all(|c| c.report.assumption2_holds);
    Assumption2Report { cells, holds }
}
