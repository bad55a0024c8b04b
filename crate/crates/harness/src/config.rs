//! Experiment configuration, as read from TOML, and its validated form.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use fairpairs_core::click_model::ClickModelSpec;
use fairpairs_core::{true_ranking, ClickModel, DocumentId, Query, QueryId, Relevance, TrueRanking};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{field}: {message}")]
    Field { field: &'static str, message: String },
    #[error("probe relevance {probe} must be strictly below every listed relevance (lowest is {lowest})")]
    ProbeRelevanceTooHigh { probe: f64, lowest: f64 },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: Box<toml::de::Error> },
}

fn field(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field, message: message.into() }
}

/// Where the per-document relevances come from: a preset name or an explicit
/// list in base-ranking order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RelevanceSource {
    Preset(String),
    Explicit(Vec<f64>),
}

impl Default for RelevanceSource {
    fn default() -> Self {
        RelevanceSource::Preset("linear".into())
    }
}

pub const RELEVANCE_PRESETS: [&str; 3] = ["linear", "high", "reversed"];

/// `linear`: evenly spaced from 0.9 down to 0.15. `high`: 0.9 down to 0.5.
/// `reversed`: `linear` in ascending order, so the base ranking is backwards.
pub fn relevance_preset(name: &str, n: usize) -> Option<Vec<f64>> {
    let spread = |top: f64, bottom: f64| -> Vec<f64> {
        if n == 1 {
            return vec![top];
        }
        (0..n).map(|i| top - (top - bottom) * i as f64 / (n - 1) as f64).collect()
    };
    match name {
        "linear" => Some(spread(0.9, 0.15)),
        "high" => Some(spread(0.9, 0.5)),
        "reversed" => Some(spread(0.15, 0.9)),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelChoice {
    Preset(String),
    Spec(ClickModelSpec),
}

impl Default for ModelChoice {
    fn default() -> Self {
        ModelChoice::Preset("default".into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extractor {
    Fairpairs,
    SkipAbove,
    Naive,
}

impl Extractor {
    pub const ALL: [Extractor; 3] = [Extractor::Fairpairs, Extractor::SkipAbove, Extractor::Naive];
}

/// Whether the probe swap happens on the presented list after pair flipping,
/// or on the base list before it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeOrder {
    #[default]
    FairpairsThenSwap,
    SwapThenFairpairs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub probe_relevance: f64,
    /// Inclusive presented-rank range the probe is swapped into.
    pub target_rank_range: [usize; 2],
    #[serde(default)]
    pub order: ProbeOrder,
    /// Grouped report rows cover pairs whose upper label is at most this.
    #[serde(default = "default_top_pairs")]
    pub top_pairs: usize,
    /// Only impressions with at least one click enter the report.
    #[serde(default = "default_true")]
    pub clicked_queries_only: bool,
}

fn default_top_pairs() -> usize {
    5
}

fn default_true() -> bool {
    true
}

fn default_extractors() -> BTreeSet<Extractor> {
    Extractor::ALL.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub num_queries: u64,
    pub num_docs: usize,
    #[serde(default)]
    pub relevance_source: RelevanceSource,
    #[serde(default)]
    pub click_model: ModelChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeConfig>,
    #[serde(default = "default_extractors")]
    pub extractors: BTreeSet<Extractor>,
    /// Adds wall-clock timestamps to log records, which makes logs differ
    /// between otherwise identical runs.
    #[serde(default)]
    pub timestamps: bool,
}

impl ExperimentConfig {
    /// Default model, `linear` relevances, all extractors, no probe.
    pub fn new(seed: u64, num_queries: u64, num_docs: usize) -> Self {
        ExperimentConfig {
            seed,
            num_queries,
            num_docs,
            relevance_source: RelevanceSource::default(),
            click_model: ModelChoice::default(),
            probe: None,
            extractors: default_extractors(),
            timestamps: false,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::from_toml(&text).map_err(|e| ConfigError::Parse { path: path.into(), source: Box::new(e) })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn with_model(mut self, spec: ClickModelSpec) -> Self {
        self.click_model = ModelChoice::Spec(spec);
        self
    }

    pub fn with_relevances(mut self, relevances: Vec<f64>) -> Self {
        self.num_docs = relevances.len();
        self.relevance_source = RelevanceSource::Explicit(relevances);
        self
    }

    pub fn resolve(&self) -> Result<Experiment, ConfigError> {
        Experiment::new(self)
    }
}

/// A validated configuration with its query and click model built.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub seed: u64,
    pub num_queries: u64,
    pub query: Query,
    pub truth: TrueRanking,
    pub model: ClickModel,
    pub relevances: BTreeMap<DocumentId, Relevance>,
    pub probe: Option<ResolvedProbe>,
    pub extractors: BTreeSet<Extractor>,
    pub timestamps: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedProbe {
    pub doc: DocumentId,
    pub relevance: Relevance,
    pub lo: usize,
    pub hi: usize,
    pub order: ProbeOrder,
    pub top_pairs: usize,
    pub clicked_queries_only: bool,
}

impl Experiment {
    fn new(config: &ExperimentConfig) -> Result<Self, ConfigError> {
        let n = config.num_docs;
        if n < 2 {
            return Err(field("num_docs", format!("need at least 2 documents, got {n}")));
        }
        let values = match &config.relevance_source {
            RelevanceSource::Preset(name) => relevance_preset(name, n).ok_or_else(|| {
                field("relevance_source", format!("unknown preset {name:?}; expected one of {RELEVANCE_PRESETS:?}"))
            })?,
            RelevanceSource::Explicit(values) => {
                if values.len() != n {
                    return Err(field("relevance_source", format!("{} values listed for {n} documents", values.len())));
                }
                values.clone()
            }
        };
        let mut candidates = Vec::with_capacity(n);
        for (i, &v) in values.iter().enumerate() {
            let r = Relevance::new(v).map_err(|e| field("relevance_source", e.to_string()))?;
            candidates.push((DocumentId(i as u32 + 1), r));
        }
        let query = Query::new(QueryId(0), candidates).map_err(|e| field("relevance_source", e.to_string()))?;
        let truth = true_ranking(&query).map_err(|e| field("relevance_source", e.to_string()))?;

        let spec = match &config.click_model {
            ModelChoice::Preset(name) => ClickModelSpec::preset(name).ok_or_else(|| {
                field(
                    "click_model",
                    format!("unknown preset {name:?}; expected one of {:?}", ClickModelSpec::PRESET_NAMES),
                )
            })?,
            ModelChoice::Spec(spec) => *spec,
        };
        let model = ClickModel::new(spec).map_err(|e| field("click_model", e.to_string()))?;

        if config.extractors.is_empty() {
            return Err(field("extractors", "at least one extractor is required"));
        }

        let mut relevances: BTreeMap<DocumentId, Relevance> = query.candidates().iter().copied().collect();
        let probe = match &config.probe {
            None => None,
            Some(p) => {
                let [lo, hi] = p.target_rank_range;
                if lo == 0 || lo > hi || hi > n {
                    return Err(field("probe.target_rank_range", format!("[{lo}, {hi}] is not within 1..={n}")));
                }
                let relevance = Relevance::new(p.probe_relevance).map_err(|e| field("probe.probe_relevance", e.to_string()))?;
                let lowest = values.iter().copied().fold(f64::INFINITY, f64::min);
                if relevance.value() >= lowest {
                    return Err(ConfigError::ProbeRelevanceTooHigh { probe: relevance.value(), lowest });
                }
                let doc = DocumentId(n as u32 + 1);
                relevances.insert(doc, relevance);
                Some(ResolvedProbe {
                    doc,
                    relevance,
                    lo,
                    hi,
                    order: p.order,
                    top_pairs: p.top_pairs,
                    clicked_queries_only: p.clicked_queries_only,
                })
            }
        };

        Ok(Experiment {
            seed: config.seed,
            num_queries: config.num_queries,
            query,
            truth,
            model,
            relevances,
            probe,
            extractors: config.extractors.clone(),
            timestamps: config.timestamps,
        })
    }

    pub fn num_docs(&self) -> usize {
        self.query.len()
    }

    pub fn enabled(&self, e: Extractor) -> bool {
        self.extractors.contains(&e)
    }
}
