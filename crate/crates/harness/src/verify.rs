//! Simulation checks behind the `verify` command: the pair-click sign
//! property, recovery of the relevance order once the sufficiency conditions
//! hold, and the model-level relevance score condition.

use fairpairs_core::click_model::{verify_assumption2, ClickModelSpec};
use fairpairs_core::stats::{epsilon_from_model, fairpairs_preference_matrix, Interval};
use fairpairs_core::*;
use itertools::Itertools;
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, Extractor};
use crate::sim::{run_experiment, run_until_sufficient};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
}

/// One adjacent pair of the true ranking: `better` is more relevant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSign {
    pub better: DocumentId,
    pub worse: DocumentId,
    /// `p̂` for `better` shown directly below `worse`, and its interval.
    pub p_better: f64,
    pub ci_better: Interval,
    /// `p̂` for `worse` shown directly below `better`.
    pub p_worse: f64,
    pub ci_worse: Interval,
}

impl PairSign {
    pub fn sign_ok(&self) -> bool {
        self.p_better > self.p_worse
    }

    pub fn disjoint(&self) -> bool {
        self.ci_better.is_disjoint(&self.ci_worse)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignReport {
    pub pairs: Vec<PairSign>,
}

impl SignReport {
    /// Every pair is ordered by relevance.
    pub fn signs_hold(&self) -> bool {
        self.pairs.iter().all(PairSign::sign_ok)
    }

    /// Every pair is ordered by relevance with disjoint 95% intervals.
    pub fn holds(&self) -> bool {
        self.pairs.iter().all(|p| p.sign_ok() && p.disjoint())
    }
}

/// Compares `p̂_ij` with `p̂_ji` for every adjacent pair of `truth`.
pub fn sign_check(stats: &PairStats, truth: &TrueRanking) -> Result<SignReport, StatsError> {
    let mut pairs = Vec::new();
    for w in truth.as_slice().windows(2) {
        let (better, worse) = (w[0], w[1]);
        let b = stats.get(better, worse);
        let v = stats.get(worse, better);
        pairs.push(PairSign {
            better,
            worse,
            p_better: stats.estimate_p(better, worse)?,
            ci_better: wilson_interval(b.clicks, b.impressions, 0.95)?,
            p_worse: stats.estimate_p(worse, better)?,
            ci_worse: wilson_interval(v.clicks, v.impressions, 0.95)?,
        });
    }
    Ok(SignReport { pairs })
}

/// Runs `config` and checks the sign property on its pair-flip stats.
pub fn sign_experiment(config: &ExperimentConfig) -> Result<SignReport, VerifyError> {
    let mut config = config.clone();
    config.extractors = [Extractor::Fairpairs].into_iter().collect();
    let exp = config.resolve()?;
    let out = run_experiment(&exp);
    Ok(sign_check(out.stats.fairpairs.as_ref().expect("enabled above"), &exp.truth)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrial {
    pub seed: u64,
    pub queries: u64,
    pub converged: bool,
    pub learned: Vec<DocumentId>,
    pub recovered: bool,
    /// `min_f err(f) − err(truth)` over every other ordering `f`.
    pub min_wrong_gap: i64,
}

/// Simulates until the sufficiency conditions hold against the model's exact
/// click probabilities, then learns the error-minimizing order.
pub fn convergence_trial(config: &ExperimentConfig, check_every: u64, max_queries: u64) -> Result<ConvergenceTrial, VerifyError> {
    let exp = config.resolve()?;
    let true_p = fairpairs_preference_matrix(&exp.model, &exp.query)?;
    let params = epsilon_from_model(&true_p)?;
    let run = run_until_sufficient(&exp, params, Some(&true_p), check_every, max_queries)?;
    let docs = exp.query.ranked_list().0;
    let learned = minimize_error_exhaustive(&run.stats, &docs)?;
    let truth = exp.truth.as_slice();
    let base = error_rate(truth, &run.stats)?.0 as i64;
    let mut min_wrong_gap = i64::MAX;
    for perm in docs.iter().copied().permutations(docs.len()) {
        if perm != truth {
            min_wrong_gap = min_wrong_gap.min(error_rate(&perm, &run.stats)?.0 as i64 - base);
        }
    }
    Ok(ConvergenceTrial {
        seed: config.seed,
        queries: run.queries,
        converged: run.converged,
        recovered: learned == truth,
        learned,
        min_wrong_gap,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub num_docs: usize,
    pub queries: u64,
    pub trials: u64,
    pub check_every: u64,
    pub max_queries: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: 1, num_docs: 6, queries: 200_000, trials: 100, check_every: 10_000, max_queries: 5_000_000 }
    }
}

fn sign_suite(opts: &VerifyOptions) -> Result<SuiteResult, VerifyError> {
    let report = sign_experiment(&ExperimentConfig::new(opts.seed, opts.queries, opts.num_docs))?;
    let bad = report.pairs.iter().filter(|p| !(p.sign_ok() && p.disjoint())).count();
    Ok(SuiteResult {
        name: "pair-click sign",
        passed: report.holds(),
        detail: format!("{} adjacent pairs, {bad} failing, {} queries", report.pairs.len(), opts.queries),
    })
}

fn convergence_suite(opts: &VerifyOptions) -> Result<SuiteResult, VerifyError> {
    let mut recovered = 0;
    let mut gaps_ok = true;
    let mut most = 0;
    for t in 0..opts.trials {
        let cfg = ExperimentConfig::new(opts.seed.wrapping_add(t), 0, opts.num_docs);
        let trial = convergence_trial(&cfg, opts.check_every, opts.max_queries)?;
        recovered += u64::from(trial.converged && trial.recovered);
        gaps_ok &= !trial.converged || trial.min_wrong_gap > 0;
        most = most.max(trial.queries);
    }
    let needed = opts.trials - opts.trials / 100;
    Ok(SuiteResult {
        name: "order recovery",
        passed: recovered >= needed && gaps_ok,
        detail: format!("{recovered}/{} trials recovered the order (need {needed}), at most {most} queries", opts.trials),
    })
}

fn score_suite(opts: &VerifyOptions) -> Result<SuiteResult, VerifyError> {
    let grid: Vec<Relevance> = (0..=8).map(|i| Relevance::new(i as f64 / 8.0).expect("in range")).collect();
    let ranks: Vec<usize> = (1..=8).collect();
    let default_holds = verify_assumption2(&ClickModel::default_biased(), &grid, &ranks).holds;
    let violating = ClickModel::new(ClickModelSpec::assumption_violating()).expect("preset is valid");
    let violating_holds = verify_assumption2(&violating, &grid, &ranks).holds;
    let cfg = ExperimentConfig::new(opts.seed, opts.queries, opts.num_docs).with_model(ClickModelSpec::assumption_violating());
    let signs = sign_experiment(&cfg)?.signs_hold();
    Ok(SuiteResult {
        name: "relevance score condition",
        passed: default_holds && !violating_holds && !signs,
        detail: format!(
            "default model holds: {default_holds}; violating model holds: {violating_holds}; violating signs all correct: {signs}"
        ),
    })
}

pub fn run_verify(opts: &VerifyOptions) -> Result<Vec<SuiteResult>, VerifyError> {
    Ok(vec![sign_suite(opts)?, convergence_suite(opts)?, score_suite(opts)?])
}
