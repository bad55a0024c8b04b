//! Seeded click-log simulation.
//!
//! Every impression draws from its own stream keyed by `(seed, query index)`,
//! so results do not depend on how queries are split across worker threads.
//! Workers own a log segment and a stats shard per chunk; segments are
//! concatenated in query order and shards merged.

use std::collections::BTreeMap;
use std::ops::Range;
use std::time::{SystemTime, UNIX_EPOCH};

use fairpairs_core::learner::{naive_extractor, skip_above_extractor};
use fairpairs_core::rng::{impression_stream, uniform_inclusive};
use fairpairs_core::stats::{sufficiency_check, ConvergenceParams, PreferenceMatrix, SufficiencyReport};
use fairpairs_core::*;
use rayon::prelude::*;

use crate::config::{ConfigError, Experiment, ExperimentConfig, Extractor, ProbeOrder};

/// Queries per work unit.
pub const CHUNK: u64 = 4096;

/// Absolute click votes by document and by presented rank.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NaiveCounts {
    pub impressions: u64,
    pub by_doc: BTreeMap<DocumentId, u64>,
    /// `by_rank[r - 1]` counts clicks at presented rank `r`.
    pub by_rank: Vec<u64>,
}

impl NaiveCounts {
    pub fn record(&mut self, presented: &RankedList, clicked_ranks: &[usize]) -> Result<(), LearnerError> {
        let votes = naive_extractor(presented, clicked_ranks, QueryId(0))?;
        self.impressions += 1;
        if self.by_rank.len() < presented.len() {
            self.by_rank.resize(presented.len(), 0);
        }
        for v in votes {
            *self.by_doc.entry(v.doc).or_default() += 1;
            self.by_rank[v.rank - 1] += 1;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &NaiveCounts) {
        self.impressions += other.impressions;
        for (&d, &c) in &other.by_doc {
            *self.by_doc.entry(d).or_default() += c;
        }
        if self.by_rank.len() < other.by_rank.len() {
            self.by_rank.resize(other.by_rank.len(), 0);
        }
        for (a, b) in self.by_rank.iter_mut().zip(&other.by_rank) {
            *a += b;
        }
    }

    /// Clicks per impression at presented rank `rank`.
    pub fn rank_rate(&self, rank: usize) -> f64 {
        let clicks = self.by_rank.get(rank - 1).copied().unwrap_or(0);
        clicks as f64 / self.impressions.max(1) as f64
    }
}

/// Skip-above counts: `n_ij` is the number of impressions with `d_j`
/// presented anywhere above `d_i`, `c_ij` the number of skip-above votes for
/// `d_i` over `d_j`.
fn record_skip_above(stats: &mut PairStats, presented: &RankedList, clicked_ranks: &[usize]) -> Result<(), LearnerError> {
    let order = presented.as_slice();
    for lower in 1..order.len() {
        for upper in 0..lower {
            stats.record_pair(order[lower], order[upper], 0);
        }
    }
    for v in skip_above_extractor(presented, clicked_ranks, QueryId(0))? {
        stats.add(v.winner, v.loser, PairCount { impressions: 0, clicks: 1 });
    }
    Ok(())
}

/// Stats for each enabled extractor; `None` when the extractor is off.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExtractorStats {
    pub fairpairs: Option<PairStats>,
    pub skip_above: Option<PairStats>,
    pub naive: Option<NaiveCounts>,
}

impl ExtractorStats {
    pub fn for_extractors(enabled: impl IntoIterator<Item = Extractor>) -> Self {
        let mut s = ExtractorStats::default();
        for e in enabled {
            match e {
                Extractor::Fairpairs => s.fairpairs = Some(PairStats::new()),
                Extractor::SkipAbove => s.skip_above = Some(PairStats::new()),
                Extractor::Naive => s.naive = Some(NaiveCounts::default()),
            }
        }
        s
    }

    fn record(&mut self, perturbed: &PerturbedList, clicked_ranks: &[usize]) {
        // callers pass simulated or already validated ranks
        if let Some(s) = &mut self.fairpairs {
            s.record_perturbed(perturbed, clicked_ranks);
        }
        if let Some(s) = &mut self.skip_above {
            record_skip_above(s, perturbed.order(), clicked_ranks).expect("ranks validated by caller");
        }
        if let Some(s) = &mut self.naive {
            s.record(perturbed.order(), clicked_ranks).expect("ranks validated by caller");
        }
    }

    pub fn merge(&mut self, other: &ExtractorStats) {
        merge_opt(&mut self.fairpairs, &other.fairpairs, PairStats::merge);
        merge_opt(&mut self.skip_above, &other.skip_above, PairStats::merge);
        merge_opt(&mut self.naive, &other.naive, NaiveCounts::merge);
    }
}

fn merge_opt<T: Clone>(a: &mut Option<T>, b: &Option<T>, f: impl FnOnce(&mut T, &T)) {
    match (a.as_mut(), b) {
        (Some(x), Some(y)) => f(x, y),
        (None, Some(y)) => *a = Some(y.clone()),
        _ => {}
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub log: Vec<ClickLogRecord>,
    pub stats: ExtractorStats,
}

/// The list shown for query `q` and the clicks it received.
pub fn simulate_impression(exp: &Experiment, q: u64) -> (PerturbedList, Vec<usize>) {
    let mut rng = impression_stream(exp.seed, q);
    let mut base: Vec<DocumentId> = exp.query.ranked_list().0;
    let perturbed = match exp.probe {
        None => {
            let plan = draw_flip_plan(base.len(), &mut rng);
            apply_flip_plan(&RankedList::new(base), &plan).expect("plan drawn for this length")
        }
        Some(probe) => {
            base.push(probe.doc);
            let n = base.len();
            let plan = draw_flip_plan(n, &mut rng);
            let target = uniform_inclusive(&mut rng, probe.lo as u64, probe.hi as u64) as usize;
            match probe.order {
                ProbeOrder::SwapThenFairpairs => {
                    base.swap(target - 1, n - 1);
                    apply_flip_plan(&RankedList::new(base), &plan).expect("plan drawn for this length")
                }
                ProbeOrder::FairpairsThenSwap => {
                    let flipped = apply_flip_plan(&RankedList::new(base), &plan).expect("plan drawn for this length");
                    let mut shown = flipped.order().0.clone();
                    let at = shown.iter().position(|&d| d == probe.doc).expect("probe is in the list");
                    shown.swap(at, target - 1);
                    // Flip plans are involutions, so the list that the plan
                    // maps onto `shown` is `shown` flipped again. Logging that
                    // list keeps every record replayable.
                    let effective = apply_flip_plan(&RankedList::new(shown), &plan).expect("same length");
                    apply_flip_plan(effective.order(), &plan).expect("same length")
                }
            }
        }
    };
    let clicks = simulate_session(&exp.model, &perturbed, &exp.relevances, &mut rng).expect("every document has a relevance");
    (perturbed, clicks)
}

fn now_secs() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn chunks(range: Range<u64>) -> Vec<Range<u64>> {
    let mut out = Vec::new();
    let mut start = range.start;
    while start < range.end {
        let end = range.end.min(start.saturating_add(CHUNK));
        out.push(start..end);
        start = end;
    }
    out
}

fn simulate_range(exp: &Experiment, range: Range<u64>, keep_log: bool) -> SimulationOutput {
    let mut stats = ExtractorStats::for_extractors(exp.extractors.iter().copied());
    let mut log = Vec::new();
    for q in range {
        let (perturbed, clicks) = simulate_impression(exp, q);
        stats.record(&perturbed, &clicks);
        if keep_log {
            let mut rec = ClickLogRecord::from_impression(
                QueryId(q),
                &perturbed,
                clicks,
                SeedInfo { experiment_seed: exp.seed, query_index: q },
            );
            if exp.timestamps {
                rec.timestamp = Some(now_secs());
            }
            log.push(rec);
        }
    }
    SimulationOutput { log, stats }
}

/// Simulates queries `range` in parallel and combines the chunk outputs in
/// query order.
pub fn simulate_queries(exp: &Experiment, range: Range<u64>, keep_log: bool) -> SimulationOutput {
    let parts: Vec<SimulationOutput> = chunks(range).into_par_iter().map(|r| simulate_range(exp, r, keep_log)).collect();
    let mut out = SimulationOutput { log: Vec::new(), stats: ExtractorStats::for_extractors(exp.extractors.iter().copied()) };
    for part in parts {
        out.log.extend(part.log);
        out.stats.merge(&part.stats);
    }
    out
}

pub fn run_experiment(exp: &Experiment) -> SimulationOutput {
    simulate_queries(exp, 0..exp.num_queries, true)
}

pub fn run_simulation(config: &ExperimentConfig) -> Result<SimulationOutput, ConfigError> {
    Ok(run_experiment(&config.resolve()?))
}

/// Recomputes extractor stats from a persisted log.
pub fn replay(log: &[ClickLogRecord], extractors: impl IntoIterator<Item = Extractor>) -> Result<ExtractorStats, StatsError> {
    let mut stats = ExtractorStats::for_extractors(extractors);
    for rec in log {
        let perturbed = rec.perturbed().map_err(StatsError::InconsistentRecord)?;
        stats.record(&perturbed, &rec.clicked_ranks);
    }
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRun {
    pub stats: PairStats,
    pub queries: u64,
    /// The last sufficiency check, if any pair had data in both orders.
    pub report: Option<SufficiencyReport>,
    pub converged: bool,
}

/// Accumulates pair-flip stats in blocks of `check_every` queries until the
/// sufficiency conditions hold or `max_queries` is reached.
pub fn run_until_sufficient(
    exp: &Experiment,
    params: ConvergenceParams,
    true_p: Option<&PreferenceMatrix>,
    check_every: u64,
    max_queries: u64,
) -> Result<ConvergenceRun, StatsError> {
    let mut exp = exp.clone();
    exp.extractors = [Extractor::Fairpairs].into_iter().collect();
    let step = check_every.max(1);
    let mut run = ConvergenceRun { stats: PairStats::new(), queries: 0, report: None, converged: false };
    while run.queries < max_queries {
        let end = max_queries.min(run.queries + step);
        let block = simulate_queries(&exp, run.queries..end, false);
        run.stats.merge(block.stats.fairpairs.as_ref().expect("enabled above"));
        run.queries = end;
        match sufficiency_check(&run.stats, params, true_p) {
            Ok(report) => {
                run.converged = report.holds;
                run.report = Some(report);
                if run.converged {
                    break;
                }
            }
            // a pair seen in one order only: not enough data yet
            Err(StatsError::NoData { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ProbeConfig, RelevanceSource};

    #[test]
    fn empty_run() {
        let out = run_simulation(&ExperimentConfig::new(1, 0, 4)).unwrap();
        assert!(out.log.is_empty());
        assert_eq!(out.stats, ExtractorStats::for_extractors(crate::config::Extractor::ALL));
    }

    #[test]
    fn chunking_covers_the_range() {
        let c = chunks(0..(2 * CHUNK + 5));
        assert_eq!(c.len(), 3);
        assert_eq!(c[2], 2 * CHUNK..2 * CHUNK + 5);
        assert!(chunks(3..3).is_empty());
    }

    #[test]
    fn deterministic_and_replayable() {
        let cfg = ExperimentConfig::new(42, 3000, 5);
        let a = run_simulation(&cfg).unwrap();
        let b = run_simulation(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.log.len(), 3000);
        let replayed = replay(&a.log, crate::config::Extractor::ALL).unwrap();
        assert_eq!(replayed, a.stats);
    }

    #[test]
    fn skip_above_counts() {
        let mut s = PairStats::new();
        let list = RankedList::new((1..=3).map(DocumentId).collect());
        record_skip_above(&mut s, &list, &[3]).unwrap();
        assert_eq!(s.get(DocumentId(3), DocumentId(1)), PairCount { impressions: 1, clicks: 1 });
        assert_eq!(s.get(DocumentId(3), DocumentId(2)), PairCount { impressions: 1, clicks: 1 });
        assert_eq!(s.get(DocumentId(2), DocumentId(1)), PairCount { impressions: 1, clicks: 0 });
        assert_eq!(s.total_impressions(), 3);
    }

    fn probe_config(order: ProbeOrder) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(9, 500, 6);
        c.relevance_source = RelevanceSource::Preset("high".into());
        c.probe = Some(ProbeConfig {
            probe_relevance: 0.05,
            target_rank_range: [1, 4],
            order,
            top_pairs: 3,
            clicked_queries_only: true,
        });
        c
    }

    #[test]
    fn probe_lands_in_the_target_range() {
        for order in [ProbeOrder::FairpairsThenSwap, ProbeOrder::SwapThenFairpairs] {
            let out = run_simulation(&probe_config(order)).unwrap();
            for rec in &out.log {
                rec.perturbed().unwrap();
                let rank = rec.presented_order.iter().position(|&d| d == DocumentId(7)).unwrap() + 1;
                match order {
                    ProbeOrder::FairpairsThenSwap => assert!((1..=4).contains(&rank)),
                    ProbeOrder::SwapThenFairpairs => assert!((1..=5).contains(&rank)),
                }
            }
        }
    }

    #[test]
    fn naive_counts() {
        let mut c = NaiveCounts::default();
        let list = RankedList::new((1..=3).map(DocumentId).collect());
        c.record(&list, &[1, 3]).unwrap();
        c.record(&list, &[]).unwrap();
        assert_eq!(c.impressions, 2);
        assert_eq!(c.by_rank, vec![1, 0, 1]);
        assert_eq!(c.rank_rate(1), 0.5);
        assert!(c.record(&list, &[4]).is_err());
    }
}
