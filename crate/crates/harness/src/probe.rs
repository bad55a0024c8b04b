//! The probe experiment: a document less relevant than every listed result is
//! swapped into a high rank, so pairs mixing it with the listed results
//! expose how strongly clicks follow relevance within a pair.

use fairpairs_core::{ClickLogRecord, PairStats};

use crate::config::{ConfigError, ExperimentConfig};
use crate::report::ProbeReport;
use crate::sim::run_experiment;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOutput {
    pub log: Vec<ClickLogRecord>,
    /// Pair counts over the impressions that enter the report.
    pub stats: PairStats,
    pub report: ProbeReport,
}

/// Pair counts of the logged impressions, optionally only those with at
/// least one click.
pub fn report_stats(log: &[ClickLogRecord], clicked_only: bool) -> PairStats {
    let mut stats = PairStats::new();
    for rec in log.iter().filter(|r| !clicked_only || !r.clicked_ranks.is_empty()) {
        stats.record_votes(rec).expect("simulated records are consistent");
    }
    stats
}

pub fn run_probe_experiment(config: &ExperimentConfig) -> Result<ProbeOutput, ConfigError> {
    let exp = config.resolve()?;
    let probe = exp.probe.ok_or(ConfigError::Field { field: "probe", message: "the probe experiment needs a [probe] section".into() })?;
    let out = run_experiment(&exp);
    let stats = report_stats(&out.log, probe.clicked_queries_only);
    let report = ProbeReport::from_stats(&stats, Some(probe.doc), probe.top_pairs);
    Ok(ProbeOutput { log: out.log, stats, report })
}
