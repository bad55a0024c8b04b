//! Experiment harness for pair-flip click logging: configuration, seeded
//! simulation, the probe experiment, click-log files, CSV reports and the
//! verification suites used by the `fairpairs` command.

pub mod config;
pub mod logio;
pub mod probe;
pub mod report;
pub mod sim;
pub mod verify;

pub use config::{ConfigError, Experiment, ExperimentConfig, Extractor, ProbeConfig, ProbeOrder, RelevanceSource};
pub use logio::{read_log, write_log, LogError};
pub use probe::{run_probe_experiment, ProbeOutput};
pub use report::{emit_report, ProbeReport, ReportRow, ReportTable};
pub use sim::{replay, run_simulation, run_until_sufficient, ExtractorStats, NaiveCounts, SimulationOutput};
