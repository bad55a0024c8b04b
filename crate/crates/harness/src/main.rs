use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use fairpairs_core::{error_rate, minimize_error_exhaustive, minimize_error_greedy, DocumentId, PairStats};
use fairpairs_harness::config::{ModelChoice, ProbeConfig, ProbeOrder, RelevanceSource};
use fairpairs_harness::logio::{read_log, write_log};
use fairpairs_harness::report::{emit_report, read_stats_csv, write_stats_csv, ProbeReport};
use fairpairs_harness::verify::{run_verify, VerifyOptions};
use fairpairs_harness::{replay, run_probe_experiment, run_simulation, ExperimentConfig, Extractor};

#[derive(Parser)]
#[command(name = "fairpairs", version, about = "Pair-flip click logging experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate click logs and aggregate pair statistics.
    Simulate {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Where to write the click log.
        #[arg(long)]
        log: PathBuf,
        /// Where to write pair-flip counts as CSV.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Run the probe experiment and write its report tables.
    Probe {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[command(flatten)]
        probe: ProbeArgs,
        /// Directory for the report CSV files.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Replay a click log into pair-flip counts.
    Aggregate {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        stats: PathBuf,
    },
    /// Learn the error-minimizing document order from pair counts.
    Learn {
        #[arg(long)]
        stats: PathBuf,
        /// Use the net-wins heuristic instead of exhaustive search.
        #[arg(long)]
        greedy: bool,
    },
    /// Write report tables for pair counts.
    Report {
        #[arg(long)]
        stats: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Document id of the probe, if the counts come from a probe run.
        #[arg(long)]
        probe_doc: Option<u32>,
        #[arg(long, default_value_t = 5)]
        top_pairs: usize,
    },
    /// Run the simulation verification suites.
    Verify {
        #[arg(long, default_value_t = VerifyOptions::default().seed)]
        seed: u64,
        #[arg(long, default_value_t = VerifyOptions::default().num_docs)]
        docs: usize,
        #[arg(long, default_value_t = VerifyOptions::default().queries)]
        queries: u64,
        /// Independent seeds for the order recovery suite.
        #[arg(long, default_value_t = VerifyOptions::default().trials)]
        trials: u64,
        #[arg(long, default_value_t = VerifyOptions::default().check_every)]
        check_every: u64,
        #[arg(long, default_value_t = VerifyOptions::default().max_queries)]
        max_queries: u64,
    },
}

/// Experiment settings; a config file takes precedence over flags.
#[derive(Args)]
struct ExperimentArgs {
    /// TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    queries: Option<u64>,
    #[arg(long)]
    docs: Option<usize>,
    /// Relevance preset name, or comma-separated values in base-ranking order.
    #[arg(long)]
    relevance: Option<String>,
    /// Click model preset name.
    #[arg(long)]
    model: Option<String>,
    /// Comma-separated subset of fairpairs, skip_above, naive.
    #[arg(long, value_delimiter = ',')]
    extractors: Option<Vec<String>>,
    #[arg(long)]
    timestamps: bool,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long)]
    probe_relevance: Option<f64>,
    /// Inclusive rank range as `lo-hi`.
    #[arg(long)]
    target_range: Option<String>,
    /// Swap the probe in before pair flipping instead of after.
    #[arg(long)]
    swap_first: bool,
    #[arg(long)]
    top_pairs: Option<usize>,
    /// Keep impressions without clicks in the report.
    #[arg(long)]
    all_queries: bool,
}

fn warn_ignored(flag: &str, key: &str) {
    eprintln!("warning: --{flag} ignored, the config file sets {key}");
}

/// Fills `slot` from a flag unless a config file was given, in which case a
/// conflicting flag is reported and dropped.
fn apply<T: PartialEq>(from_file: bool, slot: &mut T, flag: Option<T>, (flag_name, key): (&str, &str)) {
    if let Some(v) = flag {
        if !from_file {
            *slot = v;
        } else if *slot != v {
            warn_ignored(flag_name, key);
        }
    }
}

fn parse_relevance(s: &str) -> Result<RelevanceSource> {
    if s.contains(',') || s.parse::<f64>().is_ok() {
        let values = s.split(',').map(|v| v.trim().parse::<f64>()).collect::<Result<Vec<_>, _>>().context("--relevance")?;
        Ok(RelevanceSource::Explicit(values))
    } else {
        Ok(RelevanceSource::Preset(s.to_string()))
    }
}

fn parse_extractor(s: &str) -> Result<Extractor> {
    toml::Value::String(s.to_string()).try_into().with_context(|| format!("unknown extractor {s:?}"))
}

fn experiment_config(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let from_file = args.config.is_some();
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::new(0, 10_000, 6),
    };
    apply(from_file, &mut cfg.seed, args.seed, ("seed", "seed"));
    apply(from_file, &mut cfg.num_queries, args.queries, ("queries", "num_queries"));
    apply(from_file, &mut cfg.num_docs, args.docs, ("docs", "num_docs"));
    let relevance = args.relevance.as_deref().map(parse_relevance).transpose()?;
    if let Some(RelevanceSource::Explicit(v)) = &relevance {
        if !from_file && args.docs.is_none() {
            cfg.num_docs = v.len();
        }
    }
    apply(from_file, &mut cfg.relevance_source, relevance, ("relevance", "relevance_source"));
    apply(from_file, &mut cfg.click_model, args.model.clone().map(ModelChoice::Preset), ("model", "click_model"));
    let extractors = args
        .extractors
        .as_ref()
        .map(|v| v.iter().map(|s| parse_extractor(s)).collect::<Result<_>>())
        .transpose()?;
    apply(from_file, &mut cfg.extractors, extractors, ("extractors", "extractors"));
    apply(from_file, &mut cfg.timestamps, args.timestamps.then_some(true), ("timestamps", "timestamps"));
    Ok(cfg)
}

fn parse_range(s: &str) -> Result<[usize; 2]> {
    let (lo, hi) = s.split_once('-').with_context(|| format!("--target-range {s:?} is not lo-hi"))?;
    Ok([lo.trim().parse().context("--target-range")?, hi.trim().parse().context("--target-range")?])
}

fn probe_config(cfg: &mut ExperimentConfig, args: &ProbeArgs, from_file: bool) -> Result<()> {
    if let (true, Some(p)) = (from_file, cfg.probe.as_mut()) {
        apply(true, &mut p.probe_relevance, args.probe_relevance, ("probe-relevance", "probe.probe_relevance"));
        apply(true, &mut p.target_rank_range, args.target_range.as_deref().map(parse_range).transpose()?, ("target-range", "probe.target_rank_range"));
        apply(true, &mut p.order, args.swap_first.then_some(ProbeOrder::SwapThenFairpairs), ("swap-first", "probe.order"));
        apply(true, &mut p.top_pairs, args.top_pairs, ("top-pairs", "probe.top_pairs"));
        apply(true, &mut p.clicked_queries_only, args.all_queries.then_some(false), ("all-queries", "probe.clicked_queries_only"));
        return Ok(());
    }
    let n = cfg.num_docs;
    cfg.probe = Some(ProbeConfig {
        probe_relevance: args.probe_relevance.unwrap_or(0.05),
        target_rank_range: args.target_range.as_deref().map(parse_range).transpose()?.unwrap_or([1, n]),
        order: if args.swap_first { ProbeOrder::SwapThenFairpairs } else { ProbeOrder::FairpairsThenSwap },
        top_pairs: args.top_pairs.unwrap_or(5),
        clicked_queries_only: !args.all_queries,
    });
    Ok(())
}

fn save_stats(path: &Path, stats: &PairStats) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_stats_csv(BufWriter::new(file), stats)?;
    Ok(())
}

fn load_stats(path: &Path) -> Result<PairStats> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_stats_csv(file).with_context(|| path.display().to_string())
}

fn fmt_order(order: &[DocumentId]) -> String {
    order.iter().map(|d| d.0.to_string()).collect::<Vec<_>>().join(" ")
}

enum Outcome {
    Done,
    VerificationFailed,
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Simulate { exp, log, stats } => {
            let cfg = experiment_config(&exp)?;
            let out = run_simulation(&cfg)?;
            write_log(&log, &out.log)?;
            if let Some(path) = stats {
                let fp = out.stats.fairpairs.clone().unwrap_or_default();
                save_stats(&path, &fp)?;
            }
            println!("{} impressions written to {}", out.log.len(), log.display());
            if let Some(naive) = &out.stats.naive {
                let rates: Vec<String> = (1..=naive.by_rank.len()).map(|r| format!("{:.4}", naive.rank_rate(r))).collect();
                println!("clicks per impression by rank: {}", rates.join(" "));
            }
        }
        Command::Probe { exp, probe, out, log } => {
            let mut cfg = experiment_config(&exp)?;
            probe_config(&mut cfg, &probe, exp.config.is_some())?;
            let result = run_probe_experiment(&cfg)?;
            if let Some(path) = log {
                write_log(&path, &result.log)?;
            }
            for path in emit_report(&out, &result.report)? {
                println!("wrote {}", path.display());
            }
            for row in &result.report.groups.rows {
                println!("{:>13}  n={:<8} p={:.4} [{:.4}, {:.4}]", row.pair_type, row.impressions, row.p_hat, row.ci_lo, row.ci_hi);
            }
        }
        Command::Aggregate { log, stats } => {
            let records = read_log(&log)?;
            let replayed = replay(&records, [Extractor::Fairpairs])?;
            save_stats(&stats, &replayed.fairpairs.unwrap_or_default())?;
            println!("{} impressions aggregated into {}", records.len(), stats.display());
        }
        Command::Learn { stats, greedy } => {
            let stats = load_stats(&stats)?;
            let docs: Vec<DocumentId> = stats.documents().into_iter().collect();
            let heuristic = minimize_error_greedy(&stats, &docs);
            let order = if greedy {
                heuristic.clone()
            } else {
                let exact = minimize_error_exhaustive(&stats, &docs)?;
                if exact != heuristic {
                    eprintln!("note: net-wins heuristic disagrees: {}", fmt_order(&heuristic));
                }
                exact
            };
            println!("{}", fmt_order(&order));
            println!("violated votes: {} of {}", error_rate(&order, &stats)?.0, stats.total_clicks());
        }
        Command::Report { stats, out, probe_doc, top_pairs } => {
            let stats = load_stats(&stats)?;
            let report = ProbeReport::from_stats(&stats, probe_doc.map(DocumentId), top_pairs);
            for path in emit_report(&out, &report)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Verify { seed, docs, queries, trials, check_every, max_queries } => {
            let opts = VerifyOptions { seed, num_docs: docs, queries, trials, check_every, max_queries };
            let results = run_verify(&opts)?;
            let mut ok = true;
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
                ok &= r.passed;
            }
            if !ok {
                return Ok(Outcome::VerificationFailed);
            }
        }
    }
    Ok(Outcome::Done)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
