//! Report tables over pair-click counts, and their CSV form.
//!
//! A pair type `a-b` names the upper document `a` and the lower document `b`
//! of a presented pair by their base-ranking position; `#` is the probe.
//! Every row reports clicks on the lower document.

use std::fmt;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use fairpairs_core::{fisher_exact, wilson_interval, DocumentId, PairCount, PairStats};
use thiserror::Error;

pub const COLUMNS: [&str; 6] = ["pair_type", "impressions", "clicks", "p_hat", "ci_lo", "ci_hi"];
pub const CONFIDENCE: f64 = 0.95;

pub const ITEM_RELEVANCE_FILE: &str = "item_relevance.csv";
pub const IGNORED_RELEVANCE_FILE: &str = "ignored_relevance.csv";
pub const PREFERENCE_TEST_FILE: &str = "preference_test.csv";
pub const PAIR_CURVE_FILE: &str = "pair_curve.csv";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub pair_type: String,
    pub impressions: u64,
    pub clicks: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl ReportRow {
    /// `None` when the pair was never shown.
    pub fn new(pair_type: impl Into<String>, count: PairCount) -> Option<Self> {
        let p_hat = count.p_hat()?;
        let ci = wilson_interval(count.clicks, count.impressions, CONFIDENCE).ok()?;
        Some(ReportRow {
            pair_type: pair_type.into(),
            impressions: count.impressions,
            clicks: count.clicks,
            p_hat,
            ci_lo: ci.lo,
            ci_hi: ci.hi,
        })
    }

    pub fn count(&self) -> PairCount {
        PairCount { impressions: self.impressions, clicks: self.clicks }
    }

    pub fn ci_disjoint(&self, other: &ReportRow) -> bool {
        self.ci_hi < other.ci_lo || other.ci_hi < self.ci_lo
    }

    fn fields(&self) -> [String; 6] {
        [
            self.pair_type.clone(),
            self.impressions.to_string(),
            self.clicks.to_string(),
            format!("{:.6}", self.p_hat),
            format!("{:.6}", self.ci_lo),
            format!("{:.6}", self.ci_hi),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportTable {
    pub rows: Vec<ReportRow>,
}

impl ReportTable {
    pub fn get(&self, pair_type: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.pair_type == pair_type)
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn push(&mut self, pair_type: impl Into<String>, count: PairCount) {
        if let Some(row) = ReportRow::new(pair_type, count) {
            self.rows.push(row);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Label {
    Doc(u32),
    Probe,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Doc(i) => write!(f, "{i}"),
            Label::Probe => f.write_str("#"),
        }
    }
}

fn pair_type(top: Label, bottom: Label) -> String {
    format!("{top}-{bottom}")
}

/// A pair type row plus the two-sided Fisher p-value comparing it with the
/// same two documents in the opposite order.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceRow {
    pub row: ReportRow,
    pub fisher_p: f64,
}

pub const NORMAL: &str = "normal";
pub const REVERSED: &str = "reversed";
pub const PROBE_BOTTOM: &str = "probe-bottom";
pub const PROBE_TOP: &str = "probe-top";

/// The four CSV tables of an experiment plus the grouped rows they share.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProbeReport {
    /// `normal` (i above i+1), `reversed` (i+1 above i), `probe-bottom`
    /// (i above #) and `probe-top` (# above i), summed over `i ≤ top_pairs`.
    pub groups: ReportTable,
    pub item_relevance: ReportTable,
    pub ignored_relevance: ReportTable,
    pub preference_test: Vec<PreferenceRow>,
    pub pair_curve: ReportTable,
}

impl ProbeReport {
    /// Builds the tables from counts keyed by document id, where ids
    /// `1..=m` are base-ranking positions and `probe` (if any) is the probe.
    pub fn from_stats(stats: &PairStats, probe: Option<DocumentId>, top_pairs: usize) -> Self {
        let label = |d: DocumentId| if Some(d) == probe { Label::Probe } else { Label::Doc(d.0) };
        let count = |top: Label, bottom: Label| -> PairCount {
            let mut total = PairCount::default();
            for ((b, t), c) in stats.iter() {
                if label(t) == top && label(b) == bottom {
                    total += c;
                }
            }
            total
        };
        let m = stats.documents().into_iter().filter(|&d| Some(d) != probe).map(|d| d.0).max().unwrap_or(0);
        let doc = Label::Doc;
        let hash = Label::Probe;

        let mut sums = [PairCount::default(); 4];
        for i in 1..=(top_pairs as u32).min(m) {
            sums[0] += count(doc(i), doc(i + 1));
            sums[1] += count(doc(i + 1), doc(i));
            sums[2] += count(doc(i), hash);
            sums[3] += count(hash, doc(i));
        }
        let mut groups = ReportTable::default();
        for (name, c) in [NORMAL, REVERSED, PROBE_BOTTOM, PROBE_TOP].into_iter().zip(sums) {
            groups.push(name, c);
        }

        let mut item_relevance = ReportTable::default();
        for i in 1..=m {
            item_relevance.push(pair_type(doc(i), doc(i + 1)), count(doc(i), doc(i + 1)));
            item_relevance.push(pair_type(doc(i), hash), count(doc(i), hash));
        }
        let mut ignored_relevance = ReportTable::default();
        for i in 1..=m {
            if i > 1 {
                ignored_relevance.push(pair_type(doc(i - 1), doc(i)), count(doc(i - 1), doc(i)));
            }
            ignored_relevance.push(pair_type(hash, doc(i)), count(hash, doc(i)));
        }
        for name in [NORMAL, PROBE_BOTTOM] {
            if let Some(r) = groups.get(name) {
                item_relevance.rows.push(r.clone());
            }
        }
        for name in [NORMAL, PROBE_TOP] {
            if let Some(r) = groups.get(name) {
                ignored_relevance.rows.push(r.clone());
            }
        }

        let mut preference_test = Vec::new();
        for i in 1..m {
            let fwd = count(doc(i), doc(i + 1));
            let rev = count(doc(i + 1), doc(i));
            let fisher = fisher_exact([
                [fwd.clicks, fwd.impressions - fwd.clicks],
                [rev.clicks, rev.impressions - rev.clicks],
            ]);
            for (top, bottom, c) in [(doc(i), doc(i + 1), fwd), (doc(i + 1), doc(i), rev)] {
                if let Some(row) = ReportRow::new(pair_type(top, bottom), c) {
                    preference_test.push(PreferenceRow { row, fisher_p: fisher.p_value });
                }
            }
        }

        let mut pair_curve = ReportTable::default();
        if probe.is_some() {
            for i in 1..=m {
                pair_curve.push(pair_type(doc(i), hash), count(doc(i), hash));
                pair_curve.push(pair_type(hash, doc(i)), count(hash, doc(i)));
            }
        }

        ProbeReport { groups, item_relevance, ignored_relevance, preference_test, pair_curve }
    }

    pub fn group(&self, name: &str) -> Option<&ReportRow> {
        self.groups.get(name)
    }

    /// `p̂(normal) − p̂(probe-bottom)`: the drop in bottom clicks when the
    /// lower document is replaced by the probe.
    pub fn item_difference(&self) -> Option<f64> {
        Some(self.group(NORMAL)?.p_hat - self.group(PROBE_BOTTOM)?.p_hat)
    }

    /// `p̂(normal) − p̂(probe-top)`: the drop in bottom clicks when the upper
    /// document is replaced by the probe.
    pub fn ignored_difference(&self) -> Option<f64> {
        Some(self.group(NORMAL)?.p_hat - self.group(PROBE_TOP)?.p_hat)
    }
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

pub fn write_table_csv<W: Write>(out: W, table: &ReportTable) -> Result<(), ReportError> {
    let mut w = csv_writer(out);
    w.write_record(COLUMNS)?;
    for row in &table.rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_preference_csv<W: Write>(out: W, rows: &[PreferenceRow]) -> Result<(), ReportError> {
    let mut w = csv_writer(out);
    w.write_record(COLUMNS.iter().chain(&["fisher_p"]))?;
    for r in rows {
        let [a, b, c, d, e, f] = r.row.fields();
        w.write_record([a, b, c, d, e, f, format!("{:.6e}", r.fisher_p)])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the four report files into `dir`, returning their paths.
pub fn emit_report(dir: &Path, report: &ProbeReport) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(dir)?;
    let path = |name: &str| dir.join(name);
    write_table_csv(File::create(path(ITEM_RELEVANCE_FILE))?, &report.item_relevance)?;
    write_table_csv(File::create(path(IGNORED_RELEVANCE_FILE))?, &report.ignored_relevance)?;
    write_preference_csv(File::create(path(PREFERENCE_TEST_FILE))?, &report.preference_test)?;
    write_table_csv(File::create(path(PAIR_CURVE_FILE))?, &report.pair_curve)?;
    Ok([ITEM_RELEVANCE_FILE, IGNORED_RELEVANCE_FILE, PREFERENCE_TEST_FILE, PAIR_CURVE_FILE].map(path).to_vec())
}

/// Raw pair counts, one row per ordered pair with `pair_type` written as
/// `top-bottom` document ids.
pub fn write_stats_csv<W: Write>(out: W, stats: &PairStats) -> Result<(), ReportError> {
    let mut table = ReportTable::default();
    for ((bottom, top), c) in stats.iter() {
        table.push(format!("{}-{}", top.0, bottom.0), c);
    }
    write_table_csv(out, &table)
}

/// Reads counts written by [`write_stats_csv`]; only `pair_type`,
/// `impressions` and `clicks` are used.
pub fn read_stats_csv<R: Read>(input: R) -> Result<PairStats, ReportError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().take(3).ne(COLUMNS.iter().take(3).copied()) {
        return Err(ReportError::Parse { row: 1, message: format!("unexpected header {headers:?}") });
    }
    let mut stats = PairStats::new();
    for (idx, rec) in r.records().enumerate() {
        let row = idx + 2;
        let rec = rec?;
        let bad = |message: String| ReportError::Parse { row, message };
        let (top, bottom) = rec[0].split_once('-').ok_or_else(|| bad(format!("bad pair type {:?}", &rec[0])))?;
        let id = |s: &str| s.parse::<u32>().map(DocumentId).map_err(|e| bad(format!("bad document id {s:?}: {e}")));
        let num = |s: &str| s.parse::<u64>().map_err(|e| bad(format!("bad count {s:?}: {e}")));
        let (impressions, clicks) = (num(&rec[1])?, num(&rec[2])?);
        if clicks > impressions {
            return Err(bad(format!("{clicks} clicks exceed {impressions} impressions")));
        }
        stats.add(id(bottom)?, id(top)?, PairCount { impressions, clicks });
    }
    Ok(stats)
}
