//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use fairpairs_core::click_model::{verify_assumption2, ClickModelSpec};
use fairpairs_core::rng::{fair_bit, impression_stream, uniform_inclusive};
use fairpairs_core::*;
use fairpairs_harness::config::{ProbeConfig, ProbeOrder, RelevanceSource};
use fairpairs_harness::logio::{read_log, write_log};
use fairpairs_harness::report::{NORMAL, PROBE_BOTTOM, PROBE_TOP};
use fairpairs_harness::verify::convergence_trial;
use fairpairs_harness::{replay, run_probe_experiment, run_simulation, ExperimentConfig, Extractor, ExtractorStats};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use statrs::distribution::{ContinuousCDF, Normal};

const LINEAR6: [f64; 6] = [0.9, 0.75, 0.6, 0.45, 0.3, 0.15];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn ids(n: usize) -> Vec<DocumentId> {
    (1..=n as u32).map(DocumentId).collect()
}

/// Per adjacent pair `(better, worse)` of the base ranking: whether
/// `p̂(better below worse) > p̂(worse below better)` and whether their 95%
/// Wilson intervals are disjoint.
fn adjacent_signs(stats: &PairStats, n: usize) -> Vec<(bool, bool)> {
    let docs = ids(n);
    docs.windows(2)
        .map(|w| {
            let b = stats.get(w[0], w[1]);
            let v = stats.get(w[1], w[0]);
            let pb = b.clicks as f64 / b.impressions as f64;
            let pv = v.clicks as f64 / v.impressions as f64;
            let cb = wilson_interval(b.clicks, b.impressions, 0.95).unwrap();
            let cv = wilson_interval(v.clicks, v.impressions, 0.95).unwrap();
            (pb > pv, cb.is_disjoint(&cv))
        })
        .collect()
}

fn pair_click_sign() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig::new(2024, 200_000, 6);
    let out = run_simulation(&cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let signs = adjacent_signs(out.stats.fairpairs.as_ref().unwrap(), 6);
    let ok = signs.iter().filter(|(s, d)| *s && *d).count();
    outcome(
        ok == signs.len() && secs < 30.0,
        format!("{ok}/{} adjacent pairs ordered by relevance with disjoint CIs, {secs:.2}s", signs.len()),
    )
}

fn order_recovery() -> Outcome {
    let mut recovered = 0;
    let mut converged = 0;
    let mut min_gap = i64::MAX;
    let mut max_queries = 0;
    // documents are listed in decreasing relevance
    let truth = ids(6);
    for seed in 0..100 {
        let cfg = ExperimentConfig::new(10_000 + seed, 0, 6).with_relevances(LINEAR6.to_vec());
        let t = convergence_trial(&cfg, 10_000, 5_000_000).unwrap();
        converged += u64::from(t.converged);
        recovered += u64::from(t.converged && t.learned == truth);
        if t.converged {
            min_gap = min_gap.min(t.min_wrong_gap);
        }
        max_queries = max_queries.max(t.queries);
    }
    outcome(
        recovered >= 99 && converged == 100 && min_gap > 0,
        format!(
            "{recovered}/100 seeds recovered the true order, {converged} reached sufficiency (max {max_queries} queries), \
             smallest err(f) - err(truth) over wrong orders = {min_gap}"
        ),
    )
}

fn negative_control() -> Outcome {
    let violating = ClickModel::new(ClickModelSpec::assumption_violating()).unwrap();
    let grid: Vec<Relevance> = (0..=8).map(|i| Relevance::new(i as f64 / 8.0).unwrap()).collect();
    let report = verify_assumption2(&violating, &grid, &(1..=8).collect::<Vec<_>>());
    let cfg = ExperimentConfig::new(77, 200_000, 6).with_model(ClickModelSpec::assumption_violating());
    let out = run_simulation(&cfg).unwrap();
    let signs = adjacent_signs(out.stats.fairpairs.as_ref().unwrap(), 6);
    let wrong = signs.iter().filter(|(s, _)| !s).count();
    outcome(
        !report.holds && wrong >= 1,
        format!(
            "score condition holds: {} ({} violating cells); {wrong}/{} adjacent pairs have the wrong sign",
            report.holds,
            report.violations().count(),
            signs.len()
        ),
    )
}

/// Click probability of the default model written out directly.
fn default_click(rank: usize, r: f64, prev: Option<f64>) -> f64 {
    let g = prev.map_or(1.0, |p| (1.0 + 0.1 * (p - 0.5)).max(0.0));
    (r * g / rank as f64).clamp(0.0, 1.0)
}

/// Every pair-flip plan for `n` ranks with its probability, as the presented
/// permutation of base positions (0-based).
fn all_plans(n: usize) -> Vec<(f64, Vec<usize>)> {
    let mut plans = Vec::new();
    for k in 0..2usize {
        let pairs = (n - k) / 2;
        for bits in 0..1usize << pairs {
            let mut order: Vec<usize> = (0..n).collect();
            for p in 0..pairs {
                if bits >> p & 1 == 1 {
                    order.swap(k + 2 * p, k + 2 * p + 1);
                }
            }
            plans.push((0.5 / (1usize << pairs) as f64, order));
        }
    }
    plans
}

fn bias_baselines() -> Outcome {
    let mut expected = [0.0; 6];
    for (w, order) in all_plans(6) {
        for rank in 1..=6 {
            let prev = (rank > 1).then(|| LINEAR6[order[rank - 2]]);
            expected[rank - 1] += w * default_click(rank, LINEAR6[order[rank - 1]], prev);
        }
    }
    let closed = expected[0] / expected[4];

    let cfg = ExperimentConfig::new(4242, 200_000, 6).with_relevances(LINEAR6.to_vec());
    let out = run_simulation(&cfg).unwrap();
    let naive = out.stats.naive.as_ref().unwrap();
    let mc = naive.by_rank[0] as f64 / naive.by_rank[4] as f64;
    let within = (mc / closed - 1.0).abs() <= 0.10;

    let skip = out.stats.skip_above.as_ref().unwrap();
    let learned = minimize_error_exhaustive(skip, &ids(6)).unwrap();
    let inverted = learned != ids(6);

    outcome(
        closed >= 5.0 && mc >= 5.0 && within && inverted,
        format!(
            "rank1/rank5 click ratio closed form {closed:.3}, Monte-Carlo {mc:.3} ({:+.2}%); skip-above learner returns {:?}",
            100.0 * (mc / closed - 1.0),
            learned.iter().map(|d| d.0).collect::<Vec<_>>()
        ),
    )
}

fn displacement() -> Outcome {
    let n = 5;
    let trials = 1_000_000u64;
    let mut counts = vec![vec![0u64; n]; n];
    let mut max_shift = 0i64;
    let mut k0 = 0u64;
    let (mut flags_set, mut flags_total) = (0u64, 0u64);
    let base = RankedList::new(ids(n));
    for q in 0..trials {
        let plan = draw_flip_plan(n, &mut impression_stream(99, q));
        k0 += u64::from(plan.k == Offset::Zero);
        flags_set += plan.swap_flags.iter().filter(|&&f| f).count() as u64;
        flags_total += plan.swap_flags.len() as u64;
        let p = apply_flip_plan(&base, &plan).unwrap();
        for (to, d) in p.order().as_slice().iter().enumerate() {
            let from = d.0 as usize - 1;
            counts[from][to] += 1;
            max_shift = max_shift.max((from as i64 - to as i64).abs());
        }
    }

    let mut oracle = vec![vec![0.0; n]; n];
    for (w, order) in all_plans(n) {
        for (to, &from) in order.iter().enumerate() {
            oracle[from][to] += w;
        }
    }
    let exact = marginal_rank_distribution(n);
    let mut worst_z = 0.0f64;
    let mut exact_ok = true;
    let mut zero_ok = true;
    for i in 0..n {
        for j in 0..n {
            exact_ok &= (exact[i][j] - oracle[i][j]).abs() < 1e-15;
            let p = oracle[i][j];
            let emp = counts[i][j] as f64 / trials as f64;
            if p == 0.0 {
                zero_ok &= counts[i][j] == 0;
            } else {
                let sd = (p * (1.0 - p) / trials as f64).sqrt();
                worst_z = worst_z.max((emp - p).abs() / sd);
            }
        }
    }
    let fixed = (exact[0][0] - 0.75).abs() < 1e-15 && (exact[2][2] - 0.5).abs() < 1e-15;
    let pk = k0 as f64 / trials as f64;
    let pf = flags_set as f64 / flags_total as f64;
    let fair = (pk - 0.5).abs() <= 0.002 && (pf - 0.5).abs() <= 0.002;
    outcome(
        exact_ok && zero_ok && fixed && worst_z <= 3.0 && max_shift <= 1 && fair,
        format!(
            "oracle match {exact_ok}, P(1->1)={:.2}, P(3->3)={:.2}, worst cell {worst_z:.2} sigma, max |shift| {max_shift}, \
             P(k=0)={pk:.4}, P(swap)={pf:.4}",
            exact[0][0], exact[2][2]
        ),
    )
}

fn binom(n: u64, k: u64) -> BigUint {
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

fn fisher_oracle(t: [[u64; 2]; 2]) -> f64 {
    let [[a, b], [c, d]] = t;
    let (r1, r2, c1) = (a + b, c + d, a + c);
    if r1 == 0 || r2 == 0 || c1 == 0 || b + d == 0 {
        return 1.0;
    }
    let weight = |x: u64| binom(r1, x) * binom(r2, c1 - x);
    let observed = weight(a);
    let mut tail = BigUint::zero();
    for x in c1.saturating_sub(r2)..=r1.min(c1) {
        let w = weight(x);
        if w <= observed {
            tail += w;
        }
    }
    BigRational::new(tail.into(), binom(r1 + r2, c1).into()).to_f64().unwrap()
}

fn wilson_oracle(c: u64, n: u64, z: f64) -> (f64, f64) {
    let ph = c as f64 / n as f64;
    let f = |p: f64| (ph - p).powi(2) - z * z * p * (1.0 - p) / n as f64;
    // f > 0 outside the interval and < 0 inside it
    let bisect = |mut inside: f64, mut outside: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if f(mid) > 0.0 {
                outside = mid;
            } else {
                inside = mid;
            }
        }
        0.5 * (inside + outside)
    };
    let lo = if c == 0 { 0.0 } else { bisect(ph, 0.0) };
    let hi = if c == n { 1.0 } else { bisect(ph, 1.0) };
    (lo, hi)
}

fn statistics_oracles() -> Outcome {
    let mut rng = impression_stream(6, 0);
    let mut tables = vec![[[20, 2], [7, 4]]];
    while tables.len() < 1500 {
        let total = uniform_inclusive(&mut rng, 1, 40);
        let cuts: Vec<u64> = (0..3).map(|_| uniform_inclusive(&mut rng, 0, total)).collect();
        let mut c = cuts.clone();
        c.sort_unstable();
        tables.push([[c[0], c[1] - c[0]], [c[2] - c[1], total - c[2]]]);
    }
    let mut fisher_err = 0.0f64;
    for t in &tables {
        fisher_err = fisher_err.max((fisher_exact(*t).p_value - fisher_oracle(*t)).abs());
    }

    let z = Normal::standard().inverse_cdf(0.975);
    let mut wilson_err = 0.0f64;
    for _ in 0..1000 {
        let n = uniform_inclusive(&mut rng, 1, 100_000);
        let c = uniform_inclusive(&mut rng, 0, n);
        let ci = wilson_interval(c, n, 0.95).unwrap();
        let (lo, hi) = wilson_oracle(c, n, z);
        wilson_err = wilson_err.max((ci.lo - lo).abs()).max((ci.hi - hi).abs());
    }
    let fixture = fisher_exact([[20, 2], [7, 4]]).p_value;
    outcome(
        fisher_err <= 1e-12 && wilson_err <= 1e-9,
        format!(
            "Fisher max error {fisher_err:.1e} over {} tables ([[20,2],[7,4]] p = {fixture:.6}); Wilson max error {wilson_err:.1e} over 1000 (c, n)",
            tables.len()
        ),
    )
}

fn probe_experiment() -> Outcome {
    let mut cfg = ExperimentConfig::new(31, 100_000, 8);
    cfg.relevance_source = RelevanceSource::Preset("high".into());
    cfg.probe = Some(ProbeConfig {
        probe_relevance: 0.05,
        target_rank_range: [1, 8],
        order: ProbeOrder::FairpairsThenSwap,
        top_pairs: 5,
        clicked_queries_only: true,
    });
    let out = run_probe_experiment(&cfg).unwrap();
    let r = &out.report;
    let normal = r.group(NORMAL).unwrap();
    let bottom = r.group(PROBE_BOTTOM).unwrap();
    let top = r.group(PROBE_TOP).unwrap();
    let item = r.item_difference().unwrap();
    let ignored = r.ignored_difference().unwrap();
    outcome(
        bottom.p_hat < normal.p_hat && bottom.ci_disjoint(normal) && ignored.abs() < item.abs(),
        format!(
            "p(normal)={:.4} p(probe-bottom)={:.4} p(probe-top)={:.4}; item difference {item:.4}, ignored difference {ignored:.4}",
            normal.p_hat, bottom.p_hat, top.p_hat
        ),
    )
}

/// A random but internally consistent log record.
fn random_record(q: u64) -> ClickLogRecord {
    let mut rng = impression_stream(8, q);
    let n = uniform_inclusive(&mut rng, 1, 12) as usize;
    let mut original = ids(n);
    for i in (1..n).rev() {
        original.swap(i, uniform_inclusive(&mut rng, 0, i as u64) as usize);
    }
    let plan = draw_flip_plan(n, &mut rng);
    let p = apply_flip_plan(&RankedList::new(original), &plan).unwrap();
    let clicks: Vec<usize> = (1..=n).filter(|_| fair_bit(&mut rng)).collect();
    let mut rec = ClickLogRecord::from_impression(
        QueryId(uniform_inclusive(&mut rng, 0, u64::MAX)),
        &p,
        clicks,
        SeedInfo { experiment_seed: uniform_inclusive(&mut rng, 0, u64::MAX), query_index: q },
    );
    if fair_bit(&mut rng) {
        rec.timestamp = Some(uniform_inclusive(&mut rng, 0, u64::MAX));
    }
    rec
}

fn replay_shards(log: &[ClickLogRecord], cuts: &[usize]) -> ExtractorStats {
    let mut bounds = vec![0];
    bounds.extend_from_slice(cuts);
    bounds.push(log.len());
    let mut merged = ExtractorStats::for_extractors(Extractor::ALL);
    // merge shards back to front to exercise order independence
    for w in bounds.windows(2).rev() {
        merged.merge(&replay(&log[w[0]..w[1]], Extractor::ALL).unwrap());
    }
    merged
}

fn engineering_invariants() -> Outcome {
    let dir = tempfile::tempdir().unwrap();

    let records: Vec<ClickLogRecord> = (0..10_000).map(random_record).collect();
    let path = dir.path().join("random.ndjson");
    write_log(&path, &records).unwrap();
    let round_trip = read_log(&path).unwrap() == records;

    let cfg = ExperimentConfig::new(555, 50_000, 7);
    let out = run_simulation(&cfg).unwrap();
    let replayed = replay(&out.log, Extractor::ALL).unwrap();
    let replay_ok = replayed == out.stats;

    let mut rng = impression_stream(3, 3);
    let mut shard_ok = true;
    for _ in 0..20 {
        let mut cuts: Vec<usize> =
            (0..uniform_inclusive(&mut rng, 0, 6)).map(|_| uniform_inclusive(&mut rng, 0, out.log.len() as u64) as usize).collect();
        cuts.sort_unstable();
        shard_ok &= replay_shards(&out.log, &cuts) == replayed;
    }

    let a = dir.path().join("a.ndjson");
    let b = dir.path().join("b.ndjson");
    write_log(&a, &out.log).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let again = pool.install(|| run_simulation(&cfg).unwrap());
    write_log(&b, &again.log).unwrap();
    let bytes_ok = std::fs::read(&a).unwrap() == std::fs::read(&b).unwrap();

    outcome(
        round_trip && replay_ok && shard_ok && bytes_ok,
        format!(
            "round trip of 10000 records {round_trip}; replay equals online {replay_ok}; \
             sharded merge equals sequential {shard_ok}; identical configs give identical bytes {bytes_ok}"
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("pair-click sign follows relevance", pair_click_sign),
        ("error minimizer recovers the order once data suffices", order_recovery),
        ("violating click model breaks the sign property", negative_control),
        ("naive and skip-above baselines stay biased", bias_baselines),
        ("rank displacement and pair symmetry", displacement),
        ("Fisher and Wilson against independent references", statistics_oracles),
        ("probe experiment", probe_experiment),
        ("log, replay, sharding and determinism invariants", engineering_invariants),
    ];
    let mut failed = 0;
    for (idx, (name, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
            });
        let tag = if result.passed { "PASS" } else { "FAIL" };
        failed += usize::from(!result.passed);
        println!("{tag} criterion {}: {name}: {} [{:.1}s]", idx + 1, result.detail, start.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 8 acceptance criteria passed");
}
