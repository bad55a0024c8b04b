//! Independent reference computations for the closed-form and numerical
//! routines in the crate.

use fairpairs_core::rng::impression_stream;
use fairpairs_core::*;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use statrs::distribution::{ContinuousCDF, Normal};

fn binom(n: u64, k: u64) -> BigUint {
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Two-sided minimum-likelihood p-value in exact rational arithmetic.
fn fisher_oracle(t: [[u64; 2]; 2]) -> f64 {
    let [[a, b], [c, d]] = t;
    let (r1, r2, c1) = (a + b, c + d, a + c);
    let n = r1 + r2;
    let weight = |x: u64| binom(r1, x) * binom(r2, c1 - x);
    let lo = c1.saturating_sub(r2);
    let hi = r1.min(c1);
    let observed = weight(a);
    let mut tail = BigUint::zero();
    for x in lo..=hi {
        let w = weight(x);
        if w <= observed {
            tail += w;
        }
    }
    BigRational::new(tail.into(), binom(n, c1).into()).to_f64().unwrap()
}

/// Wilson bounds as the two roots of `|p̂ − p| = z·sqrt(p(1−p)/n)`, found by
/// bisection.
fn wilson_oracle(c: u64, n: u64, confidence: f64) -> (f64, f64) {
    let z = Normal::standard().inverse_cdf(1.0 - (1.0 - confidence) / 2.0);
    let ph = c as f64 / n as f64;
    let f = |p: f64| (ph - p).powi(2) - z * z * p * (1.0 - p) / n as f64;
    let root = |mut lo: f64, mut hi: f64| {
        // f(lo) and f(hi) have opposite signs
        let rising = f(hi) > f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) > 0.0) == rising {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let lo = if c == 0 { 0.0 } else { root(0.0, ph) };
    let hi = if c == n { 1.0 } else { root(ph, 1.0) };
    (lo, hi)
}

#[test]
fn fisher_matches_exact_enumeration_on_small_tables() {
    let mut checked = 0;
    for a in 0..=6u64 {
        for b in 0..=6 {
            for c in 0..=6 {
                for d in 0..=6 {
                    let t = [[a, b], [c, d]];
                    let r = fisher_exact(t);
                    if r.degenerate {
                        assert_eq!(r.p_value, 1.0);
                        continue;
                    }
                    let want = fisher_oracle(t);
                    assert!((r.p_value - want).abs() < 1e-12, "{t:?}: {} vs {want}", r.p_value);
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 2000);
}

#[test]
fn fisher_fixture_table() {
    let t = [[20, 2], [7, 4]];
    assert!((fisher_exact(t).p_value - fisher_oracle(t)).abs() < 1e-12);
}

#[test]
fn wilson_matches_bisection() {
    for n in [1u64, 2, 5, 36, 100, 999, 20_000] {
        for c in [0, 1, n / 3, n / 2, n - 1, n] {
            for conf in [0.8, 0.95, 0.99] {
                let ci = wilson_interval(c, n, conf).unwrap();
                let (lo, hi) = wilson_oracle(c, n, conf);
                assert!((ci.lo - lo).abs() < 1e-9, "{c}/{n}@{conf}: lo {} vs {lo}", ci.lo);
                assert!((ci.hi - hi).abs() < 1e-9, "{c}/{n}@{conf}: hi {} vs {hi}", ci.hi);
            }
        }
    }
}

#[test]
fn wilson_fixture() {
    let ci = wilson_interval(20, 36, 0.95).unwrap();
    let (lo, hi) = wilson_oracle(20, 36, 0.95);
    assert!((ci.lo - lo).abs() < 1e-12 && (ci.hi - hi).abs() < 1e-12);
    assert!((ci.lo - 0.3958).abs() < 1e-3 && (ci.hi - 0.7046).abs() < 1e-3);
}

#[test]
fn marginals_match_full_plan_enumeration() {
    for n in 1..=9usize {
        let mut oracle = vec![vec![0.0; n]; n];
        for k in [Offset::Zero, Offset::One] {
            let pairs = (n - k.as_u8() as usize) / 2;
            let plans = 1usize << pairs;
            let weight = 0.5 / plans as f64;
            let base = RankedList::new((1..=n as u32).map(DocumentId).collect());
            for bits in 0..plans {
                let flags = (0..pairs).map(|i| bits >> i & 1 == 1).collect();
                let p = apply_flip_plan(&base, &FlipPlan::new(k, flags)).unwrap();
                for (idx, d) in base.as_slice().iter().enumerate() {
                    oracle[idx][p.order().rank_of(*d).unwrap() - 1] += weight;
                }
            }
        }
        let m = marginal_rank_distribution(n);
        for i in 0..n {
            for j in 0..n {
                assert!((m[i][j] - oracle[i][j]).abs() < 1e-15, "n={n} ({i},{j})");
            }
        }
    }
}

#[test]
fn drawn_plans_are_fair() {
    let n = 7;
    let trials = 200_000u64;
    let mut k0 = 0u64;
    let mut flags = 0u64;
    let mut flag_total = 0u64;
    for q in 0..trials {
        let plan = draw_flip_plan(n, &mut impression_stream(5, q));
        if plan.k == Offset::Zero {
            k0 += 1;
        }
        flags += plan.swap_flags.iter().filter(|&&f| f).count() as u64;
        flag_total += plan.swap_flags.len() as u64;
    }
    let sd = (0.25 / trials as f64).sqrt();
    assert!((k0 as f64 / trials as f64 - 0.5).abs() < 5.0 * sd);
    let sd = (0.25 / flag_total as f64).sqrt();
    assert!((flags as f64 / flag_total as f64 - 0.5).abs() < 5.0 * sd);
}
