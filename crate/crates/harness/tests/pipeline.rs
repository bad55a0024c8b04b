use fairpairs_harness::sim::simulate_queries;
use fairpairs_harness::{replay, ExperimentConfig, Extractor};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn split_ranges_merge_to_the_whole(
        seed in any::<u64>(),
        n in 2usize..9,
        queries in 0u64..3000,
        cut in 0.0f64..=1.0,
    ) {
        let exp = ExperimentConfig::new(seed, queries, n).resolve().unwrap();
        let mid = (queries as f64 * cut) as u64;
        let whole = simulate_queries(&exp, 0..queries, true);
        let mut left = simulate_queries(&exp, 0..mid, true);
        let right = simulate_queries(&exp, mid..queries, true);
        left.stats.merge(&right.stats);
        left.log.extend(right.log);
        prop_assert_eq!(&left.stats, &whole.stats);
        prop_assert_eq!(&left.log, &whole.log);
    }

    #[test]
    fn replay_of_any_run_matches_its_online_counts(seed in any::<u64>(), n in 2usize..9, queries in 0u64..2000) {
        let exp = ExperimentConfig::new(seed, queries, n).resolve().unwrap();
        let out = simulate_queries(&exp, 0..queries, true);
        prop_assert_eq!(replay(&out.log, Extractor::ALL).unwrap(), out.stats);
    }
}
