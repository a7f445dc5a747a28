use aircsc::metrics::compute_metrics;
use aircsc::oracle::{
    instance_observations, instance_registry, oracle_csc, oracle_hhi, oracle_mmc, presence, random_instance,
};
use aircsc::panel::market_structure;
use aircsc::Period;
use proptest::prelude::*;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pipeline_agrees_with_brute_force(seed in any::<u64>(), majors in 2usize..6, regionals in 1usize..6, markets in 1usize..12) {
        let rows = random_instance(seed, majors, regionals, markets);
        let obs = instance_observations(&rows, Period::new(2012, 2));
        let ms = market_structure(&obs, &instance_registry(regionals)).unwrap();
        let metrics = compute_metrics(&ms.cells, &ms.usage);
        let (csc, mmc, hhi) = (oracle_csc(&rows), oracle_mmc(&presence(&rows)), oracle_hhi(&rows));
        prop_assert_eq!(metrics.len(), csc.len());
        for m in &metrics {
            prop_assert!(close(m.csc_baseline, csc[&m.market]));
            prop_assert!((0.0..=1.0).contains(&m.csc_baseline));
            prop_assert!(m.csc_count >= m.csc_baseline - 1e-12);
            match (m.mmc, mmc[&m.market]) {
                (Some(a), Some(b)) => prop_assert!(close(a, b)),
                (a, b) => prop_assert_eq!(a, b),
            }
            match (m.regional_hhi, hhi[&m.market]) {
                (Some(a), Some(b)) => prop_assert!(close(a, b) && a > 0.0 && a <= 1.0 + 1e-12),
                (a, b) => prop_assert_eq!(a, b),
            }
        }
    }

    #[test]
    fn trip_order_does_not_matter(seed in any::<u64>(), shift in 0usize..50) {
        let rows = random_instance(seed, 4, 3, 8);
        let mut obs = instance_observations(&rows, Period::new(2012, 2));
        let registry = instance_registry(3);
        let a = market_structure(&obs, &registry).unwrap();
        let len = obs.len().max(1);
        obs.rotate_left(shift % len);
        obs.reverse();
        let b = market_structure(&obs, &registry).unwrap();
        prop_assert_eq!(compute_metrics(&a.cells, &a.usage), compute_metrics(&b.cells, &b.usage));
    }
}
