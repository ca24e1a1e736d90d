mod common;

use proptest::prelude::*;
use tempinf::influence_rec::{gamma, InfluenceConfig};

proptest! {
    #[test]
    fn gamma_endpoints_and_monotone(tau in 2i64..100_000_000, a in 1i64..100_000_000, b in 1i64..100_000_000) {
        let c = InfluenceConfig::new(tau).unwrap();
        prop_assert_eq!(gamma(1, &c).unwrap(), 1.0);
        prop_assert!(gamma(tau, &c).unwrap().abs() < 1e-12);
        let (lo, hi) = (a.min(b) % tau + 1, a.max(b) % tau + 1);
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        if lo < hi {
            prop_assert!(gamma(lo, &c).unwrap() > gamma(hi, &c).unwrap());
        }
    }
}

#[test]
fn recommend_matches_rescanner_and_omega_never_decreases() {
    let (mut compared, mut strengthened) = (0usize, 0usize);
    for seed in 0..60u64 {
        let (c, s) = common::check_influence_replay(seed).unwrap_or_else(|e| panic!("{e}"));
        compared += c;
        strengthened += s;
    }
    assert!(compared > 1000, "only {compared} scores compared");
    assert!(strengthened > 100, "omega rarely grew: {strengthened}");
}
