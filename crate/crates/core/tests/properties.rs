mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{exhaustive_schedule_value, random_conflicts, random_multipath};
use trustnum_core::interference::{
    max_weight_schedule_exact, max_weight_schedule_greedy, CapacityRegion, DEFAULT_ENUMERATION_CAP,
};
use trustnum_core::optimizer::{delay_control, dphi, phi, source_rate_control};
use trustnum_core::topology::NodeId;
use trustnum_core::trust::{trust_incidence, TrustState};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    // Dyadic inputs keep every product exact, so the identity must hold
    // bit for bit.
    #[test]
    fn ewma_contraction_exact(nu in 0u32..=1024, fresh in 0u32..=1024, a in 0u32..=256) {
        let (nu, fresh, alpha) = (nu as f64 / 1024.0, fresh as f64 / 1024.0, a as f64 / 256.0);
        let s = TrustState::new(vec![nu], alpha).unwrap();
        let next = s.ewma_update([(NodeId(0), fresh)]).unwrap();
        prop_assert_eq!((next.value(NodeId(0)) - fresh).abs(), (1.0 - alpha) * (nu - fresh).abs());
    }

    #[test]
    fn ewma_contraction_general(nu in 0.0..=1.0f64, fresh in 0.0..=1.0f64, alpha in 0.0..=1.0f64) {
        let s = TrustState::new(vec![nu], alpha).unwrap();
        let next = s.ewma_update([(NodeId(0), fresh)]).unwrap();
        let lhs = (next.value(NodeId(0)) - fresh).abs();
        let rhs = (1.0 - alpha) * (nu - fresh).abs();
        prop_assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn incidence_rows_non_increasing(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_multipath(&mut rng, 4, 5);
        let tm = trust_incidence(&m.trust, &m.flow, &m.network);
        for (k, path) in m.flow.paths.iter().enumerate() {
            let along: Vec<f64> = path.links().iter().map(|&l| tm.get(k, l)).collect();
            prop_assert_eq!(along[0], m.trust.value(path.receivers()[0]));
            for w in along.windows(2) {
                prop_assert!(w[1] <= w[0]);
            }
            prop_assert_eq!(*along.last().unwrap(), m.trust.path_trust(path));
        }
    }

    #[test]
    fn first_hop_scaling_leaves_rates(seed in any::<u64>(), f in 0.05..1.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_multipath(&mut rng, 4, 5);
        let lambda: Vec<f64> = (0..m.network.link_count()).map(|_| rng.gen_range(0.01..5.0)).collect();
        let base = source_rate_control(&m.flow, &trust_incidence(&m.trust, &m.flow, &m.network), &lambda, 0.0).unwrap();
        for (k, path) in m.flow.paths.iter().enumerate() {
            let first = path.receivers()[0];
            let mut values = m.trust.values().to_vec();
            values[first.0] *= f;
            let scaled = TrustState::new(values, m.trust.alpha()).unwrap();
            let out = source_rate_control(&m.flow, &trust_incidence(&scaled, &m.flow, &m.network), &lambda, 0.0).unwrap();
            let (a, b) = (base.rates[k], out.rates[k]);
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "path {}: {} vs {}", k, a, b);
        }
    }

    #[test]
    fn interior_rates_are_stationary(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_multipath(&mut rng, 4, 4);
        let lambda: Vec<f64> = (0..m.network.link_count()).map(|_| rng.gen_range(0.01..5.0)).collect();
        let tm = trust_incidence(&m.trust, &m.flow, &m.network);
        let out = source_rate_control(&m.flow, &tm, &lambda, 1e-9).unwrap();
        prop_assert!(out.interior);
        for k in 0..tm.rows() {
            let den: f64 = tm.row(k).iter().zip(&lambda).map(|(a, b)| a * b).sum();
            let t = tm.path_trust()[k];
            prop_assert!((t / out.rates[k] - den).abs() <= 1e-9 * den.max(1.0));
        }
    }

    #[test]
    fn unclamped_margin_is_stationary(lambda in 1e-3..10.0f64, mu in 1e-3..10.0f64, kappa in 0.1..5.0f64) {
        let s = delay_control(lambda, mu, kappa, 1e-6, 1e6);
        prop_assert!((-lambda - kappa * mu * dphi(s)).abs() <= 1e-9 * lambda.max(1.0));
    }

    #[test]
    fn dphi_matches_finite_difference(sigma in 1e-2..100.0f64) {
        let h = sigma * 1e-5;
        let fd = (phi(sigma + h) - phi(sigma - h)) / (2.0 * h);
        prop_assert!((fd - dphi(sigma)).abs() <= 1e-6 * dphi(sigma).abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exact_schedule_matches_exhaustive(seed in any::<u64>(), n in 1usize..=12, density in 0.0..0.8f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (net, cg) = random_conflicts(&mut rng, n, density);
        let region = CapacityRegion::enumerate(&net, &cg, DEFAULT_ENUMERATION_CAP).unwrap();
        let prices: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
        let (_, exact) = max_weight_schedule_exact(&region, &prices);
        let brute = exhaustive_schedule_value(&net, &cg, &prices);
        prop_assert!((exact - brute).abs() <= 1e-9 * brute.max(1.0));
        let greedy = max_weight_schedule_greedy(&cg, &net, &prices).weighted_value(&prices);
        prop_assert!(greedy <= exact + 1e-9);
    }

    #[test]
    fn greedy_is_exact_without_conflicts(seed in any::<u64>(), n in 1usize..=12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (net, cg) = random_conflicts(&mut rng, n, 0.0);
        let region = CapacityRegion::enumerate(&net, &cg, DEFAULT_ENUMERATION_CAP).unwrap();
        let prices: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
        let (_, exact) = max_weight_schedule_exact(&region, &prices);
        let greedy = max_weight_schedule_greedy(&cg, &net, &prices).weighted_value(&prices);
        prop_assert!((greedy - exact).abs() <= 1e-9 * exact.max(1.0));
    }
}
