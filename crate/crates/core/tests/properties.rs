use proptest::prelude::*;

use mcnoma::model::validate_allocation;
use mcnoma::pairwise::two_user_split;
use mcnoma::subchannel::solve_subchannel;
use mcnoma::{compute_rates, joint_sapa_lcc, Allocation, ChannelSnapshot, JointOptions, SystemConfig};

fn ncr_matrix(k: usize, n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(1e-4f64..10.0, n), k)
}

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..2.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn closed_form_split_beats_any_feasible_split(
        w_psi in 0.05f64..2.0, w_phi in 0.05f64..2.0,
        eta_phi in 1e-3f64..5.0, gap in 1.01f64..100.0,
        p_bar in 0.01f64..20.0, frac in 0.0f64..=1.0,
    ) {
        let eta_psi = eta_phi * gap;
        let split = two_user_split(w_psi, w_phi, eta_psi, eta_phi, 1.0, p_bar).unwrap();
        let best = split.value.unwrap_or(w_psi * (1.0 + p_bar / eta_psi).log2());
        let p_phi = frac * p_bar;
        let other = w_psi * (1.0 + (p_bar - p_phi) / (p_phi + eta_psi)).log2() + w_phi * (1.0 + p_phi / eta_phi).log2();
        prop_assert!(best >= other - 1e-12 * best.abs());
        prop_assert!((split.p_phi + split.p_psi - p_bar).abs() <= 1e-12 * p_bar);
    }

    #[test]
    fn subchannel_value_matches_sic_rates((ncr, w) in (1usize..8).prop_flat_map(|n| (ncr_matrix(1, n), weights(n))), p_bar in 0.0f64..5.0) {
        let n = w.len();
        let mut config = SystemConfig::uniform(n, 1, 1.0, 5.0, 1.0, 2);
        config.subchannel_bandwidth_hz = vec![1.0];
        let snap = ChannelSnapshot::from_ncr(ncr).unwrap();
        let sol = solve_subchannel(&config, &snap, &w, 0, p_bar).unwrap();
        prop_assert!(sol.assigned.iter().filter(|a| **a).count() <= 2);
        let alloc = Allocation { power: vec![sol.power.clone()], assigned: vec![sol.assigned.clone()] };
        let report = compute_rates(&config, &snap, &alloc, Some(&w)).unwrap();
        prop_assert!((report.weighted_sum - sol.value).abs() <= 1e-9 * sol.value.abs().max(1.0));
    }

    #[test]
    fn joint_allocation_is_feasible((ncr, w) in (2usize..7, 1usize..5).prop_flat_map(|(n, k)| (ncr_matrix(k, n), weights(n)))) {
        let (n, k) = (w.len(), ncr.len());
        let config = SystemConfig::uniform(n, k, k as f64, 10.0, 1.15, 2);
        let snap = ChannelSnapshot::from_ncr(ncr).unwrap();
        let sol = joint_sapa_lcc(&config, &snap, &w, &JointOptions::default()).unwrap();
        prop_assert!(validate_allocation(&config, &sol.allocation).is_ok());
        prop_assert!((sol.allocation.total_power() - 10.0).abs() <= 1e-6);
        prop_assert!(sol.trace.windows(2).all(|t| t[1] >= t[0] - 1e-9 * t[0].abs()));
        let report = compute_rates(&config, &snap, &sol.allocation, Some(&w)).unwrap();
        prop_assert!((report.weighted_sum - sol.weighted_sum_rate).abs() <= 1e-9 * sol.weighted_sum_rate);
    }
}
