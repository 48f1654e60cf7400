//! Per-subchannel user selection and power split for a fixed subchannel
//! budget.
//!
//! Every user is tried as the last-SIC user. Its companion is the
//! highest-weight user among those with a strictly larger NCR (one linear
//! scan per hypothesis, so a call costs O(N^2)), the pair's
//! split comes from [`two_user_split`], and the best hypothesis wins. At most
//! two users ever receive power, so the result respects any SIC capacity of
//! two or more.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ChannelSnapshot, SystemConfig};
use crate::pairwise::{single_user_value, two_user_split, SplitRegime};

/// Winning hypothesis on one subchannel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubchannelSolution {
    pub subchannel: usize,
    pub last_sic_user: usize,
    pub companion: Option<usize>,
    pub p_phi: f64,
    pub p_psi: f64,
    pub value: f64,
    /// `None` when the last-SIC user has no companion.
    pub regime: Option<SplitRegime>,
    pub power: Vec<f64>,
    pub assigned: Vec<bool>,
}

impl SubchannelSolution {
    pub fn active_users(&self) -> impl Iterator<Item = usize> + '_ {
        self.assigned.iter().enumerate().filter(|(_, q)| **q).map(|(i, _)| i)
    }
}

/// Highest-weight user among those whose NCR is strictly larger than
/// `eta[phi]`. Equal weights go to the larger NCR, then to the smaller index.
#[inline]
pub fn select_companion(effective_weights: &[f64], eta: &[f64], phi: usize) -> Option<usize> {
    let mut best: Option<usize> = None;
    for j in 0..eta.len() {
        if eta[j] <= eta[phi] {
            continue;
        }
        match best {
            None => best = Some(j),
            Some(b) => {
                let (wj, wb) = (effective_weights[j], effective_weights[b]);
                if wj > wb || (wj == wb && eta[j] > eta[b]) {
                    best = Some(j);
                }
            }
        }
    }
    best
}

/// Outcome of one last-SIC hypothesis.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Hypothesis {
    pub phi: usize,
    pub companion: Option<usize>,
    pub p_phi: f64,
    pub p_psi: f64,
    pub value: Option<f64>,
    pub regime: Option<SplitRegime>,
}

pub(crate) fn evaluate_hypothesis(
    weights: &[f64],
    eta: &[f64],
    bandwidth: f64,
    p_bar: f64,
    phi: usize,
    companion: Option<usize>,
) -> Result<Hypothesis> {
    Ok(match companion {
        None => Hypothesis {
            phi,
            companion,
            p_phi: p_bar,
            p_psi: 0.0,
            value: Some(single_user_value(weights[phi], eta[phi], bandwidth, p_bar)?),
            regime: None,
        },
        Some(psi) => {
            let split = two_user_split(weights[psi], weights[phi], eta[psi], eta[phi], bandwidth, p_bar)?;
            Hypothesis {
                phi,
                companion,
                p_phi: split.p_phi,
                p_psi: split.p_psi,
                value: split.value,
                regime: Some(split.regime),
            }
        }
    })
}

/// Keeps the larger value; equal values go to the smaller last-SIC index.
pub(crate) fn better(candidate: &Hypothesis, incumbent: Option<&Hypothesis>) -> bool {
    let Some(value) = candidate.value else { return false };
    match incumbent.and_then(|h| h.value.map(|v| (v, h.phi))) {
        None => true,
        Some((best, best_phi)) => value > best || (value == best && candidate.phi < best_phi),
    }
}

pub fn solve_subchannel(
    config: &SystemConfig,
    snapshot: &ChannelSnapshot,
    effective_weights: &[f64],
    k: usize,
    p_bar: f64,
) -> Result<SubchannelSolution> {
    if !(p_bar >= 0.0) {
        return Err(Error::Precondition(format!("subchannel budget {p_bar} must be nonnegative")));
    }
    snapshot.check_dims(config)?;
    if effective_weights.len() != config.n_users {
        return Err(Error::DimensionMismatch(format!(
            "{} effective weights for {} users",
            effective_weights.len(),
            config.n_users
        )));
    }
    if k >= config.n_subchannels {
        return Err(Error::DimensionMismatch(format!("subchannel {k} out of range")));
    }
    let eta = snapshot.ncr_row(k);
    let bandwidth = config.subchannel_bandwidth_hz[k];

    let mut best: Option<Hypothesis> = None;
    for phi in 0..config.n_users {
        let companion = select_companion(effective_weights, eta, phi);
        let h = evaluate_hypothesis(effective_weights, eta, bandwidth, p_bar, phi, companion)?;
        if better(&h, best.as_ref()) {
            best = Some(h);
        }
    }
    // The weakest user always yields a finite single-user hypothesis.
    let best = best.expect("at least one finite hypothesis");

    let n = config.n_users;
    let mut power = vec![0.0; n];
    let mut assigned = vec![false; n];
    if p_bar > 0.0 {
        power[best.phi] = best.p_phi;
        if let Some(psi) = best.companion {
            power[psi] = best.p_psi;
        }
        for (q, p) in assigned.iter_mut().zip(&power) {
            *q = *p > 0.0;
        }
    }
    Ok(SubchannelSolution {
        subchannel: k,
        last_sic_user: best.phi,
        companion: best.companion,
        p_phi: if p_bar > 0.0 { best.p_phi } else { 0.0 },
        p_psi: if p_bar > 0.0 { best.p_psi } else { 0.0 },
        value: if p_bar > 0.0 { best.value.unwrap_or(0.0) } else { 0.0 },
        regime: best.regime,
        power,
        assigned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{compute_subchannel_rate, Allocation};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit_config(n: usize) -> SystemConfig {
        let mut c = SystemConfig::uniform(n, 1, 1.0, 10.0, 1.0, 2);
        c.subchannel_bandwidth_hz = vec![1.0];
        c
    }

    #[test]
    fn companion_selection() {
        let eta = [3.0, 2.0, 1.0];
        assert_eq!(select_companion(&[0.3, 0.9, 0.5], &eta, 2), Some(1));
        assert_eq!(select_companion(&[0.3, 0.9, 0.5], &eta, 0), None);
        assert_eq!(select_companion(&[0.5, 0.5, 0.2], &eta, 2), Some(0));
        assert_eq!(select_companion(&[0.5, 0.5, 0.2], &[2.0, 3.0, 1.0], 2), Some(1));
        // an equal NCR never qualifies
        assert_eq!(select_companion(&[1.0, 9.0], &[1.0, 1.0], 0), None);
    }

    #[test]
    fn two_user_example_picks_strong_user_as_last() {
        let config = unit_config(2);
        let snap = ChannelSnapshot::from_ncr(vec![vec![4.0, 1.0]]).unwrap();
        let sol = solve_subchannel(&config, &snap, &[2.0, 1.0], 0, 10.0).unwrap();
        assert_eq!(sol.last_sic_user, 1);
        assert_eq!(sol.companion, Some(0));
        assert_relative_eq!(sol.power[0], 8.0, epsilon = 1e-12);
        assert_relative_eq!(sol.power[1], 2.0, epsilon = 1e-12);
        assert_relative_eq!(sol.value, 4.029_747_343_394_052, epsilon = 1e-12);
        assert!(sol.value > 3.614_709_844_115_208);
    }

    #[test]
    fn zero_budget_is_zero_allocation() {
        let config = unit_config(3);
        let snap = ChannelSnapshot::from_ncr(vec![vec![4.0, 1.0, 2.0]]).unwrap();
        let sol = solve_subchannel(&config, &snap, &[1.0, 2.0, 3.0], 0, 0.0).unwrap();
        assert_eq!(sol.value, 0.0);
        assert!(sol.power.iter().all(|p| *p == 0.0));
        assert!(sol.assigned.iter().all(|q| !q));
        assert!(solve_subchannel(&config, &snap, &[1.0; 3], 0, -1.0).is_err());
    }

    #[test]
    fn single_user_system() {
        let config = unit_config(1);
        let snap = ChannelSnapshot::from_ncr(vec![vec![0.5]]).unwrap();
        let sol = solve_subchannel(&config, &snap, &[1.0], 0, 3.0).unwrap();
        assert_eq!(sol.last_sic_user, 0);
        assert_eq!(sol.companion, None);
        assert_eq!(sol.p_phi, 3.0);
    }

    #[test]
    fn tied_ncrs_never_pair() {
        let config = unit_config(3);
        let snap = ChannelSnapshot::from_ncr(vec![vec![1.0, 1.0, 1.0]]).unwrap();
        let sol = solve_subchannel(&config, &snap, &[1.0, 1.0, 1.0], 0, 5.0).unwrap();
        assert_eq!(sol.companion, None);
        assert_eq!(sol.last_sic_user, 0);
        assert_eq!(sol.active_users().count(), 1);
    }

    proptest! {
        #[test]
        fn value_matches_rate_reevaluation(
            etas in proptest::collection::vec(1e-3f64..10.0, 1..8),
            seed_w in proptest::collection::vec(0.05f64..2.0, 8),
            p_bar in 0.01f64..50.0,
        ) {
            let n = etas.len();
            let config = unit_config(n);
            let weights = &seed_w[..n];
            let snap = ChannelSnapshot::from_ncr(vec![etas.clone()]).unwrap();
            let sol = solve_subchannel(&config, &snap, weights, 0, p_bar).unwrap();
            prop_assert!(sol.active_users().count() <= 2);
            if let Some(psi) = sol.companion {
                prop_assert!(etas[psi] > etas[sol.last_sic_user]);
            }
            let alloc = Allocation { power: vec![sol.power.clone()], assigned: vec![sol.assigned.clone()] };
            let rates = compute_subchannel_rate(&config, &snap, &alloc, 0).unwrap();
            let weighted: f64 = rates.iter().zip(weights).map(|(r, w)| r * w).sum();
            prop_assert!((weighted - sol.value).abs() <= 1e-9 * sol.value.abs().max(1e-12));
        }
    }
}
