//! Alternating per-subchannel solves and budget water-filling for one slot.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::master::{build_value_function, solve_master, ValueFunction};
use crate::model::{Allocation, ChannelSnapshot, SystemConfig};
use crate::subchannel::{solve_subchannel, SubchannelSolution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JointOptions {
    /// Stop when the relative weighted-sum-rate gain falls below this.
    pub relative_tolerance: f64,
    pub max_iterations: usize,
    /// Relative tolerance handed to the budget bisection.
    pub master_tolerance: f64,
    /// Solve subchannels on the rayon pool. Worth it only for large K.
    pub parallel: bool,
}

impl Default for JointOptions {
    fn default() -> Self {
        Self { relative_tolerance: 1e-9, max_iterations: 50, master_tolerance: 1e-9, parallel: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointSolution {
    pub allocation: Allocation,
    pub p_bars: Vec<f64>,
    /// Objective under the effective weights used for the solve.
    pub weighted_sum_rate: f64,
    /// Number of budget updates performed.
    pub iterations: usize,
    /// Weighted sum rate after the initial equal split and after every update.
    pub trace: Vec<f64>,
    pub subchannels: Vec<SubchannelSolution>,
    /// Largest decrease seen between consecutive trace entries (0 if none).
    pub max_trace_drop: f64,
}

fn solve_all(
    config: &SystemConfig,
    snapshot: &ChannelSnapshot,
    weights: &[f64],
    p_bars: &[f64],
    parallel: bool,
) -> Result<Vec<SubchannelSolution>> {
    if parallel {
        (0..config.n_subchannels)
            .into_par_iter()
            .map(|k| solve_subchannel(config, snapshot, weights, k, p_bars[k]))
            .collect()
    } else {
        (0..config.n_subchannels).map(|k| solve_subchannel(config, snapshot, weights, k, p_bars[k])).collect()
    }
}

fn same_pairs(a: &[SubchannelSolution], b: &[SubchannelSolution]) -> bool {
    a.iter().zip(b).all(|(x, y)| x.last_sic_user == y.last_sic_user && x.companion == y.companion)
}

/// Joint subchannel assignment and power allocation for one slot.
///
/// Starts from an equal budget split, then repeats: build each subchannel's
/// value function from its current pair, water-fill the budgets, re-solve
/// every subchannel at the new budgets. The loop ends when the re-solve keeps
/// every pair (an exact fixed point) or the relative gain drops below the
/// tolerance.
pub fn joint_sapa_lcc(
    config: &SystemConfig,
    snapshot: &ChannelSnapshot,
    effective_weights: &[f64],
    options: &JointOptions,
) -> Result<JointSolution> {
    snapshot.check_dims(config)?;
    if effective_weights.len() != config.n_users {
        return Err(Error::DimensionMismatch(format!(
            "{} effective weights for {} users",
            effective_weights.len(),
            config.n_users
        )));
    }
    if let Some(w) = effective_weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::Precondition(format!("effective weight {w} must be strictly positive")));
    }

    let k_count = config.n_subchannels;
    let mut p_bars = vec![config.p_max_watts / k_count as f64; k_count];
    let mut solutions = solve_all(config, snapshot, effective_weights, &p_bars, options.parallel)?;
    let mut value: f64 = solutions.iter().map(|s| s.value).sum();
    let mut trace = vec![value];
    let mut iterations = 0;
    let mut max_trace_drop: f64 = 0.0;

    while iterations < options.max_iterations {
        iterations += 1;
        let vfs = solutions
            .iter()
            .enumerate()
            .map(|(k, s)| {
                build_value_function(s, effective_weights, snapshot.ncr_row(k), config.subchannel_bandwidth_hz[k])
            })
            .collect::<Result<Vec<ValueFunction>>>()?;
        let master =
            solve_master(&vfs, config.p_max_watts, &config.p_max_per_subchannel_watts, options.master_tolerance)?;
        let next = solve_all(config, snapshot, effective_weights, &master.p_bars, options.parallel)?;
        let next_value: f64 = next.iter().map(|s| s.value).sum();
        max_trace_drop = max_trace_drop.max(value - next_value);
        trace.push(next_value);

        let fixed_point = same_pairs(&solutions, &next);
        let gain = next_value - value;
        p_bars = master.p_bars;
        solutions = next;
        value = next_value;
        if fixed_point || gain <= options.relative_tolerance * value.abs() {
            break;
        }
    }

    let mut allocation = Allocation::zeros(k_count, config.n_users);
    for (k, s) in solutions.iter().enumerate() {
        allocation.power[k].clone_from(&s.power);
        allocation.assigned[k].clone_from(&s.assigned);
    }
    Ok(JointSolution {
        allocation,
        p_bars,
        weighted_sum_rate: value,
        iterations,
        trace,
        subchannels: solutions,
        max_trace_drop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{compute_rates, validate_allocation};
    use approx::assert_relative_eq;

    #[test]
    fn single_subchannel_is_one_solve_at_full_budget() {
        let mut config = SystemConfig::uniform(3, 1, 1.0, 10.0, 1.0, 2);
        config.subchannel_bandwidth_hz = vec![1.0];
        let snap = ChannelSnapshot::from_ncr(vec![vec![4.0, 1.0, 2.0]]).unwrap();
        let w = [2.0, 1.0, 0.5];
        let sol = joint_sapa_lcc(&config, &snap, &w, &JointOptions::default()).unwrap();
        let direct = solve_subchannel(&config, &snap, &w, 0, 10.0).unwrap();
        assert_eq!(sol.iterations, 1);
        assert_relative_eq!(sol.p_bars[0], 10.0, epsilon = 1e-8);
        assert_relative_eq!(sol.weighted_sum_rate, direct.value, epsilon = 1e-9);
    }

    #[test]
    fn symmetric_subchannels_split_equally() {
        let config = SystemConfig::uniform(3, 4, 4.0, 8.0, 1.15, 2);
        let snap = ChannelSnapshot::from_ncr(vec![vec![3.0, 0.5, 1.0]; 4]).unwrap();
        let sol = joint_sapa_lcc(&config, &snap, &[1.0, 0.6, 0.9], &JointOptions::default()).unwrap();
        for p in &sol.p_bars {
            assert_relative_eq!(*p, 2.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn result_is_feasible_and_consistent() {
        let config = SystemConfig::uniform(4, 3, 3.0, 6.0, 1.15, 2);
        let snap = ChannelSnapshot::from_ncr(vec![
            vec![0.3, 2.0, 0.05, 1.0],
            vec![1.5, 0.2, 0.7, 0.01],
            vec![0.9, 0.4, 3.0, 0.2],
        ])
        .unwrap();
        let w = [0.9, 0.4, 0.7, 0.2];
        let sol = joint_sapa_lcc(&config, &snap, &w, &JointOptions::default()).unwrap();
        assert!(validate_allocation(&config, &sol.allocation).is_ok());
        let report = compute_rates(&config, &snap, &sol.allocation, Some(&w)).unwrap();
        assert_relative_eq!(report.weighted_sum, sol.weighted_sum_rate, max_relative = 1e-9);
        assert!(sol.trace.windows(2).all(|t| t[1] >= t[0] - 1e-9));
    }

    #[test]
    fn rejects_nonpositive_weights() {
        let config = SystemConfig::uniform(2, 1, 1.0, 1.0, 1.0, 2);
        let snap = ChannelSnapshot::from_ncr(vec![vec![1.0, 2.0]]).unwrap();
        assert!(joint_sapa_lcc(&config, &snap, &[1.0, 0.0], &JointOptions::default()).is_err());
    }
}
