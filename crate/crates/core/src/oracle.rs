//! Brute-force reference solvers for small instances.
//!
//! The two-user and joint references are grid searches over the rate
//! definitions and never call the closed-form splits or the water-filling
//! solver. The per-subchannel hypothesis enumeration deliberately reuses the
//! closed-form split so its result can be compared bit for bit.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{subchannel_rates, ChannelSnapshot, SystemConfig};
use crate::subchannel::{better, evaluate_hypothesis, Hypothesis};

pub const MAX_ORACLE_USERS: usize = 5;
pub const MAX_ORACLE_SUBCHANNELS: usize = 3;
pub const MAX_ORACLE_POWER_LEVELS: usize = 200;
pub const MAX_ORACLE_SUBSET: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleSplit {
    pub p_phi: f64,
    pub value: f64,
}

#[inline]
fn pair_value(w_psi: f64, w_phi: f64, eta_psi: f64, eta_phi: f64, bandwidth: f64, p_bar: f64, p_phi: f64) -> f64 {
    let p_psi = p_bar - p_phi;
    bandwidth * (w_psi * (1.0 + p_psi / (p_phi + eta_psi)).log2() + w_phi * (1.0 + p_phi / eta_phi).log2())
}

/// Zoom rounds after the coarse grid.
const REFINE_ROUNDS: usize = 3;

/// Grid maximum of a unimodal function on `[0, p_bar]`: a uniform grid of
/// `steps` cells, then `REFINE_ROUNDS` uniform grids of `steps` cells over
/// the two cells around the incumbent.
fn refined_grid_max(p_bar: f64, steps: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut best = (0.0, f64::NEG_INFINITY);
    let (mut lo, mut hi) = (0.0, p_bar);
    for round in 0..=REFINE_ROUNDS {
        let width = (hi - lo) / steps as f64;
        for i in 0..=steps {
            let x = if i == steps { hi } else { lo + width * i as f64 };
            let v = f(x);
            if v > best.1 {
                best = (x, v);
            }
        }
        if round < REFINE_ROUNDS {
            lo = (best.0 - width).max(0.0);
            hi = (best.0 + width).min(p_bar);
        }
    }
    best
}

/// Grid search of the two-user weighted rate over `p_phi` in `[0, p_bar]`
/// (remainder to `psi`): `grid_steps` uniform cells, refined around the best
/// point. The objective is unimodal in `p_phi`, so refinement only sharpens
/// the incumbent.
pub fn oracle_two_user(
    w_psi: f64,
    w_phi: f64,
    eta_psi: f64,
    eta_phi: f64,
    bandwidth: f64,
    p_bar: f64,
    grid_steps: usize,
) -> Result<OracleSplit> {
    if grid_steps < 100 {
        return Err(Error::Precondition(format!("grid_steps {grid_steps} must be at least 100")));
    }
    if !(p_bar >= 0.0) {
        return Err(Error::Precondition(format!("budget {p_bar} must be nonnegative")));
    }
    let (p_phi, value) =
        refined_grid_max(p_bar, grid_steps, |p| pair_value(w_psi, w_phi, eta_psi, eta_phi, bandwidth, p_bar, p));
    Ok(OracleSplit { p_phi, value })
}

/// Exhaustive search over the per-subchannel hypothesis space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisOracle {
    /// Best over hypotheses whose companion is the highest-weight strictly
    /// weaker user (`None` when `p_bar` is zero).
    pub last_sic_user: Option<usize>,
    pub companion: Option<usize>,
    pub value: f64,
    /// Best over every (last-SIC user, any strictly weaker companion) pair.
    /// May exceed `value`: the companion rule is an approximation.
    pub all_pairs_last_sic_user: Option<usize>,
    pub all_pairs_companion: Option<usize>,
    pub all_pairs_value: f64,
}

fn is_rule_companion(weights: &[f64], eta: &[f64], phi: usize, psi: usize) -> bool {
    (0..eta.len()).filter(|&j| j != psi && eta[j] > eta[phi]).all(|j| {
        weights[psi] > weights[j]
            || (weights[psi] == weights[j] && (eta[psi] > eta[j] || (eta[psi] == eta[j] && psi < j)))
    })
}

/// Enumerates every `(phi, companion)` hypothesis on subchannel `k`; each is
/// evaluated through the same closed-form split as the solver so values are
/// comparable bit for bit.
pub fn oracle_subchannel_hypotheses(
    config: &SystemConfig,
    snapshot: &ChannelSnapshot,
    weights: &[f64],
    k: usize,
    p_bar: f64,
) -> Result<HypothesisOracle> {
    snapshot.check_dims(config)?;
    if weights.len() != config.n_users || k >= config.n_subchannels {
        return Err(Error::DimensionMismatch("weights or subchannel index out of range".into()));
    }
    let eta = snapshot.ncr_row(k);
    let bw = config.subchannel_bandwidth_hz[k];
    let n = config.n_users;

    let mut rule_best: Option<Hypothesis> = None;
    let mut any_best: Option<Hypothesis> = None;
    for phi in 0..n {
        let weaker: Vec<usize> = (0..n).filter(|&j| eta[j] > eta[phi]).collect();
        if weaker.is_empty() {
            let h = evaluate_hypothesis(weights, eta, bw, p_bar, phi, None)?;
            for slot in [&mut rule_best, &mut any_best] {
                if better(&h, slot.as_ref()) {
                    *slot = Some(h);
                }
            }
        }
        for psi in weaker {
            let h = evaluate_hypothesis(weights, eta, bw, p_bar, phi, Some(psi))?;
            if better(&h, any_best.as_ref()) {
                any_best = Some(h);
            }
            if is_rule_companion(weights, eta, phi, psi) && better(&h, rule_best.as_ref()) {
                rule_best = Some(h);
            }
        }
    }
    let unpack = |h: Option<Hypothesis>| match h {
        Some(h) if p_bar > 0.0 => (Some(h.phi), h.companion, h.value.unwrap_or(0.0)),
        _ => (None, None, 0.0),
    };
    let (last_sic_user, companion, value) = unpack(rule_best);
    let (all_pairs_last_sic_user, all_pairs_companion, all_pairs_value) = unpack(any_best);
    Ok(HypothesisOracle {
        last_sic_user,
        companion,
        value,
        all_pairs_last_sic_user,
        all_pairs_companion,
        all_pairs_value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointOracleOptions {
    /// Largest number of users sharing a subchannel (capped by the SIC
    /// capacity and by [`MAX_ORACLE_SUBSET`]).
    pub pair_limit: usize,
    /// Number of steps of the budget simplex grid (step `P_max / levels`).
    pub power_levels: usize,
    /// Grid steps for the split inside a pair (refined around the best
    /// point).
    pub pair_grid_steps: usize,
    /// Grid steps per axis for the split inside a triple.
    pub triple_grid_steps: usize,
}

impl Default for JointOracleOptions {
    fn default() -> Self {
        Self { pair_limit: 2, power_levels: 200, pair_grid_steps: 2000, triple_grid_steps: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointOracleSolution {
    pub value: f64,
    pub p_bars: Vec<f64>,
    /// Users served on each subchannel by the best grid point.
    pub subsets: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Default)]
struct LevelBest {
    value: f64,
    subset: Vec<usize>,
}

fn best_for_budget(
    weights: &[f64],
    eta: &[f64],
    bw: f64,
    p_bar: f64,
    limit: usize,
    opts: &JointOracleOptions,
) -> LevelBest {
    let n = eta.len();
    let mut best = LevelBest { value: 0.0, subset: Vec::new() };
    if p_bar <= 0.0 {
        return best;
    }
    let mut consider = |value: f64, subset: Vec<usize>| {
        if value > best.value {
            best = LevelBest { value, subset };
        }
    };
    for i in 0..n {
        consider(weights[i] * bw * (1.0 + p_bar / eta[i]).log2(), vec![i]);
    }
    if limit >= 2 {
        for a in 0..n {
            for b in (a + 1)..n {
                if eta[a] == eta[b] {
                    continue;
                }
                let (psi, phi) = if eta[a] > eta[b] { (a, b) } else { (b, a) };
                let (_, v) = refined_grid_max(p_bar, opts.pair_grid_steps, |p| {
                    pair_value(weights[psi], weights[phi], eta[psi], eta[phi], bw, p_bar, p)
                });
                consider(v, vec![a, b]);
            }
        }
    }
    if limit >= 3 {
        let g = opts.triple_grid_steps;
        let mut power = vec![0.0; n];
        let mut assigned = vec![false; n];
        for a in 0..n {
            for b in (a + 1)..n {
                for c in (b + 1)..n {
                    let users = [a, b, c];
                    for &u in &users {
                        assigned[u] = true;
                    }
                    for x in 0..=g {
                        for y in 0..=(g - x) {
                            power[a] = p_bar * x as f64 / g as f64;
                            power[b] = p_bar * y as f64 / g as f64;
                            power[c] = (p_bar - power[a] - power[b]).max(0.0);
                            let rates = subchannel_rates(bw, eta, &power, &assigned);
                            let v: f64 = users.iter().map(|&u| weights[u] * rates[u]).sum();
                            consider(v, users.to_vec());
                        }
                    }
                    for &u in &users {
                        assigned[u] = false;
                        power[u] = 0.0;
                    }
                }
            }
        }
    }
    best
}

fn compositions(k: usize, total: usize, caps: &[usize], prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if prefix.len() == k {
        out.push(prefix.clone());
        return;
    }
    let used: usize = prefix.iter().sum();
    let cap = caps[prefix.len()].min(total - used);
    for j in 0..=cap {
        prefix.push(j);
        compositions(k, total, caps, prefix, out);
        prefix.pop();
    }
}

/// Desk-scale reference for the joint problem: every per-subchannel subset of
/// at most `pair_limit` users with gridded powers, combined over every budget
/// split on the simplex grid.
pub fn oracle_joint(
    config: &SystemConfig,
    snapshot: &ChannelSnapshot,
    weights: &[f64],
    opts: &JointOracleOptions,
) -> Result<JointOracleSolution> {
    snapshot.check_dims(config)?;
    let (n, k) = (config.n_users, config.n_subchannels);
    let limit = opts.pair_limit.min(config.sic_capacity);
    if n > MAX_ORACLE_USERS
        || k > MAX_ORACLE_SUBCHANNELS
        || opts.power_levels > MAX_ORACLE_POWER_LEVELS
        || limit > MAX_ORACLE_SUBSET
    {
        return Err(Error::OracleTooLarge(format!(
            "N={n}, K={k}, power_levels={}, subset limit={limit}; supported up to N={MAX_ORACLE_USERS}, \
             K={MAX_ORACLE_SUBCHANNELS}, power_levels={MAX_ORACLE_POWER_LEVELS}, subset={MAX_ORACLE_SUBSET}",
            opts.power_levels
        )));
    }
    if weights.len() != n {
        return Err(Error::DimensionMismatch(format!("{} weights for {n} users", weights.len())));
    }
    if opts.power_levels == 0 || opts.pair_grid_steps < 100 || opts.triple_grid_steps == 0 || limit == 0 {
        return Err(Error::Precondition("oracle grids and subset limit must be positive".into()));
    }

    let levels = opts.power_levels;
    let step = config.p_max_watts / levels as f64;
    // Highest level each subchannel may take without exceeding its cap.
    let caps: Vec<usize> = config
        .p_max_per_subchannel_watts
        .iter()
        .map(|c| (((c + config.power_tolerance()) / step).floor() as usize).min(levels))
        .collect();
    let tables: Vec<Vec<LevelBest>> = (0..k)
        .map(|kk| {
            let eta = snapshot.ncr_row(kk);
            let bw = config.subchannel_bandwidth_hz[kk];
            (0..=caps[kk])
                .into_par_iter()
                .map(|j| best_for_budget(weights, eta, bw, j as f64 * step, limit, opts))
                .collect()
        })
        .collect();

    let mut splits = Vec::new();
    compositions(k, levels, &caps, &mut Vec::new(), &mut splits);
    let (value, split) = splits
        .iter()
        .map(|s| (s.iter().enumerate().map(|(kk, &j)| tables[kk][j].value).sum::<f64>(), s))
        .fold((f64::NEG_INFINITY, None), |acc, (v, s)| if v > acc.0 { (v, Some(s)) } else { acc });
    let split = split.ok_or_else(|| Error::Infeasible("no budget split on the grid".into()))?;
    Ok(JointOracleSolution {
        value,
        p_bars: split.iter().map(|&j| j as f64 * step).collect(),
        subsets: split.iter().enumerate().map(|(kk, &j)| tables[kk][j].subset.clone()).collect(),
    })
}
