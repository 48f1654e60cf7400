//! Problem data, rate formulas and feasibility checks shared by every solver.
//!
//! Users on a subchannel are decoded in order of decreasing noise-to-channel
//! ratio (NCR). A user sees interference only from the users that are decoded
//! after it, i.e. from users with a strictly smaller NCR. Exact NCR ties are
//! resolved by user index: the lower index is treated as the weaker user.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit in which QoS targets and scheduler-side rates are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RateUnit {
    BitsPerSecond,
    #[default]
    BitsPerSecondPerHz,
}

/// Static description of the downlink system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n_users: usize,
    pub n_subchannels: usize,
    pub total_bandwidth_hz: f64,
    pub subchannel_bandwidth_hz: Vec<f64>,
    pub p_max_watts: f64,
    pub p_max_per_subchannel_watts: Vec<f64>,
    /// Maximum number of users multiplexed on one subchannel (SIC capacity).
    pub sic_capacity: usize,
    pub weights: Vec<f64>,
    pub qos_min_rate: Vec<f64>,
    #[serde(default)]
    pub qos_unit: RateUnit,
}

impl SystemConfig {
    /// Equal-bandwidth system with unit weights, no QoS targets and
    /// per-subchannel caps of `cap_factor * p_max / K`.
    pub fn uniform(
        n_users: usize,
        n_subchannels: usize,
        total_bandwidth_hz: f64,
        p_max_watts: f64,
        cap_factor: f64,
        sic_capacity: usize,
    ) -> Self {
        let k = n_subchannels.max(1) as f64;
        Self {
            n_users,
            n_subchannels,
            total_bandwidth_hz,
            subchannel_bandwidth_hz: vec![total_bandwidth_hz / k; n_subchannels],
            p_max_watts,
            p_max_per_subchannel_watts: vec![cap_factor * p_max_watts / k; n_subchannels],
            sic_capacity,
            weights: vec![1.0; n_users],
            qos_min_rate: vec![0.0; n_users],
            qos_unit: RateUnit::BitsPerSecondPerHz,
        }
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.weights = weights;
        self
    }

    pub fn with_qos(mut self, qos_min_rate: Vec<f64>, unit: RateUnit) -> Self {
        self.qos_min_rate = qos_min_rate;
        self.qos_unit = unit;
        self
    }

    /// Checks structural validity first (`InvalidConfig`), then the
    /// feasibility assumptions the solvers rely on (`Infeasible`).
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_users == 0 {
            return bad("n_users must be positive".into());
        }
        if self.n_subchannels == 0 {
            return bad("n_subchannels must be positive".into());
        }
        if self.subchannel_bandwidth_hz.len() != self.n_subchannels {
            return bad(format!(
                "subchannel_bandwidth_hz has {} entries, expected {}",
                self.subchannel_bandwidth_hz.len(),
                self.n_subchannels
            ));
        }
        if self.p_max_per_subchannel_watts.len() != self.n_subchannels {
            return bad(format!(
                "p_max_per_subchannel_watts has {} entries, expected {}",
                self.p_max_per_subchannel_watts.len(),
                self.n_subchannels
            ));
        }
        if self.weights.len() != self.n_users {
            return bad(format!("weights has {} entries, expected {}", self.weights.len(), self.n_users));
        }
        if self.qos_min_rate.len() != self.n_users {
            return bad(format!("qos_min_rate has {} entries, expected {}", self.qos_min_rate.len(), self.n_users));
        }
        if !(self.total_bandwidth_hz.is_finite() && self.total_bandwidth_hz > 0.0) {
            return bad("total_bandwidth_hz must be positive".into());
        }
        if let Some(b) = self.subchannel_bandwidth_hz.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return bad(format!("subchannel bandwidth {b} must be positive"));
        }
        if !(self.p_max_watts.is_finite() && self.p_max_watts > 0.0) {
            return bad("p_max_watts must be positive".into());
        }
        if let Some(p) = self.p_max_per_subchannel_watts.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return bad(format!("per-subchannel power cap {p} must be positive"));
        }
        if let Some(w) = self.weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return bad(format!("weight {w} must be strictly positive"));
        }
        if let Some(r) = self.qos_min_rate.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return bad(format!("QoS target {r} must be nonnegative"));
        }
        if self.sic_capacity < 2 {
            return Err(Error::Infeasible(format!(
                "sic_capacity = {} but at least 2 users per subchannel are required",
                self.sic_capacity
            )));
        }
        let cap_sum: f64 = self.p_max_per_subchannel_watts.iter().sum();
        if cap_sum < self.p_max_watts {
            return Err(Error::Infeasible(format!(
                "sum of per-subchannel caps {cap_sum} W is below the total budget {} W",
                self.p_max_watts
            )));
        }
        Ok(())
    }

    /// Absolute slack used for every power comparison.
    pub fn power_tolerance(&self) -> f64 {
        1e-9 * self.p_max_watts
    }

    /// Converts a rate in bits/s into the configured QoS unit.
    pub fn to_qos_unit(&self, bits_per_second: f64) -> f64 {
        match self.qos_unit {
            RateUnit::BitsPerSecond => bits_per_second,
            RateUnit::BitsPerSecondPerHz => bits_per_second / self.total_bandwidth_hz,
        }
    }
}

/// One slot's channel: complex gains, noise powers and the derived NCRs,
/// all indexed `[subchannel][user]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSnapshot {
    gains: Vec<Vec<Complex64>>,
    noise_power: Vec<Vec<f64>>,
    ncr: Vec<Vec<f64>>,
}

impl ChannelSnapshot {
    pub fn new(gains: Vec<Vec<Complex64>>, noise_power: Vec<Vec<f64>>) -> Result<Self> {
        if gains.len() != noise_power.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} gain rows vs {} noise rows",
                gains.len(),
                noise_power.len()
            )));
        }
        let width = gains.first().map_or(0, Vec::len);
        let mut ncr = Vec::with_capacity(gains.len());
        for (k, (g_row, n_row)) in gains.iter().zip(&noise_power).enumerate() {
            if g_row.len() != width || n_row.len() != width {
                return Err(Error::DimensionMismatch(format!("ragged row at subchannel {k}")));
            }
            let row = g_row
                .iter()
                .zip(n_row)
                .enumerate()
                .map(|(i, (g, n))| {
                    let value = n / g.norm_sqr();
                    if value.is_finite() && value > 0.0 && *n > 0.0 {
                        Ok(value)
                    } else {
                        Err(Error::NonPositiveNcr { subchannel: k, user: i, value })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            ncr.push(row);
        }
        Ok(Self { gains, noise_power, ncr })
    }

    /// Builds a snapshot with real unit-noise gains chosen so that the NCRs
    /// equal `ncr` exactly (`|h|^2 = 1 / ncr`). Handy for constructed tests.
    pub fn from_ncr(ncr: Vec<Vec<f64>>) -> Result<Self> {
        let gains = ncr.iter().map(|row| row.iter().map(|e| Complex64::new((1.0 / e).sqrt(), 0.0)).collect()).collect();
        let noise = ncr.iter().map(|row| vec![1.0; row.len()]).collect();
        let mut snap = Self::new(gains, noise)?;
        // Keep the requested values bit-exact rather than round-tripped.
        for (dst, src) in snap.ncr.iter_mut().zip(&ncr) {
            for (d, s) in dst.iter_mut().zip(src) {
                if !(s.is_finite() && *s > 0.0) {
                    return Err(Error::Precondition(format!("NCR {s} must be positive")));
                }
                *d = *s;
            }
        }
        Ok(snap)
    }

    pub fn n_subchannels(&self) -> usize {
        self.gains.len()
    }

    pub fn n_users(&self) -> usize {
        self.gains.first().map_or(0, Vec::len)
    }

    pub fn gains(&self) -> &[Vec<Complex64>] {
        &self.gains
    }

    pub fn noise_power(&self) -> &[Vec<f64>] {
        &self.noise_power
    }

    pub fn ncr(&self) -> &[Vec<f64>] {
        &self.ncr
    }

    pub fn ncr_row(&self, k: usize) -> &[f64] {
        &self.ncr[k]
    }

    pub fn check_dims(&self, config: &SystemConfig) -> Result<()> {
        if self.n_subchannels() != config.n_subchannels || self.n_users() != config.n_users {
            return Err(Error::DimensionMismatch(format!(
                "snapshot is {}x{}, config expects {}x{}",
                self.n_subchannels(),
                self.n_users(),
                config.n_subchannels,
                config.n_users
            )));
        }
        Ok(())
    }
}

/// Per-slot decision: transmit powers and assignment indicators, `[k][i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub power: Vec<Vec<f64>>,
    pub assigned: Vec<Vec<bool>>,
}

impl Allocation {
    pub fn zeros(n_subchannels: usize, n_users: usize) -> Self {
        Self { power: vec![vec![0.0; n_users]; n_subchannels], assigned: vec![vec![false; n_users]; n_subchannels] }
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().flatten().sum()
    }

    pub fn subchannel_power(&self, k: usize) -> f64 {
        self.power[k].iter().sum()
    }

    pub fn assigned_count(&self, k: usize) -> usize {
        self.assigned[k].iter().filter(|q| **q).count()
    }

    fn check_dims(&self, config: &SystemConfig) -> Result<()> {
        let ok = self.power.len() == config.n_subchannels
            && self.assigned.len() == config.n_subchannels
            && self.power.iter().all(|r| r.len() == config.n_users)
            && self.assigned.iter().all(|r| r.len() == config.n_users);
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "allocation does not match {}x{}",
                config.n_subchannels, config.n_users
            )))
        }
    }
}

/// Achieved rates in bits/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub per_user_rate: Vec<f64>,
    pub per_subchannel_per_user: Vec<Vec<f64>>,
    pub weighted_sum: f64,
}

/// `true` when user `a` (NCR `eta_a`) is decoded before user `b`, i.e. `a` is
/// the weaker of the two and suffers interference from `b`.
#[inline]
pub fn decoded_before(eta_a: f64, a: usize, eta_b: f64, b: usize) -> bool {
    eta_a > eta_b || (eta_a == eta_b && a < b)
}

/// Indices of users sorted by decreasing NCR (weakest first).
pub fn ncr_descending_order(ncr: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ncr.len()).collect();
    order.sort_by(|&a, &b| ncr[b].partial_cmp(&ncr[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    order
}

/// SIC rate of every user on subchannel `k` for the given allocation.
pub fn compute_subchannel_rate(
    config: &SystemConfig,
    snapshot: &ChannelSnapshot,
    alloc: &Allocation,
    k: usize,
) -> Result<Vec<f64>> {
    snapshot.check_dims(config)?;
    alloc.check_dims(config)?;
    if k >= config.n_subchannels {
        return Err(Error::DimensionMismatch(format!("subchannel {k} out of range")));
    }
    let eta = snapshot.ncr_row(k);
    for (i, e) in eta.iter().enumerate() {
        if !(e.is_finite() && *e > 0.0) {
            return Err(Error::NonPositiveNcr { subchannel: k, user: i, value: *e });
        }
    }
    Ok(subchannel_rates(config.subchannel_bandwidth_hz[k], eta, &alloc.power[k], &alloc.assigned[k]))
}

pub(crate) fn subchannel_rates(bandwidth: f64, eta: &[f64], power: &[f64], assigned: &[bool]) -> Vec<f64> {
    let n = eta.len();
    (0..n)
        .map(|i| {
            let own = if assigned[i] { power[i] } else { 0.0 };
            if own <= 0.0 {
                return 0.0;
            }
            let interference: f64 = (0..n)
                .filter(|&j| j != i && assigned[j] && decoded_before(eta[i], i, eta[j], j))
                .map(|j| power[j])
                .sum();
            bandwidth * (1.0 + own / (interference + eta[i])).log2()
        })
        .collect()
}

/// Rates over all subchannels; `weights` defaults to the configured weights.
pub fn compute_rates(
    config: &SystemConfig,
    snapshot: &ChannelSnapshot,
    alloc: &Allocation,
    weights: Option<&[f64]>,
) -> Result<RateReport> {
    let weights = weights.unwrap_or(&config.weights);
    if weights.len() != config.n_users {
        return Err(Error::DimensionMismatch(format!("{} weights for {} users", weights.len(), config.n_users)));
    }
    let per_subchannel_per_user = (0..config.n_subchannels)
        .map(|k| compute_subchannel_rate(config, snapshot, alloc, k))
        .collect::<Result<Vec<_>>>()?;
    let per_user_rate: Vec<f64> =
        (0..config.n_users).map(|i| per_subchannel_per_user.iter().map(|row| row[i]).sum()).collect();
    let weighted_sum = per_user_rate.iter().zip(weights).map(|(r, w)| r * w).sum();
    Ok(RateReport { per_user_rate, per_subchannel_per_user, weighted_sum })
}

/// A single violated constraint together with its numeric excess.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    TotalPower { total: f64, limit: f64, excess: f64 },
    SubchannelPower { subchannel: usize, total: f64, limit: f64, excess: f64 },
    SicCapacity { subchannel: usize, assigned: usize, capacity: usize },
    NegativePower { subchannel: usize, user: usize, power: f64 },
    PowerWithoutAssignment { subchannel: usize, user: usize, power: f64 },
    Dimension(String),
}

/// Lists every violated power-budget, SIC-capacity and consistency constraint.
pub fn validate_allocation(config: &SystemConfig, alloc: &Allocation) -> std::result::Result<(), Vec<Violation>> {
    if let Err(e) = alloc.check_dims(config) {
        return Err(vec![Violation::Dimension(e.to_string())]);
    }
    let tol = config.power_tolerance();
    let mut violations = Vec::new();

    let total = alloc.total_power();
    if total > config.p_max_watts + tol {
        violations.push(Violation::TotalPower { total, limit: config.p_max_watts, excess: total - config.p_max_watts });
    }
    for k in 0..config.n_subchannels {
        let row = alloc.subchannel_power(k);
        let limit = config.p_max_per_subchannel_watts[k];
        if row > limit + tol {
            violations.push(Violation::SubchannelPower { subchannel: k, total: row, limit, excess: row - limit });
        }
        let assigned = alloc.assigned_count(k);
        if assigned > config.sic_capacity {
            violations.push(Violation::SicCapacity { subchannel: k, assigned, capacity: config.sic_capacity });
        }
        for i in 0..config.n_users {
            let p = alloc.power[k][i];
            if p < -tol {
                violations.push(Violation::NegativePower { subchannel: k, user: i, power: p });
            }
            if p > 0.0 && !alloc.assigned[k][i] {
                violations.push(Violation::PowerWithoutAssignment { subchannel: k, user: i, power: p });
            }
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}
