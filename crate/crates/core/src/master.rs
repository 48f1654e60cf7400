//! Distribution of the total power budget across subchannels.
//!
//! Once each subchannel's user pair is fixed, its best weighted rate as a
//! function of the subchannel budget `P` has a closed form: a single
//! logarithm, or (when the last-SIC user carries the smaller weight) two
//! logarithmic branches glued at `P = C4` with matching value and slope. The
//! resulting concave problem is solved by KKT water-filling, where every
//! subchannel level is an increasing piecewise-linear function of a common
//! water level `mu`, found by bisection.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::subchannel::SubchannelSolution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Companion {
    pub weight: f64,
    pub ncr: f64,
}

/// Constants of the two-branch form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Breakpoint {
    /// Additive offset of the companion branch.
    pub c3: f64,
    /// Budget at which the companion starts receiving power.
    pub c4: f64,
    /// Water level at which the active branch switches.
    pub c5: f64,
}

/// Closed-form optimal value of one subchannel as a function of its budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValueFunction {
    pub bandwidth: f64,
    pub w_phi: f64,
    pub eta_phi: f64,
    pub companion: Option<Companion>,
    pub breakpoint: Option<Breakpoint>,
}

impl ValueFunction {
    pub fn single_user(w_phi: f64, eta_phi: f64, bandwidth: f64) -> Self {
        Self { bandwidth, w_phi, eta_phi, companion: None, breakpoint: None }
    }

    /// Value function of the pair (`psi` decoded first, `phi` last).
    pub fn pair(w_psi: f64, w_phi: f64, eta_psi: f64, eta_phi: f64, bandwidth: f64) -> Result<Self> {
        if !(eta_phi < eta_psi) {
            return Err(Error::Precondition(format!(
                "last-SIC user must have the smaller NCR (eta_phi = {eta_phi}, eta_psi = {eta_psi})"
            )));
        }
        let ratio = w_phi / w_psi;
        if ratio <= eta_phi / eta_psi {
            return Err(Error::Precondition("pair is contradictory: the last-SIC user would receive no power".into()));
        }
        let breakpoint = (ratio < 1.0).then(|| {
            let dw = w_phi - w_psi;
            let deta = eta_phi - eta_psi;
            let c3 = w_psi * bandwidth * (dw / deta * eta_psi / w_psi).log2()
                + w_phi * bandwidth * (deta / dw * w_phi / eta_phi).log2();
            let c4 = (w_psi * eta_phi - w_phi * eta_psi) / dw;
            let c5 = deta / (bandwidth * dw);
            Breakpoint { c3, c4, c5 }
        });
        Ok(Self { bandwidth, w_phi, eta_phi, companion: Some(Companion { weight: w_psi, ncr: eta_psi }), breakpoint })
    }

    pub fn is_single_user(&self) -> bool {
        self.companion.is_none()
    }

    /// `w_phi * B * log2(1 + P / eta_phi)`: all power to the last-SIC user.
    pub fn last_sic_branch(&self, p_bar: f64) -> f64 {
        self.w_phi * self.bandwidth * (p_bar / self.eta_phi).ln_1p() / LN_2
    }

    /// `w_psi * B * log2(1 + P / eta_psi) + C3`; only defined with a breakpoint.
    pub fn companion_branch(&self, p_bar: f64) -> Option<f64> {
        let (c, bp) = (self.companion?, self.breakpoint?);
        Some(c.weight * self.bandwidth * (p_bar / c.ncr).ln_1p() / LN_2 + bp.c3)
    }

    pub fn last_sic_branch_derivative(&self, p_bar: f64) -> f64 {
        self.w_phi * self.bandwidth / (LN_2 * (p_bar + self.eta_phi))
    }

    pub fn companion_branch_derivative(&self, p_bar: f64) -> Option<f64> {
        let c = self.companion?;
        self.breakpoint?;
        Some(c.weight * self.bandwidth / (LN_2 * (p_bar + c.ncr)))
    }

    fn on_companion_branch(&self, p_bar: f64) -> bool {
        self.breakpoint.is_some_and(|bp| p_bar >= bp.c4)
    }

    /// Subchannel budget selected by water level `mu`, before clamping.
    fn level(&self, mu: f64) -> f64 {
        match (self.companion, self.breakpoint) {
            (Some(c), Some(bp)) if mu > bp.c5 => mu * c.weight * self.bandwidth - c.ncr,
            _ => mu * self.w_phi * self.bandwidth - self.eta_phi,
        }
    }

    fn smallest_weight(&self) -> f64 {
        self.companion.map_or(self.w_phi, |c| c.weight.min(self.w_phi))
    }

    fn largest_ncr(&self) -> f64 {
        self.companion.map_or(self.eta_phi, |c| c.ncr.max(self.eta_phi))
    }
}

/// Value function of the pair selected on a subchannel.
pub fn build_value_function(
    solution: &SubchannelSolution,
    effective_weights: &[f64],
    ncr_row: &[f64],
    bandwidth: f64,
) -> Result<ValueFunction> {
    let phi = solution.last_sic_user;
    match solution.companion {
        None => Ok(ValueFunction::single_user(effective_weights[phi], ncr_row[phi], bandwidth)),
        Some(psi) => {
            ValueFunction::pair(effective_weights[psi], effective_weights[phi], ncr_row[psi], ncr_row[phi], bandwidth)
        }
    }
}

pub fn evaluate_value(vf: &ValueFunction, p_bar: f64) -> Result<f64> {
    if !(p_bar >= 0.0) {
        return Err(Error::Precondition(format!("budget {p_bar} must be nonnegative")));
    }
    Ok(if vf.on_companion_branch(p_bar) {
        vf.companion_branch(p_bar).expect("breakpoint implies companion")
    } else {
        vf.last_sic_branch(p_bar)
    })
}

pub fn evaluate_derivative(vf: &ValueFunction, p_bar: f64) -> Result<f64> {
    if !(p_bar >= 0.0) {
        return Err(Error::Precondition(format!("budget {p_bar} must be nonnegative")));
    }
    Ok(if vf.on_companion_branch(p_bar) {
        vf.companion_branch_derivative(p_bar).expect("breakpoint implies companion")
    } else {
        vf.last_sic_branch_derivative(p_bar)
    })
}

/// Subchannel budgets induced by water level `mu`, clamped to `[0, cap_k]`.
pub fn waterfill_at(vfs: &[ValueFunction], mu: f64, p_max_per_subchannel: &[f64]) -> Vec<f64> {
    vfs.iter().zip(p_max_per_subchannel).map(|(vf, cap)| vf.level(mu).clamp(0.0, *cap)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MasterSolution {
    pub p_bars: Vec<f64>,
    pub mu_star: f64,
    pub total_value: f64,
    pub bisection_steps: u32,
}

const MAX_BISECTION_STEPS: u32 = 200;
const MAX_DOUBLINGS: u32 = 200;

/// Finds the water level that spends exactly `p_max`.
///
/// `tolerance` is relative to `p_max`: the search stops once
/// `|sum(P_k) - p_max| <= tolerance * p_max` or the bracket has shrunk to
/// `1e-12 * mu_hi`.
pub fn solve_master(
    vfs: &[ValueFunction],
    p_max: f64,
    p_max_per_subchannel: &[f64],
    tolerance: f64,
) -> Result<MasterSolution> {
    if vfs.len() != p_max_per_subchannel.len() || vfs.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{} value functions for {} subchannel caps",
            vfs.len(),
            p_max_per_subchannel.len()
        )));
    }
    if !(p_max > 0.0) {
        return Err(Error::Precondition(format!("total budget {p_max} must be positive")));
    }
    let cap_sum: f64 = p_max_per_subchannel.iter().sum();
    if cap_sum < p_max {
        return Err(Error::Infeasible(format!("subchannel caps sum to {cap_sum} W < {p_max} W")));
    }

    let excess = |mu: f64| -> f64 { waterfill_at(vfs, mu, p_max_per_subchannel).iter().sum::<f64>() - p_max };
    let target = tolerance * p_max;

    let min_wb = vfs.iter().map(|v| v.smallest_weight() * v.bandwidth).fold(f64::INFINITY, f64::min);
    let max_eta = vfs.iter().map(ValueFunction::largest_ncr).fold(0.0, f64::max);
    let mut hi = (p_max + max_eta) / min_wb;
    let mut f_hi = excess(hi);
    let mut doublings = 0;
    while f_hi < 0.0 {
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::BracketFailure { doublings: MAX_DOUBLINGS });
        }
        hi *= 2.0;
        f_hi = excess(hi);
    }
    let mut lo = 0.0;
    let mut f_lo = excess(lo);

    let mut steps = 0;
    let mut mu = hi;
    let mut f_mu = f_hi;
    while steps < MAX_BISECTION_STEPS && f_mu.abs() > target {
        if hi - lo <= 1e-12 * hi {
            break;
        }
        steps += 1;
        let mid = 0.5 * (lo + hi);
        let f_mid = excess(mid);
        if f_mid < 0.0 {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
        mu = mid;
        f_mu = f_mid;
    }
    if f_mu.abs() > target && f_hi > f_lo {
        // The root function is piecewise linear; interpolate inside the
        // final bracket.
        let secant = lo - f_lo * (hi - lo) / (f_hi - f_lo);
        let f_secant = excess(secant);
        for (m, f) in [(lo, f_lo), (hi, f_hi), (secant, f_secant)] {
            if f.abs() < f_mu.abs() {
                mu = m;
                f_mu = f;
            }
        }
    }

    let p_bars = waterfill_at(vfs, mu, p_max_per_subchannel);
    let total_value = vfs.iter().zip(&p_bars).map(|(vf, p)| evaluate_value(vf, *p)).sum::<Result<f64>>()?;
    Ok(MasterSolution { p_bars, mu_star: mu, total_value, bisection_steps: steps })
}
