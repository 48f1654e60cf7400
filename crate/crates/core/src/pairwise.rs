//! Closed-form power split between the last-decoded user of a subchannel and
//! its single companion.
//!
//! The last-SIC user `phi` has the smaller NCR and sees no interference; the
//! companion `psi` is decoded first and treats `phi`'s signal as noise. With
//! the whole budget `p_bar` spent, the weighted two-user rate is unimodal in
//! `p_phi`, and its maximiser has three regimes determined by the weight
//! ratio `w_phi / w_psi` against `C1 = eta_phi / eta_psi` and
//! `C2 = (p_bar + eta_phi) / (p_bar + eta_psi)`.

use std::f64::consts::LOG2_E;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitRegime {
    /// `w_phi / w_psi <= C1`: the last-SIC user would get no power, so the
    /// hypothesis that it is the last-SIC user is rejected.
    Contradictory,
    /// `w_phi / w_psi > C2`: the companion is starved, `p_phi = p_bar`.
    BoundaryAllToPhi,
    Interior,
}

/// Optimal two-user split for one last-SIC hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairSplit {
    pub p_phi: f64,
    pub p_psi: f64,
    /// Weighted rate of the split; `None` stands for minus infinity
    /// (contradictory hypothesis) and never enters arithmetic.
    pub value: Option<f64>,
    pub regime: SplitRegime,
}

#[inline]
fn log2_1p(x: f64) -> f64 {
    x.ln_1p() * LOG2_E
}

/// Objective of the two-user problem at a given split.
#[inline]
pub(crate) fn pair_objective(
    w_psi: f64,
    w_phi: f64,
    eta_psi: f64,
    eta_phi: f64,
    bandwidth: f64,
    p_psi: f64,
    p_phi: f64,
) -> f64 {
    w_psi * bandwidth * log2_1p(p_psi / (p_phi + eta_psi)) + w_phi * bandwidth * log2_1p(p_phi / eta_phi)
}

pub fn two_user_split(
    w_psi: f64,
    w_phi: f64,
    eta_psi: f64,
    eta_phi: f64,
    bandwidth: f64,
    p_bar: f64,
) -> Result<PairSplit> {
    if !(eta_phi < eta_psi) {
        return Err(Error::Precondition(format!(
            "last-SIC user must have the smaller NCR (eta_phi = {eta_phi}, eta_psi = {eta_psi})"
        )));
    }
    if !(p_bar >= 0.0) {
        return Err(Error::Precondition(format!("subchannel budget {p_bar} must be nonnegative")));
    }
    if !(w_psi > 0.0 && w_phi > 0.0 && eta_phi > 0.0 && bandwidth > 0.0) {
        return Err(Error::Precondition("weights, NCRs and bandwidth must be positive".into()));
    }

    let ratio = w_phi / w_psi;
    let c1 = eta_phi / eta_psi;
    if ratio <= c1 {
        return Ok(PairSplit { p_phi: 0.0, p_psi: p_bar, value: None, regime: SplitRegime::Contradictory });
    }
    let c2 = (p_bar + eta_phi) / (p_bar + eta_psi);
    let (p_phi, regime) = if ratio > c2 {
        (p_bar, SplitRegime::BoundaryAllToPhi)
    } else {
        let interior = (w_psi * eta_phi - w_phi * eta_psi) / (w_phi - w_psi);
        (interior.clamp(0.0, p_bar), SplitRegime::Interior)
    };
    let p_psi = p_bar - p_phi;
    let value = pair_objective(w_psi, w_phi, eta_psi, eta_phi, bandwidth, p_psi, p_phi);
    Ok(PairSplit { p_phi, p_psi, value: Some(value), regime })
}

/// Value of serving the last-SIC user alone with the whole budget; used when
/// no user with a larger NCR exists to act as companion.
pub fn single_user_value(w_phi: f64, eta_phi: f64, bandwidth: f64, p_bar: f64) -> Result<f64> {
    if !(p_bar >= 0.0) {
        return Err(Error::Precondition(format!("subchannel budget {p_bar} must be nonnegative")));
    }
    Ok(w_phi * bandwidth * log2_1p(p_bar / eta_phi))
}
