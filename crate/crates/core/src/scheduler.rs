//! Online opportunistic scheduling over a horizon of slots.
//!
//! Every slot solves the instantaneous weighted-sum-rate problem with
//! effective weights, then updates the per-user state:
//!
//! * `Qos`: weights `w_i + lambda_i`; afterwards
//!   `lambda_i <- max(0, lambda_i - zeta_t (R_i - R_min,i))`.
//! * `Pf`: weights `1 / R_ema,i`; afterwards
//!   `R_ema,i <- (1 - 1/tau) R_ema,i + R_i / tau`. The first slot uses the
//!   configured weights and seeds the average with its own rates.
//! * `NoQos`: weights `w_i`, multipliers stay at zero.
//!
//! Rates handed to the multiplier and average updates are in the QoS unit of
//! the configuration (b/s/Hz of total bandwidth by default). The solver
//! itself works in b/s; the scale does not change its argmax.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSource, SlotChannel};
use crate::error::{Error, Result};
use crate::joint::{joint_sapa_lcc, JointOptions};
use crate::model::{compute_rates, Allocation, ChannelSnapshot, RateReport, SystemConfig};

/// Floor applied when seeding the proportional-fair average.
pub const PF_EMA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SchedulingMode {
    #[default]
    Qos,
    Pf,
    NoQos,
}

impl FromStr for SchedulingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qos" => Ok(Self::Qos),
            "pf" => Ok(Self::Pf),
            "no_qos" => Ok(Self::NoQos),
            other => Err(Error::InvalidConfig(format!("unknown mode {other:?}, expected qos, pf or no_qos"))),
        }
    }
}

impl fmt::Display for SchedulingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Qos => "qos",
            Self::Pf => "pf",
            Self::NoQos => "no_qos",
        })
    }
}

/// Multiplier step size as a function of the 1-based slot index.
#[derive(Clone)]
pub enum StepSize {
    /// `1 / t`
    Harmonic,
    /// `c / t`
    Scaled(f64),
    Custom(Arc<dyn Fn(u64) -> f64 + Send + Sync>),
}

impl Default for StepSize {
    fn default() -> Self {
        Self::Harmonic
    }
}

impl fmt::Debug for StepSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Harmonic => f.write_str("Harmonic"),
            Self::Scaled(c) => write!(f, "Scaled({c})"),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl StepSize {
    pub fn custom(f: impl Fn(u64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Custom(Arc::new(f))
    }

    pub fn at(&self, slot: u64) -> f64 {
        match self {
            Self::Harmonic => 1.0 / slot as f64,
            Self::Scaled(c) => c / slot as f64,
            Self::Custom(f) => f(slot),
        }
    }
}

/// `max(0, lambda - step * (rate - min_rate))`
pub fn multiplier_update(lambda: f64, step: f64, rate: f64, min_rate: f64) -> f64 {
    (lambda - step * (rate - min_rate)).max(0.0)
}

/// Exponential moving average with window `tau`.
pub fn ema_update(ema: f64, rate: f64, tau: f64) -> f64 {
    (1.0 - 1.0 / tau) * ema + rate / tau
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerState {
    pub lambdas: Vec<f64>,
    /// Slots completed so far; the next slot has index `slot + 1`.
    pub slot: u64,
    /// Running sum of achieved rates in the QoS unit.
    pub cumulative_rates: Vec<f64>,
    /// `None` until the first proportional-fair slot has run.
    pub pf_ema: Option<Vec<f64>>,
    pub pf_tau: f64,
}

impl SchedulerState {
    pub fn new(n_users: usize) -> Self {
        Self {
            lambdas: vec![0.0; n_users],
            slot: 0,
            cumulative_rates: vec![0.0; n_users],
            pf_ema: None,
            pf_tau: 1000.0,
        }
    }

    pub fn with_lambdas(mut self, lambdas: Vec<f64>) -> Self {
        self.lambdas = lambdas;
        self
    }

    /// Average rate per user over all completed slots (QoS unit).
    pub fn average_rates(&self) -> Vec<f64> {
        let t = self.slot.max(1) as f64;
        self.cumulative_rates.iter().map(|r| r / t).collect()
    }

    /// Largest multiplier; grows without bound when a rate floor is
    /// unreachable.
    pub fn max_lambda(&self) -> f64 {
        self.lambdas.iter().copied().fold(0.0, f64::max)
    }

    fn check(&self, config: &SystemConfig) -> Result<()> {
        let n = config.n_users;
        if self.lambdas.len() != n || self.cumulative_rates.len() != n {
            return Err(Error::State(format!("state sized for {} users, config has {n}", self.lambdas.len())));
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
            return Err(Error::State(format!("multiplier {l} is not a finite nonnegative value")));
        }
        if !(self.pf_tau >= 1.0) {
            return Err(Error::State(format!("pf_tau {} must be at least 1", self.pf_tau)));
        }
        if let Some(ema) = &self.pf_ema {
            if ema.len() != n {
                return Err(Error::State("pf_ema has the wrong length".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotResult {
    /// 1-based slot index.
    pub slot: u64,
    pub allocation: Allocation,
    /// Achieved rates on the actual channel, in b/s.
    pub rates: RateReport,
    pub rates_qos_unit: Vec<f64>,
    pub effective_weights: Vec<f64>,
    pub lambdas_after: Vec<f64>,
    /// Weighted sum rate the solver expected on the channel it planned on.
    pub planned_weighted_sum_rate: f64,
    pub joint_iterations: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Scheduler {
    pub mode: SchedulingMode,
    pub step: StepSize,
    pub joint: JointOptions,
}

impl Scheduler {
    pub fn new(mode: SchedulingMode) -> Self {
        Self { mode, ..Self::default() }
    }

    fn effective_weights(&self, config: &SystemConfig, state: &SchedulerState) -> Result<Vec<f64>> {
        Ok(match self.mode {
            SchedulingMode::Qos => config.weights.iter().zip(&state.lambdas).map(|(w, l)| w + l).collect(),
            SchedulingMode::NoQos => config.weights.clone(),
            SchedulingMode::Pf => match &state.pf_ema {
                None => config.weights.clone(),
                Some(ema) => {
                    if let Some((i, e)) = ema.iter().enumerate().find(|(_, e)| !(**e > 0.0)) {
                        return Err(Error::State(format!("average rate of user {i} is {e}, must be positive")));
                    }
                    ema.iter().map(|e| 1.0 / e).collect()
                }
            },
        })
    }

    /// Runs one slot: plan on `channel.observed`, score on `channel.actual`,
    /// then advance `state`.
    pub fn step(&self, config: &SystemConfig, channel: &SlotChannel, state: &mut SchedulerState) -> Result<SlotResult> {
        state.check(config)?;
        channel.actual.check_dims(config)?;
        let weights = self.effective_weights(config, state)?;
        let plan = joint_sapa_lcc(config, &channel.observed, &weights, &self.joint)?;
        let rates = compute_rates(config, &channel.actual, &plan.allocation, Some(&weights))?;
        let rates_qos: Vec<f64> = rates.per_user_rate.iter().map(|r| config.to_qos_unit(*r)).collect();

        let t = state.slot + 1;
        match self.mode {
            SchedulingMode::Qos => {
                let zeta = self.step.at(t);
                if !(zeta >= 0.0 && zeta.is_finite()) {
                    return Err(Error::State(format!("step size {zeta} at slot {t} is invalid")));
                }
                for ((l, r), r_min) in state.lambdas.iter_mut().zip(&rates_qos).zip(&config.qos_min_rate) {
                    *l = multiplier_update(*l, zeta, *r, *r_min);
                }
            }
            SchedulingMode::Pf => {
                let tau = state.pf_tau;
                state.pf_ema = Some(match state.pf_ema.take() {
                    None => rates_qos.iter().map(|r| r.max(PF_EMA_FLOOR)).collect(),
                    Some(ema) => ema.iter().zip(&rates_qos).map(|(e, r)| ema_update(*e, *r, tau)).collect(),
                });
            }
            SchedulingMode::NoQos => {}
        }
        for (c, r) in state.cumulative_rates.iter_mut().zip(&rates_qos) {
            *c += r;
        }
        state.slot = t;

        Ok(SlotResult {
            slot: t,
            allocation: plan.allocation,
            rates,
            rates_qos_unit: rates_qos,
            effective_weights: weights,
            lambdas_after: state.lambdas.clone(),
            planned_weighted_sum_rate: plan.weighted_sum_rate,
            joint_iterations: plan.iterations,
        })
    }
}

/// One slot with default solver options; `observed` is what the scheduler
/// plans on, `actual` is what the transmission experiences.
pub fn schedule_slot(
    config: &SystemConfig,
    observed: &ChannelSnapshot,
    actual: &ChannelSnapshot,
    state: &mut SchedulerState,
    mode: SchedulingMode,
) -> Result<SlotResult> {
    let channel = SlotChannel { observed: observed.clone(), actual: actual.clone() };
    Scheduler::new(mode).step(config, &channel, state)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorizonReport {
    pub requested_slots: u64,
    pub completed_slots: u64,
    /// True when the channel source ran out before `requested_slots`.
    pub partial: bool,
    /// Per-user average over the slots of this run (QoS unit).
    pub average_rates: Vec<f64>,
    pub final_lambdas: Vec<f64>,
    pub max_lambda: f64,
}

/// Runs up to `slots` slots, handing every result to `observer`.
pub fn run_horizon_with<S, F>(
    config: &SystemConfig,
    source: &mut S,
    state: &mut SchedulerState,
    scheduler: &Scheduler,
    slots: u64,
    mut observer: F,
) -> Result<HorizonReport>
where
    S: ChannelSource + ?Sized,
    F: FnMut(&SlotResult) -> Result<()>,
{
    if slots == 0 {
        return Err(Error::Precondition("horizon must have at least one slot".into()));
    }
    let mut sums = vec![0.0; config.n_users];
    let mut completed = 0;
    while completed < slots {
        let Some(channel) = source.next_slot()? else { break };
        let result = scheduler.step(config, &channel, state)?;
        for (s, r) in sums.iter_mut().zip(&result.rates_qos_unit) {
            *s += r;
        }
        observer(&result)?;
        completed += 1;
    }
    let denom = completed.max(1) as f64;
    Ok(HorizonReport {
        requested_slots: slots,
        completed_slots: completed,
        partial: completed < slots,
        average_rates: sums.iter().map(|s| s / denom).collect(),
        final_lambdas: state.lambdas.clone(),
        max_lambda: state.max_lambda(),
    })
}

/// [`run_horizon_with`] that keeps every slot result in memory.
pub fn run_horizon<S: ChannelSource + ?Sized>(
    config: &SystemConfig,
    source: &mut S,
    state: &mut SchedulerState,
    scheduler: &Scheduler,
    slots: u64,
) -> Result<(Vec<SlotResult>, HorizonReport)> {
    let mut results = Vec::new();
    let report = run_horizon_with(config, source, state, scheduler, slots, |r| {
        results.push(r.clone());
        Ok(())
    })?;
    Ok((results, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::StaticChannel;
    use crate::model::RateUnit;
    use approx::assert_relative_eq;

    #[test]
    fn multiplier_arithmetic() {
        assert_relative_eq!(multiplier_update(0.5, 0.1, 3.0, 2.0), 0.4, epsilon = 1e-15);
        assert_relative_eq!(multiplier_update(0.05, 0.1, 1.0, 2.0), 0.15, epsilon = 1e-15);
        assert_eq!(multiplier_update(0.05, 0.1, 3.0, 2.0), 0.0);
    }

    #[test]
    fn ema_arithmetic() {
        assert_relative_eq!(ema_update(1.0, 2.0, 1000.0), 1.001, epsilon = 1e-15);
    }

    #[test]
    fn harmonic_step_partial_sums() {
        let s = StepSize::Harmonic;
        let n = 100_000u64;
        let sum: f64 = (1..=n).map(|t| s.at(t)).sum();
        let sq: f64 = (1..=n).map(|t| s.at(t).powi(2)).sum();
        // divergent: grows like ln n; square-summable: bounded by pi^2 / 6
        assert!(sum > (n as f64).ln());
        assert!(sq < std::f64::consts::PI.powi(2) / 6.0);
        assert!((1..=n).all(|t| s.at(t) > 0.0));
        assert_eq!(StepSize::Scaled(2.0).at(4), 0.5);
        assert_eq!(StepSize::custom(|t| 1.0 / (t as f64).sqrt()).at(4), 0.5);
    }

    #[test]
    fn mode_parsing() {
        for m in [SchedulingMode::Qos, SchedulingMode::Pf, SchedulingMode::NoQos] {
            assert_eq!(m.to_string().parse::<SchedulingMode>().unwrap(), m);
        }
        assert!("fair".parse::<SchedulingMode>().is_err());
    }

    fn two_user_system() -> (SystemConfig, ChannelSnapshot) {
        let mut config =
            SystemConfig::uniform(2, 1, 1.0, 1.0, 1.0, 2).with_qos(vec![1.0, 2.0], RateUnit::BitsPerSecondPerHz);
        config.subchannel_bandwidth_hz = vec![1.0];
        (config, ChannelSnapshot::from_ncr(vec![vec![1e-6, 1.0]]).unwrap())
    }

    #[test]
    fn single_slot_average_equals_slot_rates() {
        let (config, snap) = two_user_system();
        let mut state = SchedulerState::new(2);
        let (results, report) =
            run_horizon(&config, &mut StaticChannel::new(snap), &mut state, &Scheduler::new(SchedulingMode::Qos), 1)
                .unwrap();
        assert_eq!(report.completed_slots, 1);
        assert_eq!(report.average_rates, results[0].rates_qos_unit);
    }

    #[test]
    fn static_channel_without_qos_repeats_itself() {
        let (config, snap) = two_user_system();
        let mut state = SchedulerState::new(2);
        let (results, report) =
            run_horizon(&config, &mut StaticChannel::new(snap), &mut state, &Scheduler::new(SchedulingMode::NoQos), 20)
                .unwrap();
        assert!(results.iter().all(|r| r.allocation == results[0].allocation));
        for (a, r) in report.average_rates.iter().zip(&results[0].rates_qos_unit) {
            assert_relative_eq!(*a, *r, max_relative = 1e-14);
        }
        assert_eq!(state.lambdas, vec![0.0, 0.0]);
    }

    #[test]
    fn exhausted_source_reports_partial_horizon() {
        let (config, snap) = two_user_system();
        let mut state = SchedulerState::new(2);
        let mut src = StaticChannel::limited(snap, 3);
        let (_, report) = run_horizon(&config, &mut src, &mut state, &Scheduler::new(SchedulingMode::Qos), 10).unwrap();
        assert!(report.partial);
        assert_eq!(report.completed_slots, 3);
        assert_eq!(state.slot, 3);
    }

    #[test]
    fn unreachable_floor_raises_multiplier_and_slack_one_decays() {
        let (config, snap) = two_user_system();
        let mut state = SchedulerState::new(2).with_lambdas(vec![5.0, 0.0]);
        let mut prev = 0.0;
        let mut src = StaticChannel::new(snap);
        run_horizon_with(&config, &mut src, &mut state, &Scheduler::new(SchedulingMode::Qos), 200, |r| {
            assert!(r.lambdas_after[1] >= prev);
            prev = r.lambdas_after[1];
            Ok(())
        })
        .unwrap();
        assert!(state.lambdas[0] < 1e-3);
        assert!(state.max_lambda() > 5.0);
    }

    #[test]
    fn pf_bootstraps_then_uses_reciprocal_average() {
        let (config, snap) = two_user_system();
        let mut state = SchedulerState::new(2);
        let scheduler = Scheduler::new(SchedulingMode::Pf);
        let ch = SlotChannel::perfect(snap);
        let first = scheduler.step(&config, &ch, &mut state).unwrap();
        assert_eq!(first.effective_weights, config.weights);
        let ema = state.pf_ema.clone().unwrap();
        for (e, r) in ema.iter().zip(&first.rates_qos_unit) {
            assert_eq!(*e, r.max(PF_EMA_FLOOR));
        }
        let second = scheduler.step(&config, &ch, &mut state).unwrap();
        assert_relative_eq!(second.effective_weights[1], 1.0 / ema[1]);

        state.pf_ema = Some(vec![0.0, 1.0]);
        assert!(matches!(scheduler.step(&config, &ch, &mut state), Err(Error::State(_))));
    }

    #[test]
    fn mismatched_state_is_rejected() {
        let (config, snap) = two_user_system();
        let mut state = SchedulerState::new(3);
        assert!(matches!(schedule_slot(&config, &snap, &snap, &mut state, SchedulingMode::Qos), Err(Error::State(_))));
        assert!(matches!(
            run_horizon(&config, &mut StaticChannel::new(snap), &mut SchedulerState::new(2), &Scheduler::default(), 0),
            Err(Error::Precondition(_))
        ));
    }
}
