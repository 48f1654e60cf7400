//! Run configuration: a versioned JSON document with `system`, `fading`,
//! `placement`, `scheduler` and `run` sections, plus named presets.
//!
//! Every section has defaults, so `{"schema_version": 1}` is a complete
//! configuration: the `equal-floors` cell without rate floors. Unknown fields
//! are rejected.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{FadingConfig, UserPlacement};
use crate::error::{Error, Result};
use crate::joint::JointOptions;
use crate::model::{RateUnit, SystemConfig};
use crate::scheduler::{Scheduler, SchedulingMode, StepSize};

pub const SCHEMA_VERSION: u32 = 1;

pub const PRESETS: &[&str] = &["equal-floors", "mixed-floors", "random-drop"];

/// Converts dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub n_users: usize,
    pub n_subchannels: usize,
    pub total_bandwidth_hz: f64,
    pub p_max_dbm: f64,
    /// Per-subchannel cap as a multiple of `P_max / K`.
    pub subchannel_cap_factor: f64,
    pub sic_capacity: usize,
    /// Defaults to all ones.
    pub weights: Option<Vec<f64>>,
    /// Defaults to all zeros.
    pub qos_min_rate: Option<Vec<f64>>,
    pub qos_unit: RateUnit,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            n_users: 10,
            n_subchannels: 10,
            total_bandwidth_hz: 5e6,
            p_max_dbm: 43.0,
            subchannel_cap_factor: 1.15,
            sic_capacity: 5,
            weights: None,
            qos_min_rate: None,
            qos_unit: RateUnit::BitsPerSecondPerHz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlacementSection {
    /// Uniform by area over the cell annulus, redrawn per trial.
    Uniform,
    /// User `i` at `spacing_m * i`.
    Linear {
        spacing_m: f64,
    },
    Fixed {
        distances_m: Vec<f64>,
    },
}

impl Default for PlacementSection {
    fn default() -> Self {
        Self::Linear { spacing_m: 30.0 }
    }
}

impl PlacementSection {
    pub fn realize<R: Rng + ?Sized>(
        &self,
        n_users: usize,
        fading: &FadingConfig,
        rng: &mut R,
    ) -> Result<UserPlacement> {
        let placement = match self {
            Self::Uniform => UserPlacement::uniform(n_users, fading, rng),
            Self::Linear { spacing_m } => UserPlacement::linear(n_users, *spacing_m),
            Self::Fixed { distances_m } => UserPlacement { distances_m: distances_m.clone() },
        };
        if placement.distances_m.len() != n_users {
            return Err(Error::InvalidConfig(format!(
                "placement lists {} users, system has {n_users}",
                placement.distances_m.len()
            )));
        }
        placement.validate(fading)?;
        Ok(placement)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerSection {
    pub mode: SchedulingMode,
    /// Multiplier step is `step_scale / t`.
    pub step_scale: f64,
    pub pf_tau: f64,
    pub joint: JointOptions,
}

impl Default for SchedulerSection {
    fn default() -> Self {
        Self { mode: SchedulingMode::Qos, step_scale: 1.0, pf_tau: 1000.0, joint: JointOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub slots: u64,
    pub trials: usize,
    /// Draw user weights uniformly from (0, 1] per trial instead of using
    /// `system.weights`.
    pub random_weights: bool,
    /// Keep one lambda sample every this many slots in the summary
    /// (0 picks a stride giving about 1000 samples).
    pub lambda_stride: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { seed: 1, slots: 50_000, trials: 3000, random_weights: false, lambda_stride: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub fading: FadingConfig,
    #[serde(default)]
    pub placement: PlacementSection,
    #[serde(default)]
    pub scheduler: SchedulerSection,
    #[serde(default)]
    pub run: RunSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            system: SystemSection::default(),
            fading: FadingConfig::default(),
            placement: PlacementSection::default(),
            scheduler: SchedulerSection::default(),
            run: RunSection::default(),
        }
    }
}

impl RunConfig {
    /// Named configuration bundles:
    ///
    /// * `equal-floors`: ten users at 30 m spacing, ten subchannels, equal
    ///   weights, every user asking for 2 b/s/Hz.
    /// * `mixed-floors`: same cell, floors of 3.5 b/s/Hz for users
    ///   1, 2, 5, 6, 9, 10 and 1 b/s/Hz for users 3, 4, 7, 8.
    /// * `random-drop`: single-slot campaigns with users dropped
    ///   uniformly in the cell and random weights, no rate floors.
    pub fn preset(name: &str) -> Result<Self> {
        let base = Self::default();
        match name {
            "equal-floors" => {
                Ok(Self { system: SystemSection { qos_min_rate: Some(vec![2.0; 10]), ..base.system }, ..base })
            }
            "mixed-floors" => Ok(Self {
                system: SystemSection {
                    qos_min_rate: Some(vec![3.5, 3.5, 1.0, 1.0, 3.5, 3.5, 1.0, 1.0, 3.5, 3.5]),
                    ..base.system
                },
                ..base
            }),
            "random-drop" => Ok(Self {
                placement: PlacementSection::Uniform,
                scheduler: SchedulerSection { mode: SchedulingMode::NoQos, ..base.scheduler },
                run: RunSection { random_weights: true, ..base.run },
                ..base
            }),
            other => {
                Err(Error::InvalidConfig(format!("unknown preset {other:?}; known presets: {}", PRESETS.join(", "))))
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("config: {e}")))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Builds and validates the solver configuration.
    pub fn system_config(&self) -> Result<SystemConfig> {
        let s = &self.system;
        if s.n_users == 0 || s.n_subchannels == 0 {
            return Err(Error::InvalidConfig("n_users and n_subchannels must be positive".into()));
        }
        let mut config = SystemConfig::uniform(
            s.n_users,
            s.n_subchannels,
            s.total_bandwidth_hz,
            dbm_to_watts(s.p_max_dbm),
            s.subchannel_cap_factor,
            s.sic_capacity,
        );
        if let Some(w) = &s.weights {
            config = config.with_weights(w.clone());
        }
        if let Some(r) = &s.qos_min_rate {
            config = config.with_qos(r.clone(), s.qos_unit);
        } else {
            config.qos_unit = s.qos_unit;
        }
        config.validate()?;
        self.fading.validate()?;
        Ok(config)
    }

    pub fn scheduler(&self) -> Result<Scheduler> {
        let s = &self.scheduler;
        if !(s.step_scale > 0.0 && s.step_scale.is_finite()) {
            return Err(Error::InvalidConfig(format!("step_scale {} must be positive", s.step_scale)));
        }
        let step = if s.step_scale == 1.0 { StepSize::Harmonic } else { StepSize::Scaled(s.step_scale) };
        Ok(Scheduler { mode: s.mode, step, joint: s.joint })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn minimal_document_is_the_cell_without_floors() {
        let cfg = RunConfig::from_json(r#"{"schema_version": 1}"#).unwrap();
        let mut preset = RunConfig::preset("equal-floors").unwrap();
        preset.system.qos_min_rate = None;
        assert_eq!(cfg, preset);
        let sys = cfg.system_config().unwrap();
        assert_relative_eq!(sys.p_max_watts, 19.952_623_149_688_8, epsilon = 1e-9);
        assert_eq!(sys.subchannel_bandwidth_hz, vec![5e5; 10]);
        assert_relative_eq!(sys.p_max_per_subchannel_watts[0], 1.15 * sys.p_max_watts / 10.0);
    }

    #[test]
    fn presets_round_trip_through_json() {
        for name in PRESETS {
            let cfg = RunConfig::preset(name).unwrap();
            let back = RunConfig::from_json(&cfg.to_json().unwrap()).unwrap();
            assert_eq!(back, cfg);
            cfg.system_config().unwrap();
        }
        assert!(RunConfig::preset("nope").is_err());
    }

    #[test]
    fn malformed_documents_are_invalid() {
        for text in [
            "{",
            r#"{"schema_version": 2}"#,
            r#"{"schema_version": 1, "system": {"n_userz": 3}}"#,
            r#"{"schema_version": 1, "placement": {"kind": "spiral"}}"#,
        ] {
            assert!(matches!(RunConfig::from_json(text), Err(Error::InvalidConfig(_))), "{text}");
        }
    }

    #[test]
    fn infeasible_systems_are_flagged() {
        let mut cfg = RunConfig::default();
        cfg.system.sic_capacity = 1;
        assert!(matches!(cfg.system_config(), Err(Error::Infeasible(_))));
        let mut cfg = RunConfig::default();
        cfg.system.subchannel_cap_factor = 0.9;
        assert!(matches!(cfg.system_config(), Err(Error::Infeasible(_))));
    }

    #[test]
    fn placement_variants() {
        let fading = FadingConfig::default();
        let mut rng = rand::rng();
        let linear = PlacementSection::default().realize(10, &fading, &mut rng).unwrap();
        assert_eq!(linear.distances_m[9], 300.0);
        assert!(PlacementSection::Fixed { distances_m: vec![40.0] }.realize(2, &fading, &mut rng).is_err());
        assert!(PlacementSection::Uniform.realize(5, &fading, &mut rng).is_ok());
    }
}
