//! Statistical downlink channel: Hata urban path loss, log-normal shadowing,
//! Rayleigh block fading, thermal noise, user placement and an additive
//! complex-Gaussian CSI error model. Also snapshot replay from CSV.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChannelSnapshot, SystemConfig};

/// When the shadowing term is redrawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ShadowingMode {
    /// New draw per user in every slot, shared by all subchannels.
    #[default]
    PerSlot,
    /// One draw per user for the lifetime of the generator.
    PerTrial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SmallScale {
    #[default]
    Rayleigh,
    /// Replace the fading by its mean power (unit gain); for validation.
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FadingConfig {
    pub carrier_freq_mhz: f64,
    pub bs_antenna_height_m: f64,
    pub user_antenna_height_m: f64,
    pub bs_antenna_gain_db: f64,
    pub user_antenna_gain_db: f64,
    pub shadowing_std_db: f64,
    pub noise_psd_dbm_per_hz: f64,
    pub cell_radius_m: f64,
    pub min_distance_m: f64,
    /// Variance scale of the CSI error; zero means perfect CSI.
    pub csi_error_variance: f64,
    pub seed: u64,
    pub shadowing: ShadowingMode,
    pub small_scale: SmallScale,
}

impl Default for FadingConfig {
    fn default() -> Self {
        Self {
            carrier_freq_mhz: 900.0,
            bs_antenna_height_m: 30.0,
            user_antenna_height_m: 2.0,
            bs_antenna_gain_db: 15.0,
            user_antenna_gain_db: 0.0,
            shadowing_std_db: 8.0,
            noise_psd_dbm_per_hz: -174.0,
            cell_radius_m: 300.0,
            min_distance_m: 30.0,
            csi_error_variance: 0.0,
            seed: 1,
            shadowing: ShadowingMode::PerSlot,
            small_scale: SmallScale::Rayleigh,
        }
    }
}

impl FadingConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_freq_mhz", self.carrier_freq_mhz),
            ("bs_antenna_height_m", self.bs_antenna_height_m),
            ("user_antenna_height_m", self.user_antenna_height_m),
            ("cell_radius_m", self.cell_radius_m),
            ("min_distance_m", self.min_distance_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.min_distance_m > self.cell_radius_m {
            return Err(Error::InvalidConfig("min_distance_m exceeds cell_radius_m".into()));
        }
        if !(self.shadowing_std_db >= 0.0) {
            return Err(Error::InvalidConfig("shadowing_std_db must be nonnegative".into()));
        }
        if !(self.csi_error_variance >= 0.0) {
            return Err(Error::InvalidConfig("csi_error_variance must be nonnegative".into()));
        }
        Ok(())
    }

    /// Noise power spectral density in W/Hz.
    pub fn noise_psd_watts_per_hz(&self) -> f64 {
        10f64.powf((self.noise_psd_dbm_per_hz - 30.0) / 10.0)
    }
}

/// Hata urban path loss in dB for a distance in kilometres.
pub fn hata_path_loss_db(distance_km: f64, fading: &FadingConfig) -> Result<f64> {
    if !(distance_km > 0.0) {
        return Err(Error::Precondition(format!("distance {distance_km} km must be positive")));
    }
    let hb = fading.bs_antenna_height_m;
    let hm = fading.user_antenna_height_m;
    let a = 13.82 * hb.log10() + 3.2 * (11.75 * hm).log10().powi(2) - 4.97;
    let b = 44.9 - 6.55 * hb.log10();
    Ok(69.55 + 26.16 * fading.carrier_freq_mhz.log10() - a + b * distance_km.log10())
}

/// Noise power in dBm over `bandwidth_hz`.
pub fn noise_power_dbm(fading: &FadingConfig, bandwidth_hz: f64) -> f64 {
    fading.noise_psd_dbm_per_hz + 10.0 * bandwidth_hz.log10()
}

/// Distances of the users from the base station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserPlacement {
    pub distances_m: Vec<f64>,
}

impl UserPlacement {
    /// Uniform by area over the annulus `[min_distance, cell_radius]`.
    pub fn uniform<R: Rng + ?Sized>(n_users: usize, fading: &FadingConfig, rng: &mut R) -> Self {
        let (r0, r1) = (fading.min_distance_m, fading.cell_radius_m);
        let distances_m = (0..n_users)
            .map(|_| {
                let u: f64 = rng.random();
                (r0 * r0 + u * (r1 * r1 - r0 * r0)).sqrt()
            })
            .collect();
        Self { distances_m }
    }

    /// User `i` (1-based) at `spacing_m * i`.
    pub fn linear(n_users: usize, spacing_m: f64) -> Self {
        Self { distances_m: (1..=n_users).map(|i| spacing_m * i as f64).collect() }
    }

    pub fn validate(&self, fading: &FadingConfig) -> Result<()> {
        let tol = 1e-9 * fading.cell_radius_m;
        for d in &self.distances_m {
            if !(*d >= fading.min_distance_m - tol && *d <= fading.cell_radius_m + tol) {
                return Err(Error::InvalidConfig(format!(
                    "user distance {d} m outside [{}, {}] m",
                    fading.min_distance_m, fading.cell_radius_m
                )));
            }
        }
        Ok(())
    }

    /// Linear (not dB) path loss per user.
    pub fn linear_path_loss(&self, fading: &FadingConfig) -> Result<Vec<f64>> {
        self.distances_m.iter().map(|d| hata_path_loss_db(d / 1000.0, fading).map(|db| 10f64.powf(db / 10.0))).collect()
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

fn shadowing_db<R: Rng + ?Sized>(rng: &mut R, std_db: f64) -> f64 {
    if std_db > 0.0 {
        Normal::new(0.0, std_db).expect("finite std").sample(rng)
    } else {
        0.0
    }
}

fn snapshot_with_shadowing<R: Rng + ?Sized>(
    config: &SystemConfig,
    fading: &FadingConfig,
    placement: &UserPlacement,
    shadow_db: &[f64],
    rng: &mut R,
) -> Result<ChannelSnapshot> {
    if placement.distances_m.len() != config.n_users {
        return Err(Error::DimensionMismatch(format!(
            "{} user distances for {} users",
            placement.distances_m.len(),
            config.n_users
        )));
    }
    let antenna_db = fading.bs_antenna_gain_db + fading.user_antenna_gain_db;
    let mean_gain: Vec<f64> = placement
        .distances_m
        .iter()
        .zip(shadow_db)
        .map(|(d, x)| hata_path_loss_db(d / 1000.0, fading).map(|pl| 10f64.powf((antenna_db - pl - x) / 10.0)))
        .collect::<Result<_>>()?;
    let n0 = fading.noise_psd_watts_per_hz();
    let mut gains = Vec::with_capacity(config.n_subchannels);
    let mut noise = Vec::with_capacity(config.n_subchannels);
    for k in 0..config.n_subchannels {
        let row = mean_gain
            .iter()
            .map(|g| {
                let fade = match fading.small_scale {
                    SmallScale::Rayleigh => complex_gaussian(rng, 1.0),
                    SmallScale::Mean => Complex64::new(1.0, 0.0),
                };
                fade * g.sqrt()
            })
            .collect();
        gains.push(row);
        noise.push(vec![config.subchannel_bandwidth_hz[k] * n0; config.n_users]);
    }
    ChannelSnapshot::new(gains, noise)
}

/// One block-fading realisation with fresh per-user shadowing.
pub fn draw_snapshot<R: Rng + ?Sized>(
    config: &SystemConfig,
    fading: &FadingConfig,
    placement: &UserPlacement,
    rng: &mut R,
) -> Result<ChannelSnapshot> {
    let shadow: Vec<f64> = (0..config.n_users).map(|_| shadowing_db(rng, fading.shadowing_std_db)).collect();
    snapshot_with_shadowing(config, fading, placement, &shadow, rng)
}

/// Estimated channel `h + e` with `e ~ CN(0, sigma_e^2 / PL_i)`; the noise
/// powers are kept and NCRs recomputed.
pub fn perturb_csi<R: Rng + ?Sized>(
    snapshot: &ChannelSnapshot,
    placement: &UserPlacement,
    fading: &FadingConfig,
    rng: &mut R,
) -> Result<ChannelSnapshot> {
    let variance = fading.csi_error_variance;
    if !(variance >= 0.0) {
        return Err(Error::Precondition(format!("CSI error variance {variance} must be nonnegative")));
    }
    if variance == 0.0 {
        return Ok(snapshot.clone());
    }
    let path_loss = placement.linear_path_loss(fading)?;
    let gains = snapshot
        .gains()
        .iter()
        .map(|row| row.iter().zip(&path_loss).map(|(h, pl)| h + complex_gaussian(rng, variance / pl)).collect())
        .collect();
    ChannelSnapshot::new(gains, snapshot.noise_power().to_vec())
}

/// Channel seen by the scheduler in one slot: what it plans on and what the
/// transmission actually experiences.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotChannel {
    pub observed: ChannelSnapshot,
    pub actual: ChannelSnapshot,
}

impl SlotChannel {
    pub fn perfect(snapshot: ChannelSnapshot) -> Self {
        Self { observed: snapshot.clone(), actual: snapshot }
    }
}

pub trait ChannelSource {
    /// Next slot, or `None` when the source is exhausted.
    fn next_slot(&mut self) -> Result<Option<SlotChannel>>;
}

/// Seeded i.i.d. block-fading generator for a fixed placement.
#[derive(Debug, Clone)]
pub struct ChannelGenerator {
    config: SystemConfig,
    fading: FadingConfig,
    placement: UserPlacement,
    rng: ChaCha8Rng,
    trial_shadowing: Option<Vec<f64>>,
}

impl ChannelGenerator {
    pub fn new(config: &SystemConfig, fading: &FadingConfig, placement: UserPlacement) -> Result<Self> {
        Self::with_rng(config, fading, placement, ChaCha8Rng::seed_from_u64(fading.seed))
    }

    pub fn with_rng(
        config: &SystemConfig,
        fading: &FadingConfig,
        placement: UserPlacement,
        mut rng: ChaCha8Rng,
    ) -> Result<Self> {
        fading.validate()?;
        if placement.distances_m.len() != config.n_users {
            return Err(Error::DimensionMismatch(format!(
                "{} user distances for {} users",
                placement.distances_m.len(),
                config.n_users
            )));
        }
        let trial_shadowing = (fading.shadowing == ShadowingMode::PerTrial)
            .then(|| (0..config.n_users).map(|_| shadowing_db(&mut rng, fading.shadowing_std_db)).collect());
        Ok(Self { config: config.clone(), fading: fading.clone(), placement, rng, trial_shadowing })
    }

    pub fn placement(&self) -> &UserPlacement {
        &self.placement
    }

    pub fn next_snapshot(&mut self) -> Result<ChannelSnapshot> {
        match &self.trial_shadowing {
            Some(shadow) => snapshot_with_shadowing(&self.config, &self.fading, &self.placement, shadow, &mut self.rng),
            None => draw_snapshot(&self.config, &self.fading, &self.placement, &mut self.rng),
        }
    }
}

impl ChannelSource for ChannelGenerator {
    fn next_slot(&mut self) -> Result<Option<SlotChannel>> {
        let actual = self.next_snapshot()?;
        let observed = perturb_csi(&actual, &self.placement, &self.fading, &mut self.rng)?;
        Ok(Some(SlotChannel { observed, actual }))
    }
}

/// The same snapshot every slot, optionally for a limited number of slots.
#[derive(Debug, Clone)]
pub struct StaticChannel {
    snapshot: ChannelSnapshot,
    remaining: Option<usize>,
}

impl StaticChannel {
    pub fn new(snapshot: ChannelSnapshot) -> Self {
        Self { snapshot, remaining: None }
    }

    pub fn limited(snapshot: ChannelSnapshot, slots: usize) -> Self {
        Self { snapshot, remaining: Some(slots) }
    }
}

impl ChannelSource for StaticChannel {
    fn next_slot(&mut self) -> Result<Option<SlotChannel>> {
        if let Some(r) = &mut self.remaining {
            if *r == 0 {
                return Ok(None);
            }
            *r -= 1;
        }
        Ok(Some(SlotChannel::perfect(self.snapshot.clone())))
    }
}

/// Replays recorded snapshots in order, then reports exhaustion.
#[derive(Debug, Clone)]
pub struct ReplaySource {
    snapshots: std::vec::IntoIter<ChannelSnapshot>,
}

impl ReplaySource {
    pub fn new(snapshots: Vec<ChannelSnapshot>) -> Self {
        Self { snapshots: snapshots.into_iter() }
    }
}

impl ChannelSource for ReplaySource {
    fn next_slot(&mut self) -> Result<Option<SlotChannel>> {
        Ok(self.snapshots.next().map(SlotChannel::perfect))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ReplayRow {
    slot: usize,
    subchannel: usize,
    user: usize,
    gain_re: f64,
    gain_im: f64,
    noise_power_w: f64,
}

/// Writes snapshots as `slot,subchannel,user,gain_re,gain_im,noise_power_w`.
pub fn write_replay_csv<W: Write>(writer: W, snapshots: &[ChannelSnapshot]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (slot, snap) in snapshots.iter().enumerate() {
        for (k, (g_row, n_row)) in snap.gains().iter().zip(snap.noise_power()).enumerate() {
            for (i, (g, n)) in g_row.iter().zip(n_row).enumerate() {
                w.serialize(ReplayRow {
                    slot,
                    subchannel: k,
                    user: i,
                    gain_re: g.re,
                    gain_im: g.im,
                    noise_power_w: *n,
                })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads the replay format; every slot must list the full `K x N` grid.
pub fn read_replay_csv<R: Read>(reader: R) -> Result<Vec<ChannelSnapshot>> {
    let mut rows = Vec::new();
    for row in csv::Reader::from_reader(reader).deserialize::<ReplayRow>() {
        rows.push(row?);
    }
    if rows.is_empty() {
        return Ok(Vec::new());
    }
    let slots = rows.iter().map(|r| r.slot).max().unwrap_or(0) + 1;
    let k = rows.iter().map(|r| r.subchannel).max().unwrap_or(0) + 1;
    let n = rows.iter().map(|r| r.user).max().unwrap_or(0) + 1;
    let mut gains = vec![vec![vec![None; n]; k]; slots];
    let mut noise = vec![vec![vec![0.0; n]; k]; slots];
    for r in rows {
        gains[r.slot][r.subchannel][r.user] = Some(Complex64::new(r.gain_re, r.gain_im));
        noise[r.slot][r.subchannel][r.user] = r.noise_power_w;
    }
    gains
        .into_iter()
        .zip(noise)
        .enumerate()
        .map(|(slot, (g, n_rows))| {
            let g = g
                .into_iter()
                .map(|row| row.into_iter().collect::<Option<Vec<_>>>())
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::InvalidConfig(format!("replay slot {slot} is missing entries")))?;
            ChannelSnapshot::new(g, n_rows)
        })
        .collect()
}
