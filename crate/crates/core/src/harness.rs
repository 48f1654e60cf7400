//! Campaign drivers behind the `mcnoma` binary: one-shot solves, scheduling
//! horizons, Monte-Carlo trials and timing benchmarks. Each writes versioned,
//! machine-readable output.
//!
//! Output files:
//!
//! * `solve`: JSON document on stdout.
//! * `schedule`: `schedule.csv` (`slot,user,rate,lambda,effective_weight`)
//!   and `summary.json`.
//! * `montecarlo`: `montecarlo.csv` (`trial,wsr,runtime_ms`) whose last two
//!   rows carry `mean` and `std` in the `trial` column.
//! * `bench`: `bench.csv` (`kind,n_users,n_subchannels,mean_ns,reps`).

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{
    draw_snapshot, perturb_csi, ChannelGenerator, ChannelSource, FadingConfig, ReplaySource, UserPlacement,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::joint::{joint_sapa_lcc, JointOptions};
use crate::model::{compute_rates, Allocation, ChannelSnapshot, SystemConfig};
use crate::scheduler::{run_horizon_with, SchedulerState, SchedulingMode};
use crate::subchannel::{solve_subchannel, SubchannelSolution};

pub const OUTPUT_SCHEMA_VERSION: u32 = 1;

/// Process exit code for an error: 2 for malformed input, 3 for an
/// infeasible system, 1 for anything else.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_)
        | Error::Json(_)
        | Error::Csv(_)
        | Error::DimensionMismatch(_)
        | Error::NonPositiveNcr { .. }
        | Error::Precondition(_) => 2,
        Error::Infeasible(_) => 3,
        _ => 1,
    }
}

/// Command-line overrides applied on top of a configuration file or preset.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub slots: Option<u64>,
    pub trials: Option<usize>,
    pub mode: Option<SchedulingMode>,
    pub csi_error: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(s) = self.seed {
            cfg.run.seed = s;
            cfg.fading.seed = s;
        }
        if let Some(t) = self.slots {
            cfg.run.slots = t;
        }
        if let Some(r) = self.trials {
            cfg.run.trials = r;
        }
        if let Some(m) = self.mode {
            cfg.scheduler.mode = m;
        }
        if let Some(v) = self.csi_error {
            cfg.fading.csi_error_variance = v;
        }
    }
}

/// Independent random stream `stream` of the run seeded by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Weights in (0, 1].
pub fn random_weights<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| 1.0 - rng.random::<f64>()).collect()
}

fn weights_for(cfg: &RunConfig, config: &SystemConfig, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if cfg.run.random_weights {
        random_weights(config.n_users, rng)
    } else {
        config.weights.clone()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveOutput {
    pub schema_version: u32,
    pub weights: Vec<f64>,
    /// Objective on the planning channel, b/s.
    pub weighted_sum_rate: f64,
    /// Objective re-evaluated on the true channel, b/s.
    pub achieved_weighted_sum_rate: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
    pub p_bars: Vec<f64>,
    pub allocation: Allocation,
    pub rates_bps: Vec<f64>,
    pub rates_qos_unit: Vec<f64>,
    pub subchannels: Vec<SubchannelSolution>,
}

/// One slot: the first replayed snapshot when given, otherwise a fresh draw
/// from stream 0 of the run seed.
pub fn run_solve(cfg: &RunConfig, replay: Option<&[ChannelSnapshot]>) -> Result<SolveOutput> {
    let config = cfg.system_config()?;
    let mut rng = stream_rng(cfg.run.seed, 0);
    let weights = weights_for(cfg, &config, &mut rng);
    let (observed, actual) = match replay {
        Some(snaps) => {
            let snap = snaps.first().ok_or_else(|| Error::InvalidConfig("replay file has no slots".into()))?;
            (snap.clone(), snap.clone())
        }
        None => {
            let placement = cfg.placement.realize(config.n_users, &cfg.fading, &mut rng)?;
            let actual = draw_snapshot(&config, &cfg.fading, &placement, &mut rng)?;
            (perturb_csi(&actual, &placement, &cfg.fading, &mut rng)?, actual)
        }
    };
    let sol = joint_sapa_lcc(&config, &observed, &weights, &cfg.scheduler.joint)?;
    let report = compute_rates(&config, &actual, &sol.allocation, Some(&weights))?;
    Ok(SolveOutput {
        schema_version: OUTPUT_SCHEMA_VERSION,
        rates_qos_unit: report.per_user_rate.iter().map(|r| config.to_qos_unit(*r)).collect(),
        rates_bps: report.per_user_rate,
        achieved_weighted_sum_rate: report.weighted_sum,
        weights,
        weighted_sum_rate: sol.weighted_sum_rate,
        iterations: sol.iterations,
        trace: sol.trace,
        p_bars: sol.p_bars,
        allocation: sol.allocation,
        subchannels: sol.subchannels,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaTrajectory {
    pub slots: Vec<u64>,
    /// `lambdas[j][i]`: multiplier of user `i` after slot `slots[j]`.
    pub lambdas: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScheduleSummary {
    pub schema_version: u32,
    pub mode: SchedulingMode,
    pub seed: u64,
    pub requested_slots: u64,
    pub completed_slots: u64,
    pub partial: bool,
    pub qos_unit: crate::model::RateUnit,
    pub qos_min_rate: Vec<f64>,
    pub average_rates: Vec<f64>,
    pub average_sum_rate: f64,
    pub final_lambdas: Vec<f64>,
    pub max_lambda: f64,
    pub distances_m: Option<Vec<f64>>,
    pub lambda_trajectory: LambdaTrajectory,
}

#[derive(Debug, Serialize)]
struct ScheduleRow {
    slot: u64,
    user: usize,
    rate: f64,
    lambda: f64,
    effective_weight: f64,
}

/// Scheduling horizon; writes `schedule.csv` and `summary.json` into
/// `out_dir` when given.
pub fn run_schedule(
    cfg: &RunConfig,
    out_dir: Option<&Path>,
    replay: Option<Vec<ChannelSnapshot>>,
) -> Result<ScheduleSummary> {
    let config = cfg.system_config()?;
    let scheduler = cfg.scheduler()?;
    let mut state = SchedulerState::new(config.n_users);
    state.pf_tau = cfg.scheduler.pf_tau;

    let (mut source, distances): (Box<dyn ChannelSource>, Option<Vec<f64>>) = match replay {
        Some(snaps) => (Box::new(ReplaySource::new(snaps)), None),
        None => {
            let mut rng = stream_rng(cfg.run.seed, 0);
            let placement = cfg.placement.realize(config.n_users, &cfg.fading, &mut rng)?;
            let distances = placement.distances_m.clone();
            let fading = FadingConfig { seed: cfg.run.seed, ..cfg.fading.clone() };
            let generator = ChannelGenerator::with_rng(&config, &fading, placement, stream_rng(cfg.run.seed, 1))?;
            (Box::new(generator), Some(distances))
        }
    };

    let slots = cfg.run.slots;
    let stride = if cfg.run.lambda_stride > 0 { cfg.run.lambda_stride } else { (slots / 1000).max(1) };
    let mut writer = match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            Some(csv::Writer::from_writer(BufWriter::new(File::create(dir.join("schedule.csv"))?)))
        }
        None => None,
    };
    let mut trajectory = LambdaTrajectory { slots: Vec::new(), lambdas: Vec::new() };
    let report = run_horizon_with(&config, source.as_mut(), &mut state, &scheduler, slots, |r| {
        if let Some(w) = writer.as_mut() {
            for i in 0..r.rates_qos_unit.len() {
                w.serialize(ScheduleRow {
                    slot: r.slot,
                    user: i,
                    rate: r.rates_qos_unit[i],
                    lambda: r.lambdas_after[i],
                    effective_weight: r.effective_weights[i],
                })?;
            }
        }
        if r.slot == 1 || r.slot % stride == 0 || r.slot == slots {
            trajectory.slots.push(r.slot);
            trajectory.lambdas.push(r.lambdas_after.clone());
        }
        Ok(())
    })?;
    if let Some(mut w) = writer {
        w.flush()?;
    }

    let summary = ScheduleSummary {
        schema_version: OUTPUT_SCHEMA_VERSION,
        mode: scheduler.mode,
        seed: cfg.run.seed,
        requested_slots: report.requested_slots,
        completed_slots: report.completed_slots,
        partial: report.partial,
        qos_unit: config.qos_unit,
        qos_min_rate: config.qos_min_rate.clone(),
        average_sum_rate: report.average_rates.iter().sum(),
        average_rates: report.average_rates,
        final_lambdas: report.final_lambdas,
        max_lambda: report.max_lambda,
        distances_m: distances,
        lambda_trajectory: trajectory,
    };
    if let Some(dir) = out_dir {
        serde_json::to_writer_pretty(BufWriter::new(File::create(dir.join("summary.json"))?), &summary)?;
    }
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial: usize,
    /// Weighted sum rate achieved on the true channel, in the QoS unit.
    pub wsr: f64,
    /// Wall time of the joint solve.
    pub runtime_ms: f64,
}

/// One independent trial: fresh placement, weights and channel from stream
/// `trial + 1`; plan on the (possibly perturbed) estimate, score on the truth.
pub fn run_trial(cfg: &RunConfig, config: &SystemConfig, trial: usize) -> Result<TrialResult> {
    let mut rng = stream_rng(cfg.run.seed, trial as u64 + 1);
    let placement = cfg.placement.realize(config.n_users, &cfg.fading, &mut rng)?;
    let weights = weights_for(cfg, config, &mut rng);
    let actual = draw_snapshot(config, &cfg.fading, &placement, &mut rng)?;
    let observed = perturb_csi(&actual, &placement, &cfg.fading, &mut rng)?;
    let start = Instant::now();
    let sol = joint_sapa_lcc(config, &observed, &weights, &cfg.scheduler.joint)?;
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    let report = compute_rates(config, &actual, &sol.allocation, Some(&weights))?;
    Ok(TrialResult { trial, wsr: config.to_qos_unit(report.weighted_sum), runtime_ms })
}

#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloSummary {
    pub trials: Vec<TrialResult>,
    pub mean_wsr: f64,
    pub std_wsr: f64,
    pub mean_runtime_ms: f64,
    pub std_runtime_ms: f64,
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.clone().sum::<f64>() / n as f64;
    let var = if n > 1 { xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    (mean, var.sqrt())
}

/// Runs `cfg.run.trials` independent trials on the rayon pool; writes
/// `montecarlo.csv` into `out_dir` when given.
pub fn run_montecarlo(cfg: &RunConfig, out_dir: Option<&Path>) -> Result<MonteCarloSummary> {
    let config = cfg.system_config()?;
    if cfg.run.trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let trials = (0..cfg.run.trials).into_par_iter().map(|t| run_trial(cfg, &config, t)).collect::<Result<Vec<_>>>()?;
    let (mean_wsr, std_wsr) = mean_std(trials.iter().map(|t| t.wsr));
    let (mean_runtime_ms, std_runtime_ms) = mean_std(trials.iter().map(|t| t.runtime_ms));
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join("montecarlo.csv"))?));
        w.write_record(["trial", "wsr", "runtime_ms"])?;
        for t in &trials {
            w.write_record([t.trial.to_string(), t.wsr.to_string(), t.runtime_ms.to_string()])?;
        }
        w.write_record(["mean".to_string(), mean_wsr.to_string(), mean_runtime_ms.to_string()])?;
        w.write_record(["std".to_string(), std_wsr.to_string(), std_runtime_ms.to_string()])?;
        w.flush()?;
    }
    Ok(MonteCarloSummary { trials, mean_wsr, std_wsr, mean_runtime_ms, std_runtime_ms })
}

/// Pool of random single-slot instances: users dropped uniformly in the
/// cell, weights in (0, 1].
pub struct BenchInstances {
    pub config: SystemConfig,
    pub instances: Vec<(ChannelSnapshot, Vec<f64>)>,
}

impl BenchInstances {
    pub fn generate(n_users: usize, n_subchannels: usize, count: usize, seed: u64) -> Result<Self> {
        let base = RunConfig::default();
        let mut system = base.system.clone();
        system.n_users = n_users;
        system.n_subchannels = n_subchannels;
        let config = RunConfig { system, ..base }.system_config()?;
        let fading = FadingConfig::default();
        let mut rng = stream_rng(seed, (n_users as u64) << 32 | n_subchannels as u64);
        let instances = (0..count.max(1))
            .map(|_| {
                let placement = UserPlacement::uniform(n_users, &fading, &mut rng);
                let snap = draw_snapshot(&config, &fading, &placement, &mut rng)?;
                Ok((snap, random_weights(n_users, &mut rng)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { config, instances })
    }
}

const BENCH_ROUNDS: usize = 5;

/// Mean time per call in the fastest of several rounds of `reps` calls.
fn time_calls(reps: usize, mut call: impl FnMut(usize) -> Result<f64>) -> Result<f64> {
    let mut sink = 0.0;
    for r in 0..reps.min(64) {
        sink += call(r)?;
    }
    let mut best = f64::INFINITY;
    for _ in 0..BENCH_ROUNDS {
        let start = Instant::now();
        for r in 0..reps {
            sink += call(r)?;
        }
        best = best.min(start.elapsed().as_nanos() as f64 / reps as f64);
    }
    std::hint::black_box(sink);
    Ok(best)
}

/// Mean nanoseconds of one per-subchannel solve at budget `P_max / K`.
pub fn bench_subchannel(n_users: usize, reps: usize, seed: u64) -> Result<f64> {
    let pool = BenchInstances::generate(n_users, 10, 64, seed)?;
    let k = pool.config.n_subchannels;
    let p_bar = pool.config.p_max_watts / k as f64;
    time_calls(reps, |r| {
        let (snap, w) = &pool.instances[r % pool.instances.len()];
        Ok(solve_subchannel(&pool.config, snap, w, r % k, p_bar)?.value)
    })
}

/// Mean nanoseconds of one joint solve.
pub fn bench_joint(n_users: usize, n_subchannels: usize, reps: usize, seed: u64) -> Result<f64> {
    let pool = BenchInstances::generate(n_users, n_subchannels, 64, seed)?;
    let options = JointOptions::default();
    time_calls(reps, |r| {
        let (snap, w) = &pool.instances[r % pool.instances.len()];
        Ok(joint_sapa_lcc(&pool.config, snap, w, &options)?.weighted_sum_rate)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub kind: String,
    pub n_users: usize,
    pub n_subchannels: usize,
    pub mean_ns: f64,
    pub reps: usize,
}

#[derive(Debug, Clone)]
pub struct BenchPlan {
    pub n_values: Vec<usize>,
    pub k_values: Vec<usize>,
    pub fixed_n: usize,
    pub fixed_k: usize,
    pub reps: usize,
}

impl Default for BenchPlan {
    fn default() -> Self {
        Self {
            n_values: vec![10, 15, 20, 25, 30, 35, 40],
            k_values: vec![5, 10, 20, 40],
            fixed_n: 10,
            fixed_k: 10,
            reps: 2000,
        }
    }
}

/// Timing sweep: per-subchannel solves versus N, joint solves versus N at
/// fixed K and versus K at fixed N. Writes `bench.csv` when `out_dir` is set.
pub fn run_bench(plan: &BenchPlan, seed: u64, out_dir: Option<&Path>) -> Result<Vec<BenchRow>> {
    if plan.reps == 0 {
        return Err(Error::InvalidConfig("bench reps must be positive".into()));
    }
    let mut rows = Vec::new();
    for &n in &plan.n_values {
        let ns = bench_subchannel(n, plan.reps, seed)?;
        rows.push(BenchRow { kind: "subchannel".into(), n_users: n, n_subchannels: 1, mean_ns: ns, reps: plan.reps });
    }
    let joint_reps = (plan.reps / 10).max(1);
    for &n in &plan.n_values {
        let ns = bench_joint(n, plan.fixed_k, joint_reps, seed)?;
        rows.push(BenchRow {
            kind: "joint_vs_n".into(),
            n_users: n,
            n_subchannels: plan.fixed_k,
            mean_ns: ns,
            reps: joint_reps,
        });
    }
    for &k in &plan.k_values {
        let ns = bench_joint(plan.fixed_n, k, joint_reps, seed)?;
        rows.push(BenchRow {
            kind: "joint_vs_k".into(),
            n_users: plan.fixed_n,
            n_subchannels: k,
            mean_ns: ns,
            reps: joint_reps,
        });
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join("bench.csv"))?));
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    Ok(rows)
}
