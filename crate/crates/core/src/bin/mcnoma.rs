//! `mcnoma` command-line front end.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mcnoma::channel::read_replay_csv;
use mcnoma::config::RunConfig;
use mcnoma::harness::{exit_code, run_bench, run_montecarlo, run_schedule, run_solve, BenchPlan, Overrides};
use mcnoma::scheduler::SchedulingMode;
use mcnoma::{Error, Result};

#[derive(Parser)]
#[command(name = "mcnoma", version, about = "Downlink MC-NOMA resource allocation and scheduling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named preset (equal-floors, mixed-floors, random-drop).
    #[arg(long, global = true)]
    preset: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    slots: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// qos, pf or no_qos
    #[arg(long, global = true)]
    mode: Option<SchedulingMode>,
    /// Output directory for CSV/JSON artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// CSI error variance scale (0 = perfect CSI).
    #[arg(long = "csi-error", global = true)]
    csi_error: Option<f64>,
    /// Replay channel snapshots from CSV instead of generating them.
    #[arg(long, global = true)]
    replay: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one slot and print the allocation as JSON.
    Solve,
    /// Run a scheduling horizon; writes schedule.csv and summary.json.
    Schedule,
    /// Independent single-slot trials; writes montecarlo.csv.
    Montecarlo,
    /// Timing sweep over N and K; writes bench.csv.
    Bench {
        /// Timed calls per point.
        #[arg(long, default_value_t = 2000)]
        reps: usize,
    },
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut cfg = match (&common.config, &common.preset) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(name)) => RunConfig::preset(name)?,
        (None, None) => RunConfig::preset("equal-floors")?,
    };
    Overrides {
        seed: common.seed,
        slots: common.slots,
        trials: common.trials,
        mode: common.mode,
        csi_error: common.csi_error,
    }
    .apply(&mut cfg);
    Ok(cfg)
}

fn replay(common: &Common) -> Result<Option<Vec<mcnoma::ChannelSnapshot>>> {
    common
        .replay
        .as_ref()
        .map(|p| {
            let file = std::fs::File::open(p)
                .map_err(|e| Error::InvalidConfig(format!("cannot open {}: {e}", p.display())))?;
            read_replay_csv(file)
        })
        .transpose()
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    let cfg = load(common)?;
    match cli.command {
        Command::Solve => {
            let snaps = replay(common)?;
            let out = run_solve(&cfg, snaps.as_deref())?;
            let mut stdout = std::io::stdout().lock();
            serde_json::to_writer_pretty(&mut stdout, &out)?;
            writeln!(stdout)?;
        }
        Command::Schedule => {
            let summary = run_schedule(&cfg, Some(&common.out), replay(common)?)?;
            if summary.partial {
                eprintln!(
                    "channel source ended after {} of {} slots",
                    summary.completed_slots, summary.requested_slots
                );
            }
            eprintln!("wrote {}", common.out.join("summary.json").display());
        }
        Command::Montecarlo => {
            let summary = run_montecarlo(&cfg, Some(&common.out))?;
            eprintln!(
                "{} trials: mean wsr {:.4} (std {:.4}); wrote {}",
                summary.trials.len(),
                summary.mean_wsr,
                summary.std_wsr,
                common.out.join("montecarlo.csv").display()
            );
        }
        Command::Bench { reps } => {
            cfg.system_config()?;
            let rows = run_bench(&BenchPlan { reps, ..BenchPlan::default() }, cfg.run.seed, Some(&common.out))?;
            for r in rows {
                eprintln!("{:<11} N={:<3} K={:<3} {:>12.0} ns", r.kind, r.n_users, r.n_subchannels, r.mean_ns);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
