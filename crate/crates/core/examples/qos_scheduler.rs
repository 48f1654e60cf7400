//! Rate-floor-aware opportunistic scheduling: every user asks for 2 b/s/Hz on
//! average and the multipliers steer the per-slot weights to deliver it.

use mcnoma::config::RunConfig;
use mcnoma::harness::run_schedule;

fn main() -> mcnoma::Result<()> {
    let mut cfg = RunConfig::preset("equal-floors")?;
    cfg.run.slots = 5_000;
    let out = std::env::temp_dir().join("mcnoma-qos-example");
    let summary = run_schedule(&cfg, Some(&out), None)?;
    for (i, (r, lam)) in summary.average_rates.iter().zip(&summary.final_lambdas).enumerate() {
        println!("user {i}: average {r:.3} b/s/Hz (floor {:.1}), multiplier {lam:.4}", summary.qos_min_rate[i]);
    }
    println!("largest multiplier {:.4}; wrote {}", summary.max_lambda, out.display());
    Ok(())
}
