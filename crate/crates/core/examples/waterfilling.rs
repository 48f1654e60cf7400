//! Splitting a total budget across subchannels with fixed user pairs by
//! water-filling over their closed-form value functions.

use mcnoma::master::{evaluate_value, solve_master, ValueFunction};

fn main() -> mcnoma::Result<()> {
    let vfs = vec![
        ValueFunction::single_user(1.0, 0.1, 1.0),
        // Companion-heavy pair: has a breakpoint where the companion kicks in.
        ValueFunction::pair(1.5, 0.9, 2.0, 0.05, 1.0)?,
        ValueFunction::pair(0.7, 1.2, 0.8, 0.3, 1.0)?,
    ];
    for vf in &vfs {
        if let Some(bp) = vf.breakpoint {
            println!("breakpoint at budget {:.4} (water level {:.4})", bp.c4, bp.c5);
        }
    }
    let p_max = 6.0;
    let caps = vec![1.15 * p_max / vfs.len() as f64; vfs.len()];
    let sol = solve_master(&vfs, p_max, &caps, 1e-12)?;
    println!("budgets {:?} (sum {:.12})", sol.p_bars, sol.p_bars.iter().sum::<f64>());
    println!("water level {:.6} after {} bisection steps", sol.mu_star, sol.bisection_steps);
    for (k, (vf, p)) in vfs.iter().zip(&sol.p_bars).enumerate() {
        println!("subchannel {k}: value {:.6}", evaluate_value(vf, *p)?);
    }
    println!("total {:.6}", sol.total_value);
    Ok(())
}
