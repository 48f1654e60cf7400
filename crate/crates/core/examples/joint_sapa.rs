//! Joint subchannel assignment and power allocation for one slot of the
//! ten-user, ten-subchannel cell.

use mcnoma::channel::draw_snapshot;
use mcnoma::config::RunConfig;
use mcnoma::harness::{random_weights, stream_rng};
use mcnoma::{compute_rates, joint_sapa_lcc, JointOptions};

fn main() -> mcnoma::Result<()> {
    let cfg = RunConfig::preset("random-drop")?;
    let config = cfg.system_config()?;
    let mut rng = stream_rng(7, 1);
    let placement = cfg.placement.realize(config.n_users, &cfg.fading, &mut rng)?;
    let weights = random_weights(config.n_users, &mut rng);
    let snap = draw_snapshot(&config, &cfg.fading, &placement, &mut rng)?;

    let sol = joint_sapa_lcc(&config, &snap, &weights, &JointOptions::default())?;
    println!("iterations {}, trace {:?}", sol.iterations, sol.trace);
    for (k, s) in sol.subchannels.iter().enumerate() {
        println!("subchannel {k}: budget {:.3} W, users {:?}", sol.p_bars[k], s.active_users().collect::<Vec<_>>());
    }
    let rates = compute_rates(&config, &snap, &sol.allocation, Some(&weights))?;
    for (i, r) in rates.per_user_rate.iter().enumerate() {
        println!("user {i} at {:.0} m, weight {:.2}: {:.3} Mb/s", placement.distances_m[i], weights[i], r / 1e6);
    }
    println!("weighted sum rate {:.3} b/s/Hz", config.to_qos_unit(rates.weighted_sum));
    Ok(())
}
