//! Best user pair on one subchannel: every user is tried as the last-SIC
//! user, paired with its highest-weight weaker companion.

use mcnoma::oracle::oracle_subchannel_hypotheses;
use mcnoma::subchannel::solve_subchannel;
use mcnoma::{ChannelSnapshot, SystemConfig};

fn main() -> mcnoma::Result<()> {
    let ncr = vec![vec![0.02, 0.4, 0.09, 1.5, 0.7, 0.005]];
    let weights = [0.8, 1.4, 0.5, 1.9, 0.6, 0.3];
    let mut config = SystemConfig::uniform(ncr[0].len(), 1, 1.0, 4.0, 1.0, 2);
    config.subchannel_bandwidth_hz = vec![1.0];
    let snap = ChannelSnapshot::from_ncr(ncr)?;

    let sol = solve_subchannel(&config, &snap, &weights, 0, 4.0)?;
    println!("last-SIC user {}, companion {:?}", sol.last_sic_user, sol.companion);
    println!("powers {:?}", sol.power);
    println!("weighted rate {:.6} b/s/Hz ({:?})", sol.value, sol.regime);

    let oracle = oracle_subchannel_hypotheses(&config, &snap, &weights, 0, 4.0)?;
    println!(
        "enumeration under the same companion rule: {:.6}; best of all pairs: {:.6} (users {:?} + {:?})",
        oracle.value, oracle.all_pairs_value, oracle.all_pairs_last_sic_user, oracle.all_pairs_companion
    );
    Ok(())
}
