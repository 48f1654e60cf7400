//! Joint solver against the exhaustive grid reference on small instances.

use mcnoma::harness::BenchInstances;
use mcnoma::oracle::{oracle_joint, JointOracleOptions};
use mcnoma::{joint_sapa_lcc, JointOptions};

fn main() -> mcnoma::Result<()> {
    let mut pool = BenchInstances::generate(3, 2, 5, 11)?;
    pool.config.sic_capacity = 2;
    for (i, (snap, w)) in pool.instances.iter().enumerate() {
        let sol = joint_sapa_lcc(&pool.config, snap, w, &JointOptions::default())?;
        let oracle = oracle_joint(&pool.config, snap, w, &JointOracleOptions::default())?;
        println!(
            "instance {i}: solver {:.4e}, reference {:.4e}, ratio {:.4}; reference subsets {:?}",
            sol.weighted_sum_rate,
            oracle.value,
            sol.weighted_sum_rate / oracle.value,
            oracle.subsets
        );
    }
    Ok(())
}
