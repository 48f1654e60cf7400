//! Closed-form power split between two users sharing a subchannel, compared
//! with a grid search, across budgets that cross every regime.

use mcnoma::oracle::oracle_two_user;
use mcnoma::pairwise::two_user_split;

fn main() -> mcnoma::Result<()> {
    // psi has the larger weight but the weaker channel.
    let (w_psi, w_phi, eta_psi, eta_phi, bandwidth) = (2.0, 1.0, 4.0, 1.0, 1.0);
    println!("{:>8} {:>18} {:>10} {:>10} {:>12} {:>12}", "budget", "regime", "p_phi", "p_psi", "value", "grid value");
    for p_bar in [0.5, 2.0, 5.0, 10.0, 40.0] {
        let split = two_user_split(w_psi, w_phi, eta_psi, eta_phi, bandwidth, p_bar)?;
        let grid = oracle_two_user(w_psi, w_phi, eta_psi, eta_phi, bandwidth, p_bar, 10_000)?;
        println!(
            "{p_bar:>8.2} {:>18} {:>10.4} {:>10.4} {:>12.6} {:>12.6}",
            format!("{:?}", split.regime),
            split.p_phi,
            split.p_psi,
            split.value.unwrap_or(f64::NAN),
            grid.value
        );
    }

    // A last-SIC user whose weight is too small relative to its channel
    // advantage never gets power: the pair is contradictory.
    let split = two_user_split(1.0, 0.2, 4.0, 1.0, bandwidth, 10.0)?;
    println!("weights (1.0, 0.2): {:?}, value {:?}", split.regime, split.value);
    Ok(())
}
