//! Three scheduling policies on a cell with unequal rate floors: multiplier
//! based floors, proportional fairness and plain weighted-sum-rate.

use mcnoma::config::RunConfig;
use mcnoma::harness::run_schedule;
use mcnoma::scheduler::SchedulingMode;

fn main() -> mcnoma::Result<()> {
    for mode in [SchedulingMode::Qos, SchedulingMode::Pf, SchedulingMode::NoQos] {
        let mut cfg = RunConfig::preset("mixed-floors")?;
        cfg.scheduler.mode = mode;
        cfg.run.slots = 5_000;
        let s = run_schedule(&cfg, None, None)?;
        let met = s.average_rates.iter().zip(&s.qos_min_rate).filter(|(r, t)| r >= t).count();
        let rates: Vec<String> = s.average_rates.iter().map(|r| format!("{r:.2}")).collect();
        println!("{mode:>6}: sum {:.2}, floors met {met}/10, rates [{}]", s.average_sum_rate, rates.join(", "));
    }
    Ok(())
}
