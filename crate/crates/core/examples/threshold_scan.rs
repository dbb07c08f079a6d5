//! Bisect the constant delay at which the three-agent flock stops reaching consensus,
//! then print the classification on a coarse grid for comparison.

use delayed_flocking::experiments::{self, ConsensusCriteria};
use delayed_flocking::integrator;

fn main() -> delayed_flocking::Result<()> {
    let criteria = ConsensusCriteria::default();
    let template = experiments::section4_scenario(0.0, criteria.horizon)?;

    let report = experiments::threshold_bisect(&template, &criteria, 0.05, 5.0, 0.05)?;
    print!("{report}");

    println!("\ngrid, T = {}:", criteria.horizon);
    for tau in [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 3.0] {
        let run = integrator::run(&template.with_constant_delay(tau)?)?;
        let last = run.last();
        println!(
            "  tau = {tau:<5} {:<10} V(T) = {:.3e}  X(T) = {:.3}",
            experiments::classify_consensus(&run, &criteria).to_string(),
            last.v_var,
            last.x_var
        );
    }
    Ok(())
}
