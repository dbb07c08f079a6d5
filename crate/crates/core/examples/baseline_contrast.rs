//! Same data and delay, two models: the pairwise delayed coupling and the row-stochastic
//! baseline that averages delayed velocities against the agent's current one.

use delayed_flocking::experiments::{self, ConsensusCriteria};
use delayed_flocking::{integrator, Variant};

fn main() -> delayed_flocking::Result<()> {
    let tau = 5.0;
    let criteria = ConsensusCriteria::default();
    for variant in [Variant::MainDelay, Variant::FullSumBaseline] {
        let mut s = experiments::section4_scenario(tau, 50.0)?;
        s.params = s.params.with_variant(variant)?;
        let run = integrator::run(&s)?;
        let (first, last) = (run.first(), run.last());
        println!(
            "{:<18} d_V(50)/d_V(0) = {:.3e}  X(50) = {:.3}  {}",
            variant.name(),
            last.d_v / first.d_v,
            last.x_var,
            experiments::classify_consensus(&run, &criteria)
        );
    }
    Ok(())
}
