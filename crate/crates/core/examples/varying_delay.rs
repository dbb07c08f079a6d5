//! A time-varying delay tau(t) = a + b sin(omega t). The slope condition `b omega < 1`
//! is enforced at construction.

use delayed_flocking::experiments::{self, ConsensusCriteria};
use delayed_flocking::{integrator, DelaySpec};

fn main() -> delayed_flocking::Result<()> {
    let criteria = ConsensusCriteria::default();
    for (a, b, omega) in [(0.3, 0.2, 2.0), (2.0, 1.0, 0.5)] {
        let mut s = experiments::section4_scenario(0.0, 100.0)?;
        s.delay = DelaySpec::sinusoidal(a, b, omega)?;
        let bounds = s.delay.bounds();
        let run = integrator::run(&s)?;
        println!(
            "tau_bar = {:.2}, c = {:.2}: V(100) = {:.3e}, X(100) = {:.3}, {}",
            bounds.tau_bar,
            bounds.c,
            run.last().v_var,
            run.last().x_var,
            experiments::classify_consensus(&run, &criteria)
        );
    }

    match DelaySpec::sinusoidal(1.0, 0.6, 2.0) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
