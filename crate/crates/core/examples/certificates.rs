//! Check both decay certificates on a constant-weight flock whose delay sits below each threshold.
//!
//! With `psi = psi0` the Fiedler number is `lambda * psi0` and `psi* = psi0^2`, so both
//! structural constants are known exactly and passed in as overrides.

use delayed_flocking::experiments::{self, CertificateOptions};
use delayed_flocking::{ModelParams, PotentialSpec, Variant};

const PSI0: f64 = 0.9;

fn run(tau: f64, opts: CertificateOptions) -> delayed_flocking::Result<()> {
    let mut scenario = experiments::section4_scenario(tau, 30.0)?;
    scenario.params = ModelParams::new(3, 2, 1.0, Variant::MainDelay, PotentialSpec::constant(PSI0)?)?;
    scenario.sample_stride = 1;
    let report = experiments::certificate_report(&scenario, &opts)?;
    println!("tau = {tau}");
    print!("{report}");
    println!();
    Ok(())
}

fn main() -> delayed_flocking::Result<()> {
    let l2 = CertificateOptions {
        linf: false,
        gamma: Some(PSI0),
        ..Default::default()
    };
    let linf = CertificateOptions {
        l2: false,
        psi_star: Some(PSI0 * PSI0),
        ..Default::default()
    };
    run(0.2, l2)?;
    run(0.1, linf)?;
    // Above both thresholds: the report says so instead of evaluating rate and constant.
    run(1.0, CertificateOptions::default())
}
