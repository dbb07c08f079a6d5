// Normalized nonsymmetric weights a_ij = N psi_ij / sum_k psi_ik with a tabulated potential.
// Only the diameter certificate applies here; the variance one needs symmetric weights.

use delayed_flocking::experiments::{self, CertificateOptions};
use delayed_flocking::{integrator, model, ModelParams, PotentialSpec, Variant};

fn main() -> delayed_flocking::Result<()> {
    let potential = PotentialSpec::table(vec![0.0, 1.0, 2.0, 4.0], vec![1.0, 0.8, 0.5, 0.3], 0.3, 1.0)?;
    let mut scenario = experiments::section4_scenario(0.05, 30.0)?;
    scenario.params = ModelParams::new(3, 2, 1.0, Variant::NormalizedNonsymmetric, potential)?;

    let run = integrator::run(&scenario)?;
    let x0 = &run.trajectory.iter().find(|r| r.t == 0.0).expect("t = 0 sample").x;
    let a = model::weight_matrix(&scenario.params, x0)?;
    println!("weights at t = 0:");
    for i in 0..3 {
        println!("  {:.4} {:.4} {:.4}", a[(i, 0)], a[(i, 1)], a[(i, 2)]);
    }
    let check = model::validate_normalization(&scenario.params, x0)?;
    println!("normalization margin {:.4}\n", check.margin);

    print!(
        "{}",
        experiments::certificate_report(&scenario, &CertificateOptions::default())?
    );
    Ok(())
}
