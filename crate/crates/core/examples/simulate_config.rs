//! Load a JSON scenario and integrate it, printing a few diagnostics rows.
//!
//! `cargo run --release --example simulate_config -- examples/section4.json`

use delayed_flocking::{config, experiments, integrator};

fn main() -> delayed_flocking::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/section4.json").into());
    let (scenario, criteria) = config::parse_config(&path)?;
    let run = integrator::run(&scenario)?;
    for row in run.diagnostics.iter().filter(|r| r.t >= 0.0).step_by(50) {
        println!(
            "t = {:>6.2}  X = {:.6}  V = {:.3e}  d_V = {:.3e}",
            row.t, row.x_var, row.v_var, row.d_v
        );
    }
    println!("{}", experiments::classify_consensus(&run, &criteria));
    Ok(())
}
