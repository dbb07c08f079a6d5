//! The three-agent reference runs: no delay for T = 10 and T = 50, then tau = 5 for T = 20.
//!
//! `cargo run --release --example section4 -- [out_dir]` also writes the CSV bundle.

use delayed_flocking::{experiments, output};

fn main() -> delayed_flocking::Result<()> {
    let report = experiments::reproduce_section4()?;
    print!("{report}");
    if let Some(dir) = std::env::args().nth(1) {
        output::write_section4(std::path::Path::new(&dir), &report)?;
        println!("wrote {dir}");
    }
    Ok(())
}
