use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use delayed_flocking::experiments::{self, CertificateOptions};
use delayed_flocking::{config, integrator, output, selftest, Error};

#[derive(Parser)]
#[command(
    name = "flock",
    version,
    about = "Delayed Cucker-Smale flocking simulator and certificate checker"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write trajectory and diagnostics CSVs.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bisect the constant delay at which consensus is lost.
    Threshold {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        tau_min: f64,
        #[arg(long)]
        tau_max: f64,
        #[arg(long)]
        tol: f64,
        /// Where to write the probe CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the decay certificates against a simulated run.
    Certify {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        which: Which,
        /// Directory for the run's CSVs, with the envelope columns filled in.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the three-agent reference experiments.
    ReproSection4 {
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

#[derive(Args)]
#[group(multiple = false)]
struct Which {
    #[arg(long)]
    l2: bool,
    #[arg(long)]
    linf: bool,
    #[arg(long)]
    both: bool,
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Simulate { config, out } => {
            let (scenario, criteria) = config::parse_config(&config)?;
            let run = integrator::run(&scenario)?;
            let (n, d) = (scenario.params.n(), scenario.params.dim());
            let name = config.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
            output::write_run(&out, name, n, d, &run)?;
            let summary = format!(
                "{name}: status {:?}, classification {}, V(T) = {}, X(T) = {}\n",
                run.status,
                experiments::classify_consensus(&run, &criteria),
                run.last().v_var,
                run.last().x_var
            );
            output::write_file(out.join("summary.txt"), &summary)?;
            print!("{summary}");
        }
        Command::Threshold {
            config,
            tau_min,
            tau_max,
            tol,
            out,
        } => {
            let (scenario, criteria) = config::parse_config(&config)?;
            let report = experiments::threshold_bisect(&scenario, &criteria, tau_min, tau_max, tol)?;
            print!("{report}");
            let path = out.unwrap_or_else(|| PathBuf::from("threshold_probes.csv"));
            output::write_file(&path, &output::threshold_csv(&report))?;
        }
        Command::Certify { config, which, out } => {
            let (scenario, criteria) = config::parse_config(&config)?;
            let opts = CertificateOptions {
                l2: which.l2 || which.both || !which.linf,
                linf: which.linf || which.both || !which.l2,
                criteria,
                ..Default::default()
            };
            let report = experiments::certificate_report(&scenario, &opts)?;
            print!("{report}");
            if let Some(out) = out {
                let (n, d) = (scenario.params.n(), scenario.params.dim());
                output::write_run(&out, "certify", n, d, &report.run)?;
                output::write_file(out.join("summary.txt"), &report.to_string())?;
            }
        }
        Command::ReproSection4 { out } => {
            let report = experiments::reproduce_section4()?;
            output::write_section4(&out, &report)?;
            print!("{report}");
        }
        Command::Selftest => {
            let report = selftest::run_selftest()?;
            print!("{report}");
            return Ok(report.passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
