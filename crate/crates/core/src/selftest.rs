//! Fast runtime invariant suite, used by `flock selftest`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::array::{AgentVectors, SquareMatrix};
use crate::config;
use crate::error::Result;
use crate::experiments::{self, ConsensusCriteria};
use crate::integrator;
use crate::metrics;
use crate::model::{self, ModelParams, PotentialSpec, Variant};
use crate::output::format_f64;
use crate::spectral::{self, LaplacianMatrix};

#[derive(Clone, Debug, PartialEq)]
pub struct SelfCheck {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelftestReport {
    pub checks: Vec<SelfCheck>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "[{}] {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        let ok = self.checks.iter().filter(|c| c.pass).count();
        writeln!(f, "{ok}/{} checks passed", self.checks.len())
    }
}

fn random_vectors(rng: &mut ChaCha8Rng, n: usize, d: usize, scale: f64) -> AgentVectors {
    let data = (0..n * d).map(|_| rng.random_range(-scale..scale)).collect();
    AgentVectors::from_flat(n, d, data).expect("shape is consistent")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn check(name: &'static str, worst: f64, tol: f64) -> SelfCheck {
    SelfCheck {
        name,
        pass: worst <= tol,
        detail: format!("worst {worst:e}, tolerance {tol:e}"),
    }
}

fn variance_identity(rng: &mut ChaCha8Rng) -> SelfCheck {
    let mut worst = 0.0_f64;
    for _ in 0..200 {
        let (n, d) = (rng.random_range(2..=8), rng.random_range(1..=3));
        let v = random_vectors(rng, n, d, 3.0);
        let (_, w) = metrics::fluctuation(&v);
        worst = worst.max(rel(metrics::variance(&v), metrics::sum_sq(&w) / n as f64));
    }
    check("variance equals mean squared fluctuation", worst, 1e-12)
}

fn quadratic_form_identity(rng: &mut ChaCha8Rng) -> Result<SelfCheck> {
    let mut worst = 0.0_f64;
    for _ in 0..200 {
        let (n, d) = (rng.random_range(2..=8), rng.random_range(1..=3));
        let lambda = rng.random_range(0.1..2.0);
        let params = ModelParams::new(n, d, lambda, Variant::MainDelay, PotentialSpec::cucker_smale(1.0)?)?;
        let x = random_vectors(rng, n, d, 2.0);
        let v = random_vectors(rng, n, d, 2.0);
        let psi = model::pairwise_psi(params.potential(), &x);
        let lhs = spectral::laplacian(&params, &x)?.quadratic_form(&v);
        let mut rhs = 0.0;
        for i in 0..n {
            for j in 0..n {
                rhs += psi[(i, j)] * v.squared_distance(i, j);
            }
        }
        rhs *= lambda / (2.0 * n as f64);
        worst = worst.max(rel(lhs, rhs));
    }
    Ok(check("Laplacian quadratic form equals weighted pair sum", worst, 1e-12))
}

fn complete_graph_fiedler() -> Result<SelfCheck> {
    let mut worst = 0.0_f64;
    for n in 2..=8 {
        let (lambda, psi0) = (1.3, 0.7);
        let psi = SquareMatrix::from_rows(&vec![vec![psi0; n]; n])?;
        let mu = spectral::fiedler(&LaplacianMatrix::from_weights(lambda, &psi))?.mu;
        worst = worst.max((mu - lambda * psi0).abs());
    }
    Ok(check(
        "uniform complete graph Fiedler number equals lambda psi0",
        worst,
        1e-10,
    ))
}

fn jacobi_reconstruction(rng: &mut ChaCha8Rng) -> Result<SelfCheck> {
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let n = rng.random_range(2..=8);
        let params = ModelParams::new(n, 2, 1.0, Variant::MainDelay, PotentialSpec::cucker_smale(0.5)?)?;
        let l = spectral::laplacian(&params, &random_vectors(rng, n, 2, 3.0))?;
        let eig = spectral::jacobi_eigen(l.matrix())?;
        let back = eig.reconstruct();
        let diff: f64 = back
            .as_slice()
            .iter()
            .zip(l.matrix().as_slice())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(diff / l.matrix().frobenius_norm());
    }
    Ok(check(
        "Jacobi eigendecomposition reconstructs the Laplacian",
        worst,
        1e-9,
    ))
}

fn consensus_fixed_point() -> Result<SelfCheck> {
    let mut worst = 0.0_f64;
    for variant in [
        Variant::MainDelay,
        Variant::FullSumBaseline,
        Variant::NormalizedNonsymmetric,
    ] {
        let mut s = experiments::section4_scenario(0.7, 3.0)?;
        s.params = ModelParams::new(3, 2, 1.0, variant, PotentialSpec::constant(0.8)?)?;
        if let integrator::InitialHistory::Ballistic { v0, .. } = &mut s.initial {
            *v0 = AgentVectors::uniform(3, &[0.4, -1.1]);
        }
        let run = integrator::run(&s)?;
        worst = run.diagnostics.iter().fold(worst, |m, r| m.max(r.v_var));
    }
    Ok(check(
        "consensus states stay in consensus for every variant",
        worst,
        1e-14,
    ))
}

fn reference_initial_values() -> Result<SelfCheck> {
    let s = experiments::section4_scenario(0.0, 0.1)?;
    let run = integrator::run(&s)?;
    let r = run.first();
    let worst = [(r.v_var, 1.0 / 9.0), (r.x_var, 4.0 / 9.0), (r.d_v, 0.5_f64.sqrt())]
        .iter()
        .map(|&(a, b)| rel(a, b))
        .fold(0.0, f64::max);
    Ok(check("three-agent initial V, X and d_V", worst, 1e-15))
}

fn number_format(rng: &mut ChaCha8Rng) -> SelfCheck {
    let mut bad = 0usize;
    for _ in 0..1000 {
        let x = f64::from_bits(rng.random::<u64>());
        if x.is_finite() && format_f64(x).parse::<f64>() != Ok(x) {
            bad += 1;
        }
    }
    SelfCheck {
        name: "17-digit number formatting round-trips",
        pass: bad == 0,
        detail: format!("{bad} of 1000 random doubles failed"),
    }
}

fn config_round_trip() -> Result<SelfCheck> {
    let s = experiments::section4_scenario(5.0, 20.0)?;
    let c = ConsensusCriteria::default();
    let (s2, c2) = config::parse_config_str(&config::serialize_config(&s, &c))?;
    Ok(SelfCheck {
        name: "config serialization round-trips",
        pass: s == s2 && c == c2,
        detail: "three-agent scenario with tau = 5".into(),
    })
}

pub fn run_selftest() -> Result<SelftestReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let checks = vec![
        variance_identity(&mut rng),
        quadratic_form_identity(&mut rng)?,
        complete_graph_fiedler()?,
        jacobi_reconstruction(&mut rng)?,
        consensus_fixed_point()?,
        reference_initial_values()?,
        number_format(&mut rng),
        config_round_trip()?,
    ];
    Ok(SelftestReport { checks })
}
