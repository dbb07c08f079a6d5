//! Scenario orchestration: consensus classification, delay-threshold bisection, the three-agent
//! reference experiment, and decay certificates.

use std::fmt;

use crate::array::AgentVectors;
use crate::delay::DelaySpec;
use crate::error::{Error, Result};
use crate::integrator::{self, InitialHistory, RunOutput, RunStatus, Scenario};
use crate::metrics::{self, BoundCheck, BoundKind, DecayCheck, TheoremBounds};
use crate::model::{ModelParams, PotentialSpec, Variant};
use crate::spectral::{self, StructuralCertificate};

/// Finite-horizon stand-ins for "bounded position variance and vanishing velocity variance".
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConsensusCriteria {
    /// `V(T)` must fall below this.
    pub eps_v: f64,
    /// `X(T)` is compared against `x_growth_factor * max(X(0), 1)`.
    pub x_growth_factor: f64,
    /// Horizon used by threshold probes.
    pub horizon: f64,
    /// Step used by threshold probes.
    pub h: f64,
}

impl Default for ConsensusCriteria {
    fn default() -> Self {
        Self {
            eps_v: 1e-3,
            x_growth_factor: 5.0,
            horizon: 200.0,
            h: 0.01,
        }
    }
}

impl ConsensusCriteria {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_v > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "eps_v must be positive, got {}",
                self.eps_v
            )));
        }
        if !(self.x_growth_factor > 1.0) {
            return Err(Error::InvalidScenario(format!(
                "x_growth_factor must exceed 1, got {}",
                self.x_growth_factor
            )));
        }
        if !(self.horizon > 0.0 && self.h > 0.0) {
            return Err(Error::InvalidScenario(
                "criteria horizon and step must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Classification {
    Consensus,
    Divergent,
    Undecided,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Consensus => "consensus",
            Classification::Divergent => "divergent",
            Classification::Undecided => "undecided",
        })
    }
}

/// Classifies a finished run.
///
/// Consensus: `V(T) < eps_v` and `X(T) < factor * max(X_start, 1)`, where `X_start` is the
/// position variance of the initial data at `t = -tau(0)`. Divergent: the run blew up, or `X`
/// increases strictly over the last quarter of the samples and ends above the same threshold.
/// Anything else is undecided.
pub fn classify_consensus(run: &RunOutput, criteria: &ConsensusCriteria) -> Classification {
    if let RunStatus::Diverged { .. } = run.status {
        return Classification::Divergent;
    }
    let rows = &run.diagnostics;
    let (first, last) = (run.first(), run.last());
    let x_limit = criteria.x_growth_factor * run.x_var_start.max(1.0);
    if last.v_var < criteria.eps_v && last.x_var < x_limit {
        return Classification::Consensus;
    }
    let t_quarter = last.t - 0.25 * (last.t - first.t);
    let tail: Vec<f64> = rows.iter().filter(|r| r.t >= t_quarter).map(|r| r.x_var).collect();
    let increasing = tail.len() >= 2 && tail.windows(2).all(|w| w[1] > w[0]);
    if increasing && last.x_var > x_limit {
        Classification::Divergent
    } else {
        Classification::Undecided
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probe {
    pub tau: f64,
    /// Horizon of the deciding run (doubled once for undecided probes).
    pub horizon: f64,
    pub raw: Classification,
    /// Classification used for the bracket; undecided after the retry counts as divergent.
    pub counted: Classification,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdReport {
    pub tau_lo: f64,
    pub tau_hi: f64,
    pub tol: f64,
    pub probes: Vec<Probe>,
    pub criteria: ConsensusCriteria,
}

impl ThresholdReport {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.tau_lo + self.tau_hi)
    }
}

impl fmt::Display for ThresholdReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "empirical consensus threshold")?;
        writeln!(f, "  bracket: [{}, {}] (tol {})", self.tau_lo, self.tau_hi, self.tol)?;
        writeln!(
            f,
            "  criteria: eps_v = {}, x_growth_factor = {}, horizon = {}, h = {}",
            self.criteria.eps_v, self.criteria.x_growth_factor, self.criteria.horizon, self.criteria.h
        )?;
        for p in &self.probes {
            writeln!(
                f,
                "  tau = {:<10} T = {:<6} {} -> {}",
                p.tau, p.horizon, p.raw, p.counted
            )?;
        }
        Ok(())
    }
}

fn probe(template: &Scenario, criteria: &ConsensusCriteria, tau: f64) -> Result<Probe> {
    let mut scenario = template.with_constant_delay(tau)?;
    scenario.h = criteria.h;
    scenario.t_end = criteria.horizon;
    let mut raw = classify_consensus(&integrator::run(&scenario)?, criteria);
    if raw == Classification::Undecided {
        scenario.t_end *= 2.0;
        raw = classify_consensus(&integrator::run(&scenario)?, criteria);
    }
    let counted = match raw {
        Classification::Undecided => Classification::Divergent,
        c => c,
    };
    Ok(Probe {
        tau,
        horizon: scenario.t_end,
        raw,
        counted,
    })
}

/// Bisects the constant delay between a consensus endpoint and a divergent one until the bracket
/// is at most `tol` wide.
pub fn threshold_bisect(
    template: &Scenario,
    criteria: &ConsensusCriteria,
    tau_min: f64,
    tau_max: f64,
    tol: f64,
) -> Result<ThresholdReport> {
    criteria.validate()?;
    if !(tau_min >= 0.0 && tau_max > tau_min) {
        return Err(Error::Bracket(format!(
            "need 0 <= tau_min < tau_max, got [{tau_min}, {tau_max}]"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Bracket(format!("tolerance must be positive, got {tol}")));
    }
    let lo_probe = probe(template, criteria, tau_min)?;
    let hi_probe = probe(template, criteria, tau_max)?;
    if lo_probe.counted != Classification::Consensus || hi_probe.counted != Classification::Divergent {
        return Err(Error::Bracket(format!(
            "endpoints must classify as consensus / divergent, got tau = {tau_min}: {} and tau = {tau_max}: {}",
            lo_probe.counted, hi_probe.counted
        )));
    }
    let mut probes = vec![lo_probe, hi_probe];
    let (mut lo, mut hi) = (tau_min, tau_max);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let p = probe(template, criteria, mid)?;
        if p.counted == Classification::Consensus {
            lo = mid;
        } else {
            hi = mid;
        }
        probes.push(p);
    }
    Ok(ThresholdReport {
        tau_lo: lo,
        tau_hi: hi,
        tol,
        probes,
        criteria: *criteria,
    })
}

/// Three agents in the plane, `psi(s) = (1 + s^2)^-2`, `lambda = 1`, ballistic history.
pub fn section4_scenario(tau: f64, t_end: f64) -> Result<Scenario> {
    let params = ModelParams::new(3, 2, 1.0, Variant::MainDelay, PotentialSpec::cucker_smale(2.0)?)?;
    let x0 = AgentVectors::from_rows(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]])?;
    let v0 = AgentVectors::from_rows(&[[1.0, 0.0], [1.0, 0.0], [0.5, 0.5]])?;
    Scenario::new(
        params,
        DelaySpec::constant(tau)?,
        InitialHistory::Ballistic { x0, v0 },
        0.01,
        t_end,
        10,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedRun {
    pub name: String,
    pub tau: f64,
    pub classification: Classification,
    pub output: RunOutput,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Section4Report {
    pub runs: Vec<NamedRun>,
    pub criteria: ConsensusCriteria,
}

impl Section4Report {
    pub fn run(&self, name: &str) -> Option<&NamedRun> {
        self.runs.iter().find(|r| r.name == name)
    }
}

impl fmt::Display for Section4Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "three-agent reference experiment (d = 2, N = 3, psi = (1+s^2)^-2, lambda = 1)"
        )?;
        writeln!(
            f,
            "criteria: eps_v = {}, x_growth_factor = {}",
            self.criteria.eps_v, self.criteria.x_growth_factor
        )?;
        for r in &self.runs {
            let (a, b) = (r.output.first(), r.output.last());
            writeln!(
                f,
                "{}: tau = {}, T = {}, classification = {}, X(-tau) = {}, X(0) = {}, X(T) = {}, V(0) = {}, V(T) = {}",
                r.name, r.tau, b.t, r.classification, r.output.x_var_start, a.x_var, b.x_var, a.v_var, b.v_var
            )?;
        }
        Ok(())
    }
}

/// Runs `tau = 0` on `[0, 10]` and `[0, 50]`, and `tau = 5` on `[0, 20]` (history on `[-5, 0]`).
pub fn reproduce_section4() -> Result<Section4Report> {
    let criteria = ConsensusCriteria::default();
    let runs = [
        ("tau0_T10", 0.0, 10.0),
        ("tau0_T50", 0.0, 50.0),
        ("tau5_T20", 5.0, 20.0),
    ]
    .into_iter()
    .map(|(name, tau, t_end)| {
        let output = integrator::run(&section4_scenario(tau, t_end)?)?;
        Ok(NamedRun {
            name: name.to_string(),
            tau,
            classification: classify_consensus(&output, &criteria),
            output,
        })
    })
    .collect::<Result<Vec<_>>>()?;
    Ok(Section4Report { runs, criteria })
}

/// Minimum Fiedler number and min-sum quantity over every emitted sample, seed rows included.
pub fn structural_certificate(params: &ModelParams, run: &RunOutput) -> Result<StructuralCertificate> {
    let mut samples = Vec::with_capacity(run.trajectory.len() + run.diagnostics.len());
    for row in run.trajectory.iter().filter(|r| r.t < 0.0) {
        let mu = spectral::fiedler(&spectral::laplacian(params, &row.x)?)?.mu;
        let a = spectral::augment_diagonal(&metrics::analysis_weights(params, &row.x));
        samples.push((row.t, mu, spectral::psi_star_empirical(&a)));
    }
    samples.extend(run.diagnostics.iter().map(|r| (r.t, r.mu, r.psi_star)));
    Ok(StructuralCertificate::from_samples(samples))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertificateOptions {
    pub l2: bool,
    pub linf: bool,
    /// Use this `gamma` instead of the sampled minimum Fiedler number.
    pub gamma: Option<f64>,
    /// Use this `psi*` instead of the sampled minimum.
    pub psi_star: Option<f64>,
    /// Relative slack for the functional monotonicity check.
    pub decay_slack: f64,
    pub criteria: ConsensusCriteria,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        Self {
            l2: true,
            linf: true,
            gamma: None,
            psi_star: None,
            decay_slack: 1e-6,
            criteria: ConsensusCriteria::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CertificateOutcome {
    NotApplicable(String),
    /// The delay condition fails, so neither rate nor constant is evaluated.
    DelayAboveThreshold,
    Checked {
        bound: BoundCheck,
        decay: DecayCheck,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificateSection {
    pub kind: BoundKind,
    pub bounds: Option<TheoremBounds>,
    pub outcome: CertificateOutcome,
}

impl CertificateSection {
    /// True only when the envelope and the functional decay both checked out.
    pub fn passed(&self) -> bool {
        matches!(&self.outcome, CertificateOutcome::Checked { bound, decay } if bound.pass && decay.pass)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificateReport {
    pub variant: Variant,
    pub classification: Classification,
    pub structural: StructuralCertificate,
    pub sections: Vec<CertificateSection>,
    pub run: RunOutput,
}

impl CertificateReport {
    pub fn section(&self, kind: BoundKind) -> Option<&CertificateSection> {
        self.sections.iter().find(|s| s.kind == kind)
    }
}

/// Runs the scenario and checks the requested decay certificates against it.
pub fn certificate_report(scenario: &Scenario, opts: &CertificateOptions) -> Result<CertificateReport> {
    let mut run = integrator::run(scenario)?;
    let params = &scenario.params;
    let structural = structural_certificate(params, &run)?;
    let classification = classify_consensus(&run, &opts.criteria);
    let bounds_delay = scenario.delay.bounds();
    let n = params.n();
    let first = run.first().clone();

    let mut sections = Vec::new();
    if opts.l2 {
        let section = if !params.variant().is_symmetric() {
            na(
                BoundKind::L2,
                format!("{} weights are not symmetric", params.variant().name()),
            )
        } else {
            let gamma = opts.gamma.unwrap_or(structural.gamma_emp);
            if !(gamma > 0.0) {
                na(BoundKind::L2, format!("Fiedler lower bound {gamma} is not positive"))
            } else {
                let b = metrics::bounds_l2(
                    params.lambda(),
                    gamma,
                    bounds_delay.tau_bar,
                    bounds_delay.c,
                    run.seed_integral_l2,
                    first.v_var,
                    n,
                )?;
                checked_section(&mut run, b, opts.decay_slack)?
            }
        };
        sections.push(section);
    }
    if opts.linf {
        let min_margin = run
            .diagnostics
            .iter()
            .map(|r| r.normalization_margin)
            .fold(f64::INFINITY, f64::min);
        let section = if params.variant() == Variant::FullSumBaseline {
            na(
                BoundKind::Linf,
                "full_sum_baseline is outside the diameter analysis".into(),
            )
        } else if !(min_margin > 0.0) {
            na(
                BoundKind::Linf,
                format!("normalization margin {min_margin} is not positive"),
            )
        } else {
            let psi_star = opts.psi_star.unwrap_or(structural.psi_star_emp);
            if !(psi_star > 0.0) {
                na(BoundKind::Linf, format!("psi* = {psi_star} is not positive"))
            } else {
                let b = metrics::bounds_linf(
                    params.lambda(),
                    psi_star,
                    bounds_delay.tau_bar,
                    bounds_delay.c,
                    run.seed_integral_linf,
                    first.d_v,
                    n,
                )?;
                checked_section(&mut run, b, opts.decay_slack)?
            }
        };
        sections.push(section);
    }
    Ok(CertificateReport {
        variant: params.variant(),
        classification,
        structural,
        sections,
        run,
    })
}

fn na(kind: BoundKind, reason: String) -> CertificateSection {
    CertificateSection {
        kind,
        bounds: None,
        outcome: CertificateOutcome::NotApplicable(reason),
    }
}

fn checked_section(run: &mut RunOutput, bounds: TheoremBounds, slack: f64) -> Result<CertificateSection> {
    if !bounds.valid {
        return Ok(CertificateSection {
            kind: bounds.kind,
            bounds: Some(bounds),
            outcome: CertificateOutcome::DelayAboveThreshold,
        });
    }
    metrics::apply_bounds(&mut run.diagnostics, &bounds);
    let bound = metrics::verify_bound(&run.diagnostics, &bounds)?;
    let decay = metrics::check_functional_decay(&run.diagnostics, &bounds, slack)?;
    Ok(CertificateSection {
        kind: bounds.kind,
        bounds: Some(bounds),
        outcome: CertificateOutcome::Checked { bound, decay },
    })
}

impl fmt::Display for CertificateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "decay certificate for variant {}", self.variant.name())?;
        writeln!(
            f,
            "  run status: {:?}, classification: {}",
            self.run.status, self.classification
        )?;
        writeln!(
            f,
            "  sampled gamma = {}, sampled psi* = {} over {} samples",
            self.structural.gamma_emp,
            self.structural.psi_star_emp,
            self.structural.sample_times.len()
        )?;
        for s in &self.sections {
            writeln!(f, "[{}]", s.kind.name())?;
            if let Some(b) = &s.bounds {
                writeln!(
                    f,
                    "  lambda = {}, structural constant = {}, tau_bar = {}, c = {}",
                    b.inputs.lambda, b.inputs.structural, b.inputs.tau_bar, b.inputs.c
                )?;
                writeln!(f, "  tau0 = {}, delay measure = {}", b.tau0, b.delay_measure)?;
                if let (Some(beta), Some(r), Some(c)) = (b.beta, b.r, b.c_const) {
                    writeln!(f, "  beta = {beta}, r = {r}, C = {c}")?;
                }
            }
            match &s.outcome {
                CertificateOutcome::NotApplicable(why) => writeln!(f, "  not applicable: {why}")?,
                CertificateOutcome::DelayAboveThreshold => writeln!(f, "  delay above threshold: bounds not checked")?,
                CertificateOutcome::Checked { bound, decay } => {
                    writeln!(
                        f,
                        "  envelope: max violation {:e} at t = {} -> {}",
                        bound.max_violation,
                        bound.worst_t,
                        if bound.pass { "pass" } else { "FAIL" }
                    )?;
                    writeln!(
                        f,
                        "  functional decay: max relative increase {:e} at t = {} -> {}",
                        decay.max_rel_increase,
                        decay.worst_t,
                        if decay.pass { "pass" } else { "FAIL" }
                    )?;
                    writeln!(f, "  certificate: {}", if s.passed() { "PASS" } else { "FAIL" })?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consensus_initial_data_is_consensus() {
        let mut s = section4_scenario(0.5, 10.0).unwrap();
        let InitialHistory::Ballistic { x0, .. } = s.initial.clone() else {
            unreachable!()
        };
        s.initial = InitialHistory::Ballistic {
            x0,
            v0: AgentVectors::uniform(3, &[0.3, -0.2]),
        };
        let run = integrator::run(&s).unwrap();
        assert_eq!(
            classify_consensus(&run, &ConsensusCriteria::default()),
            Classification::Consensus
        );
        assert!(run.diagnostics.iter().all(|r| r.v_var <= 1e-14));
    }

    #[test]
    fn degenerate_bracket_rejected() {
        let s = section4_scenario(0.0, 1.0).unwrap();
        let err = threshold_bisect(&s, &ConsensusCriteria::default(), 1.0, 1.0, 0.1).unwrap_err();
        assert!(matches!(err, Error::Bracket(_)));
    }

    #[test]
    fn same_classification_at_both_ends_rejected() {
        let s = section4_scenario(0.0, 1.0).unwrap();
        let criteria = ConsensusCriteria {
            horizon: 50.0,
            ..Default::default()
        };
        let err = threshold_bisect(&s, &criteria, 0.0, 0.05, 0.01).unwrap_err();
        assert!(err.to_string().contains("consensus"), "{err}");
    }

    #[test]
    fn above_threshold_certificate_is_gated() {
        let mut s = section4_scenario(1.0, 5.0).unwrap();
        s.params = ModelParams::new(3, 2, 1.0, Variant::MainDelay, PotentialSpec::constant(0.9).unwrap()).unwrap();
        let rep = certificate_report(&s, &CertificateOptions::default()).unwrap();
        for sec in &rep.sections {
            assert_eq!(sec.outcome, CertificateOutcome::DelayAboveThreshold);
            let b = sec.bounds.unwrap();
            assert!(b.r.is_none() && b.c_const.is_none());
            assert!(!sec.passed());
        }
        assert!(rep.to_string().contains("delay above threshold"));
    }
}
