//! Potentials, communication weights and the velocity fields of the delayed models.
//!
//! Three velocity laws are supported:
//!
//! * [`Variant::MainDelay`]: `v_i' = (lambda/N) sum_{j != i} psi_ij(t - tau) (v_j(t - tau) - v_i(t))`,
//!   where only the neighbours' information is delayed.
//! * [`Variant::NormalizedNonsymmetric`]: same law with the nonsymmetric weights
//!   `a_ij = N psi_ij / sum_k psi_ik`.
//! * [`Variant::FullSumBaseline`]: `v_i' = lambda sum_j a_ij(t - tau) v_j(t - tau) - lambda v_i(t)`
//!   with row-stochastic `a`, the comparison model whose own-velocity damping does not depend on
//!   the weights.
//!
//! In every case positions enter the weights at the delayed time `t - tau(t)`.

use serde::{Deserialize, Serialize};

use crate::array::{AgentVectors, SquareMatrix};
use crate::error::{Error, Result};

/// Distance-to-weight law `psi`. Every constructor enforces `0 < psi <= 1`.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialSpec {
    /// `psi(s) = (1 + s^2)^(-beta)`.
    CuckerSmale {
        beta: f64,
    },
    Constant {
        psi0: f64,
    },
    /// Piecewise linear in the distance, clamped to the end values outside the sampled range.
    Table {
        distances: Vec<f64>,
        weights: Vec<f64>,
        psi_min: f64,
        psi_max: f64,
    },
}

impl PotentialSpec {
    pub fn cucker_smale(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidPotential(format!(
                "cucker_smale exponent beta must be a finite nonnegative number, got {beta}"
            )));
        }
        Ok(Self::CuckerSmale { beta })
    }

    pub fn constant(psi0: f64) -> Result<Self> {
        if !(psi0 > 0.0 && psi0 <= 1.0) {
            return Err(Error::InvalidPotential(format!(
                "constant weight psi0 must lie in (0, 1], got {psi0}"
            )));
        }
        Ok(Self::Constant { psi0 })
    }

    pub fn table(distances: Vec<f64>, weights: Vec<f64>, psi_min: f64, psi_max: f64) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidPotential(msg));
        if distances.is_empty() || distances.len() != weights.len() {
            return bad(format!(
                "table needs matching non-empty distance and weight lists (got {} and {})",
                distances.len(),
                weights.len()
            ));
        }
        if !(psi_min > 0.0 && psi_min <= psi_max && psi_max <= 1.0) {
            return bad(format!(
                "table bounds must satisfy 0 < psi_min <= psi_max <= 1 (got {psi_min}, {psi_max})"
            ));
        }
        if !(distances[0] >= 0.0) || distances.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("table distances must be nonnegative and strictly increasing".into());
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= psi_min && **w <= psi_max)) {
            return bad(format!(
                "table weight {w} outside declared bounds [{psi_min}, {psi_max}]"
            ));
        }
        Ok(Self::Table {
            distances,
            weights,
            psi_min,
            psi_max,
        })
    }

    /// `psi(s)` for a distance `s >= 0`.
    pub fn eval(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("potential evaluated at negative distance {s}")));
        }
        Ok(self.eval_unchecked(s))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, s: f64) -> f64 {
        match self {
            Self::CuckerSmale { beta } => {
                if *beta == 0.0 {
                    1.0
                } else {
                    (1.0 + s * s).powf(-beta)
                }
            }
            Self::Constant { psi0 } => *psi0,
            Self::Table { distances, weights, .. } => {
                let last = distances.len() - 1;
                if s <= distances[0] {
                    return weights[0];
                }
                if s >= distances[last] {
                    return weights[last];
                }
                let k = distances.partition_point(|&d| d <= s) - 1;
                let theta = (s - distances[k]) / (distances[k + 1] - distances[k]);
                weights[k] + theta * (weights[k + 1] - weights[k])
            }
        }
    }

    /// A certified strictly positive lower bound on `psi`, when one exists.
    pub fn lower_bound(&self) -> Option<f64> {
        match self {
            Self::CuckerSmale { beta } if *beta == 0.0 => Some(1.0),
            Self::CuckerSmale { .. } => None,
            Self::Constant { psi0 } => Some(*psi0),
            Self::Table { psi_min, .. } => Some(*psi_min),
        }
    }

    /// Supremum of `psi` over `[0, inf)`.
    pub fn upper_bound(&self) -> f64 {
        match self {
            Self::CuckerSmale { .. } => 1.0,
            Self::Constant { psi0 } => *psi0,
            Self::Table { psi_max, .. } => *psi_max,
        }
    }
}

/// Free-function form of [`PotentialSpec::eval`].
pub fn psi_eval(spec: &PotentialSpec, s: f64) -> Result<f64> {
    spec.eval(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    MainDelay,
    FullSumBaseline,
    NormalizedNonsymmetric,
}

impl Variant {
    /// Whether the communication weights `a_ij` are symmetric in `i, j`.
    pub fn is_symmetric(self) -> bool {
        matches!(self, Variant::MainDelay)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::MainDelay => "main_delay",
            Variant::FullSumBaseline => "full_sum_baseline",
            Variant::NormalizedNonsymmetric => "normalized_nonsymmetric",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    n: usize,
    d: usize,
    lambda: f64,
    variant: Variant,
    potential: PotentialSpec,
}

impl ModelParams {
    pub fn new(n: usize, d: usize, lambda: f64, variant: Variant, potential: PotentialSpec) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("need at least 2 agents, got {n}")));
        }
        if d < 1 {
            return Err(Error::InvalidParams("dimension must be at least 1".into()));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParams(format!(
                "coupling strength lambda must be positive and finite, got {lambda}"
            )));
        }
        if variant == Variant::NormalizedNonsymmetric && potential.lower_bound().is_none() {
            return Err(Error::InvalidParams(
                "normalized_nonsymmetric weights need a potential with a positive lower bound \
                 (constant, table, or cucker_smale with beta = 0)"
                    .into(),
            ));
        }
        Ok(Self {
            n,
            d,
            lambda,
            variant,
            potential,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    #[inline]
    pub fn variant(&self) -> Variant {
        self.variant
    }

    #[inline]
    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    pub fn with_variant(&self, variant: Variant) -> Result<Self> {
        Self::new(self.n, self.d, self.lambda, variant, self.potential.clone())
    }
}

/// Positions and velocities of all agents at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseState {
    pub t: f64,
    pub x: AgentVectors,
    pub v: AgentVectors,
}

impl PhaseState {
    pub fn new(t: f64, x: AgentVectors, v: AgentVectors) -> Result<Self> {
        if !x.same_shape(&v) {
            return Err(Error::Shape {
                expected: format!("velocities {} x {}", x.n(), x.dim()),
                found: format!("{} x {}", v.n(), v.dim()),
            });
        }
        if !(x.is_finite() && v.is_finite() && t.is_finite()) {
            return Err(Error::NonFinite(format!("phase state at t = {t}")));
        }
        Ok(Self { t, x, v })
    }

    pub(crate) fn check(&self, params: &ModelParams, what: &str) -> Result<()> {
        self.x.check_shape(params.n(), params.dim(), what)?;
        self.v.check_shape(params.n(), params.dim(), what)
    }
}

/// Symmetric `psi_ij = psi(|x_i - x_j|)` with `psi_ii = psi(0)`.
pub fn pairwise_psi(potential: &PotentialSpec, x: &AgentVectors) -> SquareMatrix {
    let n = x.n();
    let mut m = SquareMatrix::zeros(n);
    let diag = potential.eval_unchecked(0.0);
    for i in 0..n {
        m[(i, i)] = diag;
        for j in (i + 1)..n {
            let w = potential.eval_unchecked(x.distance(i, j));
            m[(i, j)] = w;
            m[(j, i)] = w;
        }
    }
    m
}

/// Communication weights evaluated at the (delayed) positions `x`.
///
/// `main_delay` gives `psi_ij` and `normalized_nonsymmetric` gives `N psi_ij / sum_k psi_ik`
/// (the denominator includes `k = i`); both have a zero diagonal. `full_sum_baseline` gives the
/// row-stochastic `psi_ij / sum_k psi_ik` *including* its diagonal, since that model sums over
/// all `j`.
pub fn weight_matrix(params: &ModelParams, x: &AgentVectors) -> Result<SquareMatrix> {
    x.check_shape(params.n(), params.dim(), "positions")?;
    if !x.is_finite() {
        return Err(Error::NonFinite("positions passed to weight_matrix".into()));
    }
    Ok(weights_unchecked(params, x))
}

pub(crate) fn weights_unchecked(params: &ModelParams, x: &AgentVectors) -> SquareMatrix {
    let n = params.n();
    let mut w = pairwise_psi(params.potential(), x);
    match params.variant() {
        Variant::MainDelay => {
            for i in 0..n {
                w[(i, i)] = 0.0;
            }
        }
        Variant::NormalizedNonsymmetric => {
            for i in 0..n {
                let scale = n as f64 / w.row(i).iter().sum::<f64>();
                for j in 0..n {
                    w[(i, j)] = if i == j { 0.0 } else { w[(i, j)] * scale };
                }
            }
        }
        Variant::FullSumBaseline => {
            for i in 0..n {
                let scale = 1.0 / w.row(i).iter().sum::<f64>();
                for j in 0..n {
                    w[(i, j)] *= scale;
                }
            }
        }
    }
    w
}

/// Right-hand side `(x', v')` given the current state and the state at `t - tau(t)`.
pub fn rhs(params: &ModelParams, now: &PhaseState, delayed: &PhaseState) -> Result<(AgentVectors, AgentVectors)> {
    now.check(params, "current state")?;
    delayed.check(params, "delayed state")?;
    let a = weights_unchecked(params, &delayed.x);
    Ok((now.v.clone(), accel(params, &a, &now.v, &delayed.v)))
}

/// Velocity field with precomputed weights `a` (taken at the delayed positions).
pub(crate) fn accel(
    params: &ModelParams,
    a: &SquareMatrix,
    v_now: &AgentVectors,
    v_delayed: &AgentVectors,
) -> AgentVectors {
    let n = params.n();
    let d = params.dim();
    let lambda = params.lambda();
    let mut out = AgentVectors::zeros(n, d);
    match params.variant() {
        Variant::MainDelay | Variant::NormalizedNonsymmetric => {
            let scale = lambda / n as f64;
            for i in 0..n {
                let vi = v_now.row(i);
                let acc = out.row_mut(i);
                for j in (0..n).filter(|&j| j != i) {
                    let w = a[(i, j)];
                    for ((o, vj), vi) in acc.iter_mut().zip(v_delayed.row(j)).zip(vi) {
                        *o += w * (vj - vi);
                    }
                }
                acc.iter_mut().for_each(|o| *o *= scale);
            }
        }
        Variant::FullSumBaseline => {
            for i in 0..n {
                let acc = out.row_mut(i);
                for j in 0..n {
                    let w = a[(i, j)];
                    for (o, vj) in acc.iter_mut().zip(v_delayed.row(j)) {
                        *o += w * vj;
                    }
                }
                for (o, vi) in acc.iter_mut().zip(v_now.row(i)) {
                    *o = lambda * (*o - vi);
                }
            }
        }
    }
    out
}

/// Outcome of checking `max_i (1/N) sum_{j != i} a_ij < 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizationCheck {
    pub pass: bool,
    /// `1 - max_i (1/N) sum_{j != i} a_ij`.
    pub margin: f64,
}

/// Margin of the normalization condition required by the diameter (sup-norm) analysis.
///
/// `full_sum_baseline` is measured on its off-diagonal row-stochastic weights.
pub fn validate_normalization(params: &ModelParams, x: &AgentVectors) -> Result<NormalizationCheck> {
    let a = weight_matrix(params, x)?;
    Ok(normalization_margin(&a))
}

pub(crate) fn normalization_margin(a: &SquareMatrix) -> NormalizationCheck {
    let n = a.n();
    let worst = (0..n)
        .map(|i| (0..n).filter(|&j| j != i).map(|j| a[(i, j)]).sum::<f64>() / n as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    let margin = 1.0 - worst;
    NormalizationCheck {
        pass: margin > 0.0,
        margin,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, d: usize, lambda: f64, variant: Variant, pot: PotentialSpec) -> ModelParams {
        ModelParams::new(n, d, lambda, variant, pot).unwrap()
    }

    #[test]
    fn psi_values() {
        let cs = PotentialSpec::cucker_smale(2.0).unwrap();
        assert_eq!(psi_eval(&cs, 0.0).unwrap(), 1.0);
        assert_eq!(psi_eval(&cs, 1.0).unwrap(), 0.25);
        let c = PotentialSpec::constant(0.5).unwrap();
        assert_eq!(psi_eval(&c, 7.3).unwrap(), 0.5);
        assert!(matches!(psi_eval(&cs, -1.0), Err(Error::Domain(_))));
        assert_eq!(psi_eval(&PotentialSpec::cucker_smale(0.0).unwrap(), 1e6).unwrap(), 1.0);
    }

    #[test]
    fn potential_construction_gates() {
        assert!(PotentialSpec::constant(1.2).is_err());
        assert!(PotentialSpec::constant(0.0).is_err());
        assert!(PotentialSpec::cucker_smale(-0.1).is_err());
        assert!(PotentialSpec::table(vec![0.0, 1.0], vec![1.0, 0.5], 0.5, 1.0).is_ok());
        assert!(PotentialSpec::table(vec![0.0, 1.0], vec![1.0, 0.4], 0.5, 1.0).is_err());
        assert!(PotentialSpec::table(vec![1.0, 1.0], vec![1.0, 0.5], 0.5, 1.0).is_err());
        assert!(PotentialSpec::table(vec![0.0], vec![0.5], 0.0, 1.0).is_err());
    }

    #[test]
    fn table_interpolates_and_clamps() {
        let t = PotentialSpec::table(vec![0.0, 1.0, 3.0], vec![1.0, 0.6, 0.2], 0.2, 1.0).unwrap();
        assert_eq!(t.eval(0.5).unwrap(), 0.8);
        assert!((t.eval(2.0).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(t.eval(10.0).unwrap(), 0.2);
    }

    #[test]
    fn nonsymmetric_needs_lower_bound() {
        let cs = PotentialSpec::cucker_smale(2.0).unwrap();
        assert!(ModelParams::new(3, 2, 1.0, Variant::NormalizedNonsymmetric, cs).is_err());
        assert!(ModelParams::new(1, 2, 1.0, Variant::MainDelay, PotentialSpec::constant(1.0).unwrap()).is_err());
    }

    #[test]
    fn weights_two_agents() {
        let p = params(2, 2, 1.0, Variant::MainDelay, PotentialSpec::cucker_smale(2.0).unwrap());
        let x = AgentVectors::from_rows(&[[0.0, 0.0], [1.0, 0.0]]).unwrap();
        let w = weight_matrix(&p, &x).unwrap();
        assert_eq!(w.as_slice(), &[0.0, 0.25, 0.25, 0.0]);

        let coincident = AgentVectors::zeros(2, 2);
        let w = weight_matrix(&p, &coincident).unwrap();
        assert_eq!(w[(0, 1)], 1.0);
    }

    #[test]
    fn nonsymmetric_constant_weights_are_one() {
        let p = params(
            3,
            2,
            1.0,
            Variant::NormalizedNonsymmetric,
            PotentialSpec::constant(0.5).unwrap(),
        );
        let x = AgentVectors::from_rows(&[[0.0, 0.0], [1.0, 0.0], [4.0, 2.0]]).unwrap();
        let w = weight_matrix(&p, &x).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 0.0 } else { 1.0 };
                assert!((w[(i, j)] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn non_finite_positions_rejected() {
        let p = params(2, 1, 1.0, Variant::MainDelay, PotentialSpec::constant(1.0).unwrap());
        let x = AgentVectors::from_rows(&[[0.0], [f64::NAN]]).unwrap();
        assert!(matches!(weight_matrix(&p, &x), Err(Error::NonFinite(_))));
    }

    #[test]
    fn two_agent_field() {
        let p = params(2, 1, 1.0, Variant::MainDelay, PotentialSpec::constant(1.0).unwrap());
        let x = AgentVectors::from_rows(&[[0.0], [1.0]]).unwrap();
        let v = AgentVectors::from_rows(&[[1.0], [0.0]]).unwrap();
        let s = PhaseState::new(0.0, x, v).unwrap();
        let (xd, vd) = rhs(&p, &s, &s).unwrap();
        assert_eq!(xd, s.v);
        assert_eq!(vd.as_slice(), &[-0.5, 0.5]);
    }

    #[test]
    fn rhs_rejects_shape_mismatch() {
        let p = params(3, 2, 1.0, Variant::MainDelay, PotentialSpec::constant(1.0).unwrap());
        let s = PhaseState::new(0.0, AgentVectors::zeros(2, 2), AgentVectors::zeros(2, 2)).unwrap();
        assert!(matches!(rhs(&p, &s, &s), Err(Error::Shape { .. })));
    }

    #[test]
    fn consensus_is_fixed_point_for_every_variant() {
        for variant in [
            Variant::MainDelay,
            Variant::FullSumBaseline,
            Variant::NormalizedNonsymmetric,
        ] {
            let p = params(4, 2, 1.7, variant, PotentialSpec::constant(0.8).unwrap());
            let x = AgentVectors::from_rows(&[[0.0, 0.0], [1.0, 0.3], [-2.0, 5.0], [0.1, 0.1]]).unwrap();
            let u = AgentVectors::uniform(4, &[0.3, -1.1]);
            let now = PhaseState::new(1.0, x.clone(), u.clone()).unwrap();
            let delayed = PhaseState::new(0.5, x.add_scaled(-0.5, &u), u).unwrap();
            let (_, vd) = rhs(&p, &now, &delayed).unwrap();
            assert!(
                vd.as_slice().iter().all(|&a| a == 0.0 || a.abs() < 1e-15),
                "{variant:?}: {vd:?}"
            );
        }
    }

    #[test]
    fn normalization_margins() {
        let x = AgentVectors::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        let p = params(3, 1, 1.0, Variant::MainDelay, PotentialSpec::constant(0.5).unwrap());
        let c = validate_normalization(&p, &x).unwrap();
        assert!(c.pass);
        assert!((c.margin - 2.0 / 3.0).abs() < 1e-15);

        let p = params(3, 1, 1.0, Variant::MainDelay, PotentialSpec::constant(1.0).unwrap());
        let c = validate_normalization(&p, &x).unwrap();
        assert!(c.pass);
        assert!((c.margin - 1.0 / 3.0).abs() < 1e-15);

        let p = params(2, 1, 1.0, Variant::MainDelay, PotentialSpec::cucker_smale(1.0).unwrap());
        let c = validate_normalization(&p, &AgentVectors::zeros(2, 1)).unwrap();
        assert!(c.pass && c.margin >= 0.5);
    }
}
