//! Scalar diagnostics, Lyapunov functionals, and the constants of the two decay certificates.
//!
//! The quadratic (L2) certificate bounds the velocity variance of symmetric models:
//!
//! ```text
//! tau0 = gamma^2 / (2 lambda^2) * (1 - c) / (2 lambda^2 + gamma^2),   valid iff tau_bar^2 e^tau_bar < tau0
//! V(t) <= C exp(-r t)
//! ```
//!
//! The sup-norm (Linf) certificate bounds the velocity diameter of possibly nonsymmetric models:
//!
//! ```text
//! tau0 = (1 - c) / lambda * psi* / (psi* + 2),   valid iff tau_bar e^tau_bar < tau0
//! d_V(t) <= C exp(-r t)
//! ```
//!
//! All delay-window integrals are trapezoid sums on the integrator grid (see
//! [`HistoryBuffer::cells`]).

use crate::array::{AgentVectors, SquareMatrix};
use crate::delay::DelaySpec;
use crate::error::{Error, Result};
use crate::history::{HistoryBuffer, IntegrandCell};
use crate::model::{self, ModelParams, Variant};
use crate::spectral;

/// `(1 / 2N^2) sum_{i,j} |a_i - a_j|^2` over ordered pairs.
pub fn variance(a: &AgentVectors) -> f64 {
    let n = a.n();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += a.squared_distance(i, j);
        }
    }
    s / (2.0 * (n * n) as f64)
}

/// Position variance `X`.
pub fn variance_x(x: &AgentVectors) -> f64 {
    variance(x)
}

/// Velocity variance `V`.
pub fn variance_v(v: &AgentVectors) -> f64 {
    variance(v)
}

/// Mean velocity and fluctuations `w_i = v_i - mean`. The mean uses compensated summation.
pub fn fluctuation(v: &AgentVectors) -> (Vec<f64>, AgentVectors) {
    let (n, d) = (v.n(), v.dim());
    let mean: Vec<f64> = (0..d)
        .map(|k| neumaier_sum((0..n).map(|i| v[(i, k)])) / n as f64)
        .collect();
    let mut w = v.clone();
    for i in 0..n {
        for (wk, m) in w.row_mut(i).iter_mut().zip(&mean) {
            *wk -= m;
        }
    }
    (mean, w)
}

fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn diameter(a: &AgentVectors) -> f64 {
    let n = a.n();
    let mut best = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            best = best.max(a.squared_distance(i, j));
        }
    }
    best.sqrt()
}

/// `(d_X, d_V)`.
pub fn diameters(x: &AgentVectors, v: &AgentVectors) -> (f64, f64) {
    (diameter(x), diameter(v))
}

/// `sum_i |a_i|^2`.
pub fn sum_sq(a: &AgentVectors) -> f64 {
    a.as_slice().iter().map(|v| v * v).sum()
}

/// `max_j |a_j|`.
pub fn max_norm(a: &AgentVectors) -> f64 {
    a.rows()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

fn window(t: f64, delay: &DelaySpec) -> (f64, f64) {
    (t - delay.eval(t), t)
}

fn trapezoid(cells: &[IntegrandCell]) -> f64 {
    cells.iter().map(|c| 0.5 * (c.s1 - c.s0) * (c.g0 + c.g1)).sum()
}

/// `int_a^b e^{-(b-s)} int_s^b g(sigma) dsigma ds` by nested trapezoid sums on the cells.
fn nested_exponential(cells: &[IntegrandCell], b: f64) -> f64 {
    let mut inner = 0.0; // int_s^b g at the current cell's right end
    let mut total = 0.0;
    for c in cells.iter().rev() {
        let right = (-(b - c.s1)).exp() * inner;
        inner += 0.5 * (c.s1 - c.s0) * (c.g0 + c.g1);
        let left = (-(b - c.s0)).exp() * inner;
        total += 0.5 * (c.s1 - c.s0) * (left + right);
    }
    total
}

/// `R_tau(t) = (1/N) int_{t - tau(t)}^t sum_i |v_i'|^2`.
pub fn r_tau(buffer: &HistoryBuffer, t: f64, delay: &DelaySpec) -> Result<f64> {
    let (a, b) = window(t, delay);
    let n = buffer.last().v.n() as f64;
    Ok(trapezoid(&buffer.cells(a, b, sum_sq)?) / n)
}

/// `sigma_tau(t) = int_{t - tau(t)}^t max_j |v_j'|`.
pub fn sigma_tau(buffer: &HistoryBuffer, t: f64, delay: &DelaySpec) -> Result<f64> {
    let (a, b) = window(t, delay);
    Ok(trapezoid(&buffer.cells(a, b, max_norm)?))
}

/// Double integral `int_{t-tau}^t e^{-(t-s)} int_s^t sum_i |v_i'|^2` (no `beta/N` factor).
pub fn delay_energy_l2(buffer: &HistoryBuffer, t: f64, delay: &DelaySpec) -> Result<f64> {
    let (a, b) = window(t, delay);
    Ok(nested_exponential(&buffer.cells(a, b, sum_sq)?, b))
}

/// Double integral `int_{t-tau}^t e^{-(t-s)} int_s^t max_j |v_j'|` (no `beta` factor).
pub fn delay_energy_linf(buffer: &HistoryBuffer, t: f64, delay: &DelaySpec) -> Result<f64> {
    let (a, b) = window(t, delay);
    Ok(nested_exponential(&buffer.cells(a, b, max_norm)?, b))
}

/// Quadratic functional `L(t) = ||w||^2 / 2N + (beta/N) * delay_energy_l2`.
pub fn lyapunov_l2(buffer: &HistoryBuffer, t: f64, beta: f64, delay: &DelaySpec) -> Result<f64> {
    let (_, v) = buffer.interpolate(t)?;
    let n = v.n() as f64;
    let (_, w) = fluctuation(&v);
    Ok(sum_sq(&w) / (2.0 * n) + beta / n * delay_energy_l2(buffer, t, delay)?)
}

/// Diameter functional `F(t) = d_V + beta * delay_energy_linf`.
pub fn lyapunov_linf(buffer: &HistoryBuffer, t: f64, beta: f64, delay: &DelaySpec) -> Result<f64> {
    let (_, v) = buffer.interpolate(t)?;
    Ok(diameter(&v) + beta * delay_energy_linf(buffer, t, delay)?)
}

/// Seed-history integrals entering the constants `C`: the two double integrals at `t = 0`.
pub fn seed_integrals(buffer: &HistoryBuffer, delay: &DelaySpec) -> Result<(f64, f64)> {
    Ok((
        delay_energy_l2(buffer, 0.0, delay)?,
        delay_energy_linf(buffer, 0.0, delay)?,
    ))
}

/// Weights used for the sup-norm analysis: the model's `a_ij` for `main_delay` and
/// `normalized_nonsymmetric`, the underlying potential for `full_sum_baseline`. Zero diagonal.
pub fn analysis_weights(params: &ModelParams, x: &AgentVectors) -> SquareMatrix {
    let mut a = match params.variant() {
        Variant::FullSumBaseline => model::pairwise_psi(params.potential(), x),
        _ => model::weights_unchecked(params, x),
    };
    for i in 0..a.n() {
        a[(i, i)] = 0.0;
    }
    a
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub x_var: f64,
    pub v_var: f64,
    pub d_x: f64,
    pub d_v: f64,
    /// Fiedler number of the potential's Laplacian at the sample positions.
    pub mu: f64,
    /// Min-sum structural quantity of the augmented weights at the sample positions.
    pub psi_star: f64,
    pub r_tau: f64,
    pub sigma_tau: f64,
    /// `int e^{-(t-s)} int_s^t sum |v'|^2` over the delay window.
    pub energy_l2: f64,
    /// `int e^{-(t-s)} int_s^t max |v'|` over the delay window.
    pub energy_linf: f64,
    /// Quadratic functional; NaN until a valid L2 certificate supplies `beta`.
    pub lyap_l2: f64,
    /// Diameter functional; NaN until a valid Linf certificate supplies `beta`.
    pub lyap_linf: f64,
    pub bound_v: f64,
    pub bound_dv: f64,
    /// `(1/N) sum_i |v_i'(t)|^2`.
    pub acc_sq_mean: f64,
    /// `max_j |v_j'(t)|`.
    pub acc_max: f64,
    /// `1 - max_i (1/N) sum_{j != i} a_ij` at the sample positions.
    pub normalization_margin: f64,
}

/// Diagnostics at the newest buffer sample.
pub fn diagnostics_row(params: &ModelParams, delay: &DelaySpec, buffer: &HistoryBuffer) -> Result<DiagnosticsRow> {
    let s = buffer.last();
    let t = s.t;
    let n = params.n() as f64;
    let (d_x, d_v) = diameters(&s.x, &s.v);
    let mu = spectral::fiedler(&spectral::laplacian(params, &s.x)?)?.mu;
    let a = analysis_weights(params, &s.x);
    let margin = model::normalization_margin(&a).margin;
    let psi_star = spectral::psi_star_empirical(&spectral::augment_diagonal(&a));
    Ok(DiagnosticsRow {
        t,
        x_var: variance(&s.x),
        v_var: variance(&s.v),
        d_x,
        d_v,
        mu,
        psi_star,
        r_tau: r_tau(buffer, t, delay)?,
        sigma_tau: sigma_tau(buffer, t, delay)?,
        energy_l2: delay_energy_l2(buffer, t, delay)?,
        energy_linf: delay_energy_linf(buffer, t, delay)?,
        lyap_l2: f64::NAN,
        lyap_linf: f64::NAN,
        bound_v: f64::NAN,
        bound_dv: f64::NAN,
        acc_sq_mean: sum_sq(&s.vdot) / n,
        acc_max: max_norm(&s.vdot),
        normalization_margin: margin,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    /// Velocity variance via the quadratic functional.
    L2,
    /// Velocity diameter via the diameter functional.
    Linf,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::L2 => "L2",
            BoundKind::Linf => "Linf",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundInputs {
    pub lambda: f64,
    /// `gamma` for L2, `psi*` for Linf.
    pub structural: f64,
    pub tau_bar: f64,
    pub c: f64,
    pub seed_integral: f64,
    /// `V(0)` for L2, `d_V(0)` for Linf.
    pub initial: f64,
    pub n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheoremBounds {
    pub kind: BoundKind,
    pub tau0: f64,
    /// `tau_bar^2 e^tau_bar` (L2) or `tau_bar e^tau_bar` (Linf), compared against `tau0`.
    pub delay_measure: f64,
    pub valid: bool,
    pub beta: Option<f64>,
    pub r: Option<f64>,
    pub c_const: Option<f64>,
    pub inputs: BoundInputs,
}

impl TheoremBounds {
    /// `C e^{-r t}` when valid.
    pub fn envelope(&self, t: f64) -> Option<f64> {
        Some(self.c_const? * (-self.r? * t).exp())
    }
}

fn check_common(lambda: f64, structural: f64, name: &str, tau_bar: f64, c: f64) -> Result<()> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    if !(structural > 0.0) {
        return Err(Error::Domain(format!("{name} must be positive, got {structural}")));
    }
    if !(tau_bar >= 0.0) {
        return Err(Error::Domain(format!("tau_bar must be nonnegative, got {tau_bar}")));
    }
    if !(0.0..1.0).contains(&c) {
        return Err(Error::Domain(format!(
            "delay slope bound c must lie in [0, 1), got {c}"
        )));
    }
    Ok(())
}

/// Constants of the variance decay certificate.
pub fn bounds_l2(
    lambda: f64,
    gamma: f64,
    tau_bar: f64,
    c: f64,
    seed_integral: f64,
    v0: f64,
    n: usize,
) -> Result<TheoremBounds> {
    check_common(lambda, gamma, "gamma", tau_bar, c)?;
    let l2 = lambda * lambda;
    let tau0 = gamma * gamma / (2.0 * l2) * (1.0 - c) / (2.0 * l2 + gamma * gamma);
    let delay_measure = tau_bar * tau_bar * tau_bar.exp();
    let valid = delay_measure < tau0;
    let denom = (1.0 - c) * (-tau_bar).exp() - 2.0 * l2 * tau_bar * tau_bar;
    let (beta, r, c_const) = if valid {
        let beta = l2 * tau_bar / (2.0 * gamma) / denom;
        let r = (gamma - 4.0 * l2 / gamma * l2 * tau_bar * tau_bar / denom).min(1.0);
        let c_const = v0 + l2 * tau_bar / (gamma * n as f64) / denom * seed_integral;
        (Some(beta), Some(r), Some(c_const))
    } else {
        (None, None, None)
    };
    Ok(TheoremBounds {
        kind: BoundKind::L2,
        tau0,
        delay_measure,
        valid,
        beta,
        r,
        c_const,
        inputs: BoundInputs {
            lambda,
            structural: gamma,
            tau_bar,
            c,
            seed_integral,
            initial: v0,
            n,
        },
    })
}

/// Constants of the diameter decay certificate.
pub fn bounds_linf(
    lambda: f64,
    psi_star: f64,
    tau_bar: f64,
    c: f64,
    seed_integral_max: f64,
    dv0: f64,
    n: usize,
) -> Result<TheoremBounds> {
    check_common(lambda, psi_star, "psi*", tau_bar, c)?;
    let tau0 = (1.0 - c) / lambda * psi_star / (psi_star + 2.0);
    let delay_measure = tau_bar * tau_bar.exp();
    let valid = delay_measure < tau0;
    let denom = (1.0 - c) * (-tau_bar).exp() - lambda * tau_bar;
    let (beta, r, c_const) = if valid {
        let beta = 2.0 * lambda / denom;
        let r = (lambda * (psi_star - beta * tau_bar)).min(1.0);
        (Some(beta), Some(r), Some(dv0 + beta * seed_integral_max))
    } else {
        (None, None, None)
    };
    Ok(TheoremBounds {
        kind: BoundKind::Linf,
        tau0,
        delay_measure,
        valid,
        beta,
        r,
        c_const,
        inputs: BoundInputs {
            lambda,
            structural: psi_star,
            tau_bar,
            c,
            seed_integral: seed_integral_max,
            initial: dv0,
            n,
        },
    })
}

/// Relative slack allowed by [`verify_bound`].
pub const BOUND_SLACK: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCheck {
    /// `max_t (observed / (C e^{-rt}) - 1)`; at most 0 when the bound holds everywhere.
    pub max_violation: f64,
    pub worst_t: f64,
    pub pass: bool,
}

fn ratio_excess(observed: f64, envelope: f64) -> f64 {
    if envelope > 0.0 {
        observed / envelope - 1.0
    } else if observed <= 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Checks `V(t) <= C e^{-rt}` (L2) or `d_V(t) <= C e^{-rt}` (Linf) on every sample with `t >= 0`.
pub fn verify_bound(rows: &[DiagnosticsRow], bounds: &TheoremBounds) -> Result<BoundCheck> {
    if !bounds.valid {
        return Err(Error::BoundsRefused("delay condition violated".into()));
    }
    let mut worst = BoundCheck {
        max_violation: f64::NEG_INFINITY,
        worst_t: f64::NAN,
        pass: true,
    };
    for row in rows.iter().filter(|r| r.t >= 0.0) {
        let observed = match bounds.kind {
            BoundKind::L2 => row.v_var,
            BoundKind::Linf => row.d_v,
        };
        let env = bounds.envelope(row.t).expect("valid bounds carry r and C");
        let excess = ratio_excess(observed, env);
        if excess > worst.max_violation {
            worst.max_violation = excess;
            worst.worst_t = row.t;
        }
    }
    worst.pass = worst.max_violation <= BOUND_SLACK;
    Ok(worst)
}

/// Writes the functional and envelope columns belonging to `bounds` into the rows.
pub fn apply_bounds(rows: &mut [DiagnosticsRow], bounds: &TheoremBounds) {
    let (Some(beta), true) = (bounds.beta, bounds.valid) else {
        return;
    };
    let n = bounds.inputs.n as f64;
    for row in rows {
        let env = bounds.envelope(row.t).unwrap_or(f64::NAN);
        match bounds.kind {
            BoundKind::L2 => {
                // ||w||^2 / N = V
                row.lyap_l2 = 0.5 * row.v_var + beta / n * row.energy_l2;
                row.bound_v = env;
            }
            BoundKind::Linf => {
                row.lyap_linf = row.d_v + beta * row.energy_linf;
                row.bound_dv = env;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayCheck {
    /// Largest relative increase of `e^{rt} F(t)` between consecutive samples.
    pub max_rel_increase: f64,
    pub worst_t: f64,
    pub pass: bool,
}

/// Checks that `e^{rt}` times the certificate's functional is nonincreasing across samples, up
/// to `slack` relative. Needs [`apply_bounds`] to have filled the functional column.
pub fn check_functional_decay(rows: &[DiagnosticsRow], bounds: &TheoremBounds, slack: f64) -> Result<DecayCheck> {
    let Some(r) = bounds.r.filter(|_| bounds.valid) else {
        return Err(Error::BoundsRefused("delay condition violated".into()));
    };
    let scaled: Vec<(f64, f64)> = rows
        .iter()
        .filter(|row| row.t >= 0.0)
        .map(|row| {
            let f = match bounds.kind {
                BoundKind::L2 => row.lyap_l2,
                BoundKind::Linf => row.lyap_linf,
            };
            (row.t, (r * row.t).exp() * f)
        })
        .collect();
    if scaled.iter().any(|(_, f)| f.is_nan()) {
        return Err(Error::Domain(
            "functional column not filled; call apply_bounds first".into(),
        ));
    }
    let mut check = DecayCheck {
        max_rel_increase: f64::NEG_INFINITY,
        worst_t: f64::NAN,
        pass: true,
    };
    for w in scaled.windows(2) {
        let (prev, next) = (w[0].1, w[1].1);
        let rel = if prev > 0.0 {
            (next - prev) / prev
        } else if next <= 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        if rel > check.max_rel_increase {
            check.max_rel_increase = rel;
            check.worst_t = w[1].0;
        }
    }
    check.pass = check.max_rel_increase <= slack || scaled.len() < 2;
    Ok(check)
}
