//! Method-of-steps integration with classical fourth-order Runge–Kutta.
//!
//! Delayed arguments `t* - tau(t*)` at every stage are read from the [`HistoryBuffer`]. When the
//! delay is shorter than the stage offset the query lands inside the current step; it is then
//! taken on the straight line between the last stored sample and the stage state, which reduces
//! to the stage state itself when `tau = 0`.

use crate::array::AgentVectors;
use crate::delay::DelaySpec;
use crate::error::{Error, Result};
use crate::history::{HistoryBuffer, HistorySample};
use crate::metrics::{self, DiagnosticsRow};
use crate::model::{self, ModelParams};

/// Components larger than this in magnitude count as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// One explicitly supplied history point.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedSample {
    pub t: f64,
    pub x: AgentVectors,
    pub v: AgentVectors,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialHistory {
    /// Each agent translates at constant velocity on `[-tau(0), 0]`:
    /// `x_i(t) = x_i^0 + (t + tau(0)) v_i^0`, `v_i(t) = v_i^0`.
    Ballistic { x0: AgentVectors, v0: AgentVectors },
    /// Sorted samples covering `[-tau(0), 0]`, the last one at `t = 0`.
    Samples(Vec<SeedSample>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub params: ModelParams,
    pub delay: DelaySpec,
    pub initial: InitialHistory,
    /// Requested step; see [`Scenario::step_size`] for the one actually used.
    pub h: f64,
    pub t_end: f64,
    /// Diagnostics (and trajectory rows) are emitted every `sample_stride` steps.
    pub sample_stride: usize,
}

impl Scenario {
    pub fn new(
        params: ModelParams,
        delay: DelaySpec,
        initial: InitialHistory,
        h: f64,
        t_end: f64,
        sample_stride: usize,
    ) -> Result<Self> {
        let s = Self {
            params,
            delay,
            initial,
            h,
            t_end,
            sample_stride,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidScenario(format!(
                "step size h must be positive, got {}",
                self.h
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidScenario(format!(
                "horizon must be positive, got {}",
                self.t_end
            )));
        }
        if self.sample_stride == 0 {
            return Err(Error::InvalidScenario("sample_stride must be at least 1".into()));
        }
        self.delay.validate()?;
        let (n, d) = (self.params.n(), self.params.dim());
        match &self.initial {
            InitialHistory::Ballistic { x0, v0 } => {
                x0.check_shape(n, d, "initial positions")?;
                v0.check_shape(n, d, "initial velocities")?;
                if !(x0.is_finite() && v0.is_finite()) {
                    return Err(Error::InvalidScenario("initial data must be finite".into()));
                }
            }
            InitialHistory::Samples(samples) => {
                let tau0 = self.delay.eval(0.0);
                let (Some(first), Some(last)) = (samples.first(), samples.last()) else {
                    return Err(Error::InvalidScenario("explicit history has no samples".into()));
                };
                for s in samples {
                    s.x.check_shape(n, d, "history positions")?;
                    s.v.check_shape(n, d, "history velocities")?;
                    if !(s.x.is_finite() && s.v.is_finite() && s.t.is_finite()) {
                        return Err(Error::InvalidScenario(format!(
                            "history sample at t = {} is not finite",
                            s.t
                        )));
                    }
                }
                if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
                    return Err(Error::InvalidScenario(
                        "history sample times must be strictly increasing".into(),
                    ));
                }
                let single_point = samples.len() == 1 && tau0 == 0.0 && last.t.abs() <= 1e-12;
                if (last.t.abs() > 1e-12 || first.t > -tau0 + 1e-12) && !single_point {
                    return Err(Error::InvalidScenario(format!(
                        "explicit history spans [{}, {}] but must cover [-tau(0), 0] = [{}, 0]",
                        first.t, last.t, -tau0
                    )));
                }
            }
        }
        Ok(())
    }

    /// Step actually used. For a constant positive delay `h` is reduced so that `tau / h` is an
    /// integer and delayed stage queries stay aligned with the grid.
    pub fn step_size(&self) -> f64 {
        match self.delay {
            DelaySpec::Constant { tau } if tau > 0.0 => {
                let m = (tau / self.h - 1e-9).ceil().max(1.0);
                tau / m
            }
            _ => self.h,
        }
    }

    /// Number of steps to reach (at least) `t_end`.
    pub fn step_count(&self) -> u64 {
        let ratio = self.t_end / self.step_size();
        let r = ratio.round();
        if (ratio - r).abs() <= 1e-9 * r.max(1.0) {
            r as u64
        } else {
            ratio.ceil() as u64
        }
    }

    /// Same scenario with a constant delay `tau`.
    pub fn with_constant_delay(&self, tau: f64) -> Result<Self> {
        let mut s = self.clone();
        s.delay = DelaySpec::constant(tau)?;
        s.validate()?;
        Ok(s)
    }
}

/// Seeds the buffer on `[-tau(0), 0]` at the scenario's step, then fills in the right-sided
/// acceleration at `t = 0`.
pub fn init_history(scenario: &Scenario) -> Result<HistoryBuffer> {
    scenario.validate()?;
    let h = scenario.step_size();
    let tau0 = scenario.delay.eval(0.0);
    let k0 = if tau0 > 0.0 { (tau0 / h - 1e-9).ceil() as i64 } else { 0 };
    let (n, d) = (scenario.params.n(), scenario.params.dim());

    let samples: Vec<HistorySample> = match &scenario.initial {
        InitialHistory::Ballistic { x0, v0 } => (-k0..=0)
            .map(|k| {
                let t = k as f64 * h;
                HistorySample {
                    t,
                    x: x0.add_scaled(t + tau0, v0),
                    v: v0.clone(),
                    vdot: AgentVectors::zeros(n, d),
                    vdot_left: None,
                }
            })
            .collect(),
        InitialHistory::Samples(seed) => resample_seed(seed, h, k0),
    };
    let mut buffer = HistoryBuffer::new(h, -k0, samples)?;
    let seed_vdot = buffer.last().vdot.clone();
    let last = buffer.last();
    let accel = delayed_accel(scenario, &buffer, 0.0, &last.x.clone(), &last.v.clone())?;
    let junction = buffer.last_mut();
    junction.vdot_left = Some(seed_vdot);
    junction.vdot = accel;
    Ok(buffer)
}

/// Puts an explicit history on the grid `k h`, `k = -k0..=0`. Velocities are interpolated with
/// finite-difference slopes, positions with the velocities as slopes; grid points that fall
/// just below the first sample are extrapolated from the first cell.
fn resample_seed(seed: &[SeedSample], h: f64, k0: i64) -> Vec<HistorySample> {
    let m = seed.len();
    let (n, d) = (seed[0].x.n(), seed[0].x.dim());
    if m == 1 {
        return vec![HistorySample {
            t: 0.0,
            x: seed[0].x.clone(),
            v: seed[0].v.clone(),
            vdot: AgentVectors::zeros(n, d),
            vdot_left: None,
        }];
    }
    let diff = |i: usize, j: usize| -> AgentVectors {
        let dt = seed[j].t - seed[i].t;
        AgentVectors::zeros(n, d).add_scaled(1.0 / dt, &seed[j].v.add_scaled(-1.0, &seed[i].v))
    };
    // slopes at the seed samples: one-sided at the ends, central inside
    let slopes: Vec<AgentVectors> = (0..m)
        .map(|i| match i {
            0 => diff(0, 1),
            i if i == m - 1 => diff(m - 2, m - 1),
            i => diff(i - 1, i + 1),
        })
        .collect();

    (-k0..=0)
        .map(|k| {
            let t = k as f64 * h;
            let j = seed.partition_point(|s| s.t <= t).clamp(1, m - 1) - 1;
            let (a, b) = (&seed[j], &seed[j + 1]);
            let w = b.t - a.t;
            let theta = (t - a.t) / w;
            let (x, v, vdot) = hermite_triplet(a, b, &slopes[j], &slopes[j + 1], w, theta);
            HistorySample {
                t,
                x,
                v,
                vdot,
                vdot_left: None,
            }
        })
        .collect()
}

fn hermite_triplet(
    a: &SeedSample,
    b: &SeedSample,
    ma: &AgentVectors,
    mb: &AgentVectors,
    w: f64,
    s: f64,
) -> (AgentVectors, AgentVectors, AgentVectors) {
    let s2 = s * s;
    let s3 = s2 * s;
    let h = [
        2.0 * s3 - 3.0 * s2 + 1.0,
        (s3 - 2.0 * s2 + s) * w,
        -2.0 * s3 + 3.0 * s2,
        (s3 - s2) * w,
    ];
    let dh = [
        (6.0 * s2 - 6.0 * s) / w,
        3.0 * s2 - 4.0 * s + 1.0,
        (-6.0 * s2 + 6.0 * s) / w,
        3.0 * s2 - 2.0 * s,
    ];
    let mix = |c: &[f64; 4], p0: &AgentVectors, m0: &AgentVectors, p1: &AgentVectors, m1: &AgentVectors| {
        let mut out = p0.clone();
        for (i, o) in out.as_mut_slice().iter_mut().enumerate() {
            *o = c[0] * p0.as_slice()[i] + c[1] * m0.as_slice()[i] + c[2] * p1.as_slice()[i] + c[3] * m1.as_slice()[i];
        }
        out
    };
    (
        mix(&h, &a.x, &a.v, &b.x, &b.v),
        mix(&h, &a.v, ma, &b.v, mb),
        mix(&dh, &a.v, ma, &b.v, mb),
    )
}

/// Velocity field at stage time `t_stage` for the stage state `(x, v)`.
fn delayed_accel(
    scenario: &Scenario,
    buffer: &HistoryBuffer,
    t_stage: f64,
    x: &AgentVectors,
    v: &AgentVectors,
) -> Result<AgentVectors> {
    let query = t_stage - scenario.delay.eval(t_stage);
    let t_last = buffer.end();
    let tol = 1e-9 * buffer.step_size();
    let (xd, vd) = if query <= t_last + tol {
        buffer.interpolate(query)?
    } else {
        let last = buffer.last();
        let theta = (query - t_last) / (t_stage - t_last);
        (last.x.lerp(x, theta), last.v.lerp(v, theta))
    };
    let a = model::weights_unchecked(&scenario.params, &xd);
    Ok(model::accel(&scenario.params, &a, v, &vd))
}

fn diverged(x: &AgentVectors, v: &AgentVectors) -> bool {
    !(x.is_finite() && v.is_finite()) || x.max_abs() > DIVERGENCE_LIMIT || v.max_abs() > DIVERGENCE_LIMIT
}

/// Advances the buffer by one step and trims it to the lookback window plus two cells.
pub fn step(buffer: &mut HistoryBuffer, scenario: &Scenario) -> Result<()> {
    let h = buffer.step_size();
    let last = buffer.last();
    let t = last.t;
    let (x0, v0) = (last.x.clone(), last.v.clone());

    let a1 = last.vdot.clone();
    let x2 = x0.add_scaled(0.5 * h, &v0);
    let v2 = v0.add_scaled(0.5 * h, &a1);
    let a2 = delayed_accel(scenario, buffer, t + 0.5 * h, &x2, &v2)?;
    let x3 = x0.add_scaled(0.5 * h, &v2);
    let v3 = v0.add_scaled(0.5 * h, &a2);
    let a3 = delayed_accel(scenario, buffer, t + 0.5 * h, &x3, &v3)?;
    let x4 = x0.add_scaled(h, &v3);
    let v4 = v0.add_scaled(h, &a3);
    let a4 = delayed_accel(scenario, buffer, t + h, &x4, &v4)?;

    let mut x = x0;
    let mut v = v0.clone();
    let w = h / 6.0;
    for i in 0..x.as_slice().len() {
        x.as_mut_slice()[i] +=
            w * (v0.as_slice()[i] + 2.0 * v2.as_slice()[i] + 2.0 * v3.as_slice()[i] + v4.as_slice()[i]);
        v.as_mut_slice()[i] +=
            w * (a1.as_slice()[i] + 2.0 * a2.as_slice()[i] + 2.0 * a3.as_slice()[i] + a4.as_slice()[i]);
    }

    let t_new = (buffer.last_index() + 1) as f64 * h;
    if diverged(&x, &v) {
        return Err(Error::Diverged(t_new));
    }
    let vdot = delayed_accel(scenario, buffer, t_new, &x, &v)?;
    buffer.push(HistorySample {
        t: t_new,
        x,
        v,
        vdot,
        vdot_left: None,
    });
    let tau_bar = scenario.delay.bounds().tau_bar;
    buffer.trim_before(t_new - tau_bar - 2.0 * h);
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RunStatus {
    Completed,
    Diverged { t: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub x: AgentVectors,
    pub v: AgentVectors,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    /// Step actually used.
    pub h: f64,
    /// Seed rows (t <= 0) followed by integrated rows, every `sample_stride` grid points.
    pub trajectory: Vec<TrajectoryRow>,
    /// One row per emitted sample with t >= 0.
    pub diagnostics: Vec<DiagnosticsRow>,
    pub status: RunStatus,
    /// `int_{-tau(0)}^0 e^s int_s^0 sum_i |v_i'|^2` over the seed history.
    pub seed_integral_l2: f64,
    /// `int_{-tau(0)}^0 e^s int_s^0 max_j |v_j'|` over the seed history.
    pub seed_integral_linf: f64,
    /// Position variance at the start of the history, `t = -tau(0)`.
    pub x_var_start: f64,
}

impl RunOutput {
    pub fn completed(&self) -> bool {
        self.status == RunStatus::Completed
    }

    pub fn first(&self) -> &DiagnosticsRow {
        &self.diagnostics[0]
    }

    pub fn last(&self) -> &DiagnosticsRow {
        self.diagnostics.last().expect("diagnostics always include t = 0")
    }
}

/// Integrates the scenario from 0 to `t_end`. Divergence ends the run early with
/// [`RunStatus::Diverged`]; other failures are errors.
pub fn run(scenario: &Scenario) -> Result<RunOutput> {
    let mut buffer = init_history(scenario)?;
    let stride = scenario.sample_stride as i64;
    let mut trajectory: Vec<TrajectoryRow> = buffer
        .samples()
        .filter(|s| (s.t / buffer.step_size()).round() as i64 % stride == 0)
        .map(|s| TrajectoryRow {
            t: s.t,
            x: s.x.clone(),
            v: s.v.clone(),
        })
        .collect();
    let x_var_start = metrics::variance_x(&buffer.sample(0).x);
    let (seed_integral_l2, seed_integral_linf) = metrics::seed_integrals(&buffer, &scenario.delay)?;
    let mut diagnostics = vec![metrics::diagnostics_row(&scenario.params, &scenario.delay, &buffer)?];

    let mut status = RunStatus::Completed;
    for _ in 0..scenario.step_count() {
        match step(&mut buffer, scenario) {
            Ok(()) => {}
            Err(Error::Diverged(t)) => {
                status = RunStatus::Diverged { t };
                break;
            }
            Err(e) => return Err(e),
        }
        if buffer.last_index() % stride == 0 || buffer.last_index() as u64 == scenario.step_count() {
            let s = buffer.last();
            trajectory.push(TrajectoryRow {
                t: s.t,
                x: s.x.clone(),
                v: s.v.clone(),
            });
            diagnostics.push(metrics::diagnostics_row(&scenario.params, &scenario.delay, &buffer)?);
        }
    }
    Ok(RunOutput {
        h: buffer.step_size(),
        trajectory,
        diagnostics,
        status,
        seed_integral_l2,
        seed_integral_linf,
        x_var_start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PotentialSpec, Variant};

    fn section4(tau: f64, t_end: f64) -> Scenario {
        let params =
            ModelParams::new(3, 2, 1.0, Variant::MainDelay, PotentialSpec::cucker_smale(2.0).unwrap()).unwrap();
        let x0 = AgentVectors::from_rows(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).unwrap();
        let v0 = AgentVectors::from_rows(&[[1.0, 0.0], [1.0, 0.0], [0.5, 0.5]]).unwrap();
        Scenario::new(
            params,
            DelaySpec::constant(tau).unwrap(),
            InitialHistory::Ballistic { x0, v0 },
            0.01,
            t_end,
            10,
        )
        .unwrap()
    }

    #[test]
    fn ballistic_seed() {
        let b = init_history(&section4(5.0, 1.0)).unwrap();
        assert_eq!(b.start(), -5.0);
        let first = b.sample(0);
        assert_eq!(first.x.row(0), &[0.0, 0.0]);
        assert_eq!(b.last().x.row(0), &[5.0, 0.0]);
        assert!(b.samples().take(b.len() - 1).all(|s| s.vdot.max_abs() == 0.0));
        assert_eq!(b.last().vdot_from_left().max_abs(), 0.0);
    }

    #[test]
    fn zero_delay_seed_is_single_instant() {
        let b = init_history(&section4(0.0, 1.0)).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.last().x.row(1), &[0.0, 1.0]);
    }

    #[test]
    fn constant_delay_step_is_aligned() {
        let mut s = section4(1.0, 1.0);
        s.h = 0.03;
        let h = s.step_size();
        assert!((1.0 / h - (1.0 / h).round()).abs() < 1e-12 && h <= 0.03);
        assert_eq!(section4(0.0, 50.0).step_count(), 5000);
    }

    #[test]
    fn explicit_history_must_cover_window() {
        let mut s = section4(1.0, 1.0);
        let one = |v: f64| AgentVectors::uniform(3, &[v, 0.0]);
        s.initial = InitialHistory::Samples(vec![
            SeedSample {
                t: -0.5,
                x: one(0.0),
                v: one(1.0),
            },
            SeedSample {
                t: 0.0,
                x: one(0.5),
                v: one(1.0),
            },
        ]);
        assert!(matches!(s.validate(), Err(Error::InvalidScenario(_))));
    }

    #[test]
    fn explicit_history_matches_ballistic() {
        let tau = 0.5;
        let ballistic = section4(tau, 2.0);
        let InitialHistory::Ballistic { x0, v0 } = ballistic.initial.clone() else {
            unreachable!()
        };
        let seed: Vec<SeedSample> = (0..=10)
            .map(|k| {
                let t = -tau + 0.05 * k as f64;
                SeedSample {
                    t,
                    x: x0.add_scaled(t + tau, &v0),
                    v: v0.clone(),
                }
            })
            .collect();
        let mut explicit = ballistic.clone();
        explicit.initial = InitialHistory::Samples(seed);
        let a = run(&ballistic).unwrap();
        let b = run(&explicit).unwrap();
        let (ra, rb) = (a.trajectory.last().unwrap(), b.trajectory.last().unwrap());
        for (p, q) in ra.v.as_slice().iter().zip(rb.v.as_slice()) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn lookback_error_when_buffer_too_short() {
        let s = section4(1.0, 1.0);
        let mut b = init_history(&s).unwrap();
        b.trim_before(-0.1);
        assert!(matches!(step(&mut b, &s), Err(Error::Lookback { .. })));
    }
}
