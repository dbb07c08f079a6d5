//! Uniformly spaced record of `(x, v, v')` used to resolve delayed arguments.
//!
//! Sample `k` lives at `t = (first_index + k) * h`. Between knots the state is rebuilt by cubic
//! Hermite interpolation: positions use the stored velocities as slopes and velocities use the
//! stored accelerations. A knot may carry a separate left-sided acceleration (`vdot_left`); this
//! happens where the seed history meets the integrated solution at `t = 0`, where `v'` jumps.

use std::collections::VecDeque;

use crate::array::AgentVectors;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct HistorySample {
    pub t: f64,
    pub x: AgentVectors,
    pub v: AgentVectors,
    /// Right-sided acceleration, i.e. the model right-hand side at this sample.
    pub vdot: AgentVectors,
    /// Left-sided acceleration when it differs from `vdot`.
    pub vdot_left: Option<AgentVectors>,
}

impl HistorySample {
    #[inline]
    pub fn vdot_from_left(&self) -> &AgentVectors {
        self.vdot_left.as_ref().unwrap_or(&self.vdot)
    }
}

/// One trapezoid cell of an acceleration integrand: `g0` at `s0` (right limit), `g1` at `s1`
/// (left limit).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrandCell {
    pub s0: f64,
    pub s1: f64,
    pub g0: f64,
    pub g1: f64,
}

#[derive(Clone, Debug)]
pub struct HistoryBuffer {
    h: f64,
    first_index: i64,
    samples: VecDeque<HistorySample>,
}

/// Tolerance, in units of `h`, for treating a query time as a knot or as inside the span.
const KNOT_TOL: f64 = 1e-9;

impl HistoryBuffer {
    /// Builds a buffer whose first sample sits at `first_index * h`.
    ///
    /// Sample times must equal `(first_index + k) * h` to within `1e-12 h`, and all arrays must
    /// share one shape.
    pub fn new(h: f64, first_index: i64, samples: Vec<HistorySample>) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidScenario(format!("step size must be positive, got {h}")));
        }
        let Some(first) = samples.first() else {
            return Err(Error::InvalidScenario(
                "history buffer needs at least one sample".into(),
            ));
        };
        let (n, d) = (first.x.n(), first.x.dim());
        for (k, s) in samples.iter().enumerate() {
            let expected = (first_index + k as i64) as f64 * h;
            if (s.t - expected).abs() > 1e-12 * h.max(expected.abs()) {
                return Err(Error::InvalidScenario(format!(
                    "history sample {k} at t = {} is off the uniform grid (expected {expected})",
                    s.t
                )));
            }
            for arr in [&s.x, &s.v, &s.vdot].into_iter().chain(s.vdot_left.as_ref()) {
                arr.check_shape(n, d, "history sample")?;
            }
        }
        Ok(Self {
            h,
            first_index,
            samples: samples.into(),
        })
    }

    #[inline]
    pub fn step_size(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    #[inline]
    pub fn start(&self) -> f64 {
        self.samples[0].t
    }

    #[inline]
    pub fn end(&self) -> f64 {
        self.last().t
    }

    #[inline]
    pub fn last(&self) -> &HistorySample {
        self.samples.back().expect("history buffer is never empty")
    }

    #[inline]
    pub fn first_index(&self) -> i64 {
        self.first_index
    }

    /// Grid index of the newest sample.
    #[inline]
    pub fn last_index(&self) -> i64 {
        self.first_index + self.samples.len() as i64 - 1
    }

    pub fn samples(&self) -> impl Iterator<Item = &HistorySample> {
        self.samples.iter()
    }

    pub fn sample(&self, k: usize) -> &HistorySample {
        &self.samples[k]
    }

    pub(crate) fn last_mut(&mut self) -> &mut HistorySample {
        self.samples.back_mut().expect("history buffer is never empty")
    }

    /// Appends the next grid sample.
    pub(crate) fn push(&mut self, sample: HistorySample) {
        debug_assert!((sample.t - (self.last_index() + 1) as f64 * self.h).abs() <= 1e-9 * self.h.max(sample.t.abs()));
        self.samples.push_back(sample);
    }

    /// Drops samples no longer needed to cover `[keep_from, end]`.
    pub(crate) fn trim_before(&mut self, keep_from: f64) {
        while self.samples.len() > 2 && self.samples[1].t <= keep_from {
            self.samples.pop_front();
            self.first_index += 1;
        }
    }

    fn out_of_span(&self, t: f64) -> Error {
        Error::Lookback {
            query: t,
            start: self.start(),
            end: self.end(),
        }
    }

    /// Locates `t` as `(cell index k, theta)` with `t = t_k + theta h`, `theta in [0, 1]`.
    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let tol = KNOT_TOL * self.h;
        if !(t >= self.start() - tol && t <= self.end() + tol) {
            return Err(self.out_of_span(t));
        }
        let cells = self.samples.len() - 1;
        let raw = (t - self.start()) / self.h;
        let k = (raw.floor().max(0.0) as usize).min(cells.saturating_sub(1));
        let theta = ((t - self.samples[k].t) / self.h).clamp(0.0, 1.0);
        Ok((k, theta))
    }

    /// Index of a knot within `KNOT_TOL * h` of `t`, if any.
    fn knot_at(&self, t: f64) -> Option<usize> {
        let raw = (t - self.start()) / self.h;
        let k = raw.round();
        if k >= 0.0 && (raw - k).abs() <= KNOT_TOL && (k as usize) < self.samples.len() {
            Some(k as usize)
        } else {
            None
        }
    }

    /// Positions and velocities at `t`, exact at knots.
    pub fn interpolate(&self, t: f64) -> Result<(AgentVectors, AgentVectors)> {
        if let Some(k) = self.knot_at(t) {
            let s = &self.samples[k];
            return Ok((s.x.clone(), s.v.clone()));
        }
        let (k, theta) = self.locate(t)?;
        let (a, b) = (&self.samples[k], &self.samples[k + 1]);
        let x = hermite(&a.x, &a.v, &b.x, &b.v, self.h, theta);
        let v = hermite(&a.v, &a.vdot, &b.v, b.vdot_from_left(), self.h, theta);
        Ok((x, v))
    }

    /// Acceleration at `t` as the derivative of the velocity interpolant.
    ///
    /// At a knot with a jump this returns the right-sided value; use [`Self::cells`] for
    /// integrals that must respect one-sided limits.
    pub fn interpolate_vdot(&self, t: f64) -> Result<AgentVectors> {
        if let Some(k) = self.knot_at(t) {
            return Ok(self.samples[k].vdot.clone());
        }
        let (k, theta) = self.locate(t)?;
        let (a, b) = (&self.samples[k], &self.samples[k + 1]);
        Ok(hermite_slope(&a.v, &a.vdot, &b.v, b.vdot_from_left(), self.h, theta))
    }

    /// Trapezoid cells of `g(v'(s))` over `[a, b]` on the sample grid, with partial end cells
    /// filled from the Hermite interpolant. An empty interval yields no cells.
    pub fn cells<G>(&self, a: f64, b: f64, g: G) -> Result<Vec<IntegrandCell>>
    where
        G: Fn(&AgentVectors) -> f64,
    {
        let tol = KNOT_TOL * self.h;
        if b - a <= tol {
            if a > b + tol {
                return Err(Error::Domain(format!("integration window [{a}, {b}] is reversed")));
            }
            return Ok(Vec::new());
        }
        if a < self.start() - tol || b > self.end() + tol {
            return Err(self.out_of_span(if a < self.start() - tol { a } else { b }));
        }
        // left end: value from the right
        let (ka, ta) = match self.knot_at(a) {
            Some(k) => (k, 0.0),
            None => self.locate(a)?,
        };
        let (kb, tb) = match self.knot_at(b) {
            Some(k) if k > 0 => (k - 1, 1.0),
            Some(_) => unreachable!("b > a >= start"),
            None => self.locate(b)?,
        };
        let at = |k: usize, theta: f64, from_left: bool| -> f64 {
            if theta == 0.0 {
                g(&self.samples[k].vdot)
            } else if theta == 1.0 {
                let s = &self.samples[k + 1];
                g(if from_left { s.vdot_from_left() } else { &s.vdot })
            } else {
                let (p, q) = (&self.samples[k], &self.samples[k + 1]);
                g(&hermite_slope(&p.v, &p.vdot, &q.v, q.vdot_from_left(), self.h, theta))
            }
        };
        let mut out = Vec::with_capacity(kb - ka + 1);
        if ka == kb {
            out.push(IntegrandCell {
                s0: a,
                s1: b,
                g0: at(ka, ta, false),
                g1: at(kb, tb, true),
            });
            return Ok(out);
        }
        out.push(IntegrandCell {
            s0: a,
            s1: self.samples[ka + 1].t,
            g0: at(ka, ta, false),
            g1: g(self.samples[ka + 1].vdot_from_left()),
        });
        for k in (ka + 1)..kb {
            out.push(IntegrandCell {
                s0: self.samples[k].t,
                s1: self.samples[k + 1].t,
                g0: g(&self.samples[k].vdot),
                g1: g(self.samples[k + 1].vdot_from_left()),
            });
        }
        out.push(IntegrandCell {
            s0: self.samples[kb].t,
            s1: b,
            g0: g(&self.samples[kb].vdot),
            g1: at(kb, tb, true),
        });
        Ok(out)
    }
}

/// Cubic Hermite value on a cell of width `h` at fraction `theta`.
fn hermite(
    p0: &AgentVectors,
    m0: &AgentVectors,
    p1: &AgentVectors,
    m1: &AgentVectors,
    h: f64,
    theta: f64,
) -> AgentVectors {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = (t3 - 2.0 * t2 + theta) * h;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = (t3 - t2) * h;
    combine(p0, m0, p1, m1, [h00, h10, h01, h11])
}

/// Time derivative of [`hermite`].
fn hermite_slope(
    p0: &AgentVectors,
    m0: &AgentVectors,
    p1: &AgentVectors,
    m1: &AgentVectors,
    h: f64,
    theta: f64,
) -> AgentVectors {
    let t2 = theta * theta;
    let d00 = (6.0 * t2 - 6.0 * theta) / h;
    let d10 = 3.0 * t2 - 4.0 * theta + 1.0;
    let d01 = (-6.0 * t2 + 6.0 * theta) / h;
    let d11 = 3.0 * t2 - 2.0 * theta;
    combine(p0, m0, p1, m1, [d00, d10, d01, d11])
}

fn combine(p0: &AgentVectors, m0: &AgentVectors, p1: &AgentVectors, m1: &AgentVectors, c: [f64; 4]) -> AgentVectors {
    let mut out = p0.clone();
    let (p0, m0, p1, m1) = (p0.as_slice(), m0.as_slice(), p1.as_slice(), m1.as_slice());
    for (i, o) in out.as_mut_slice().iter_mut().enumerate() {
        *o = c[0] * p0[i] + c[1] * m0[i] + c[2] * p1[i] + c[3] * m1[i];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Single agent, d = 1; `f` gives (x, v, v') at t.
    fn synthetic<F: Fn(f64) -> (f64, f64, f64)>(h: f64, k0: i64, k1: i64, f: F) -> HistoryBuffer {
        let samples = (k0..=k1)
            .map(|k| {
                let t = k as f64 * h;
                let (x, v, a) = f(t);
                let one = |val: f64| AgentVectors::from_flat(1, 1, vec![val]).unwrap();
                HistorySample {
                    t,
                    x: one(x),
                    v: one(v),
                    vdot: one(a),
                    vdot_left: None,
                }
            })
            .collect();
        HistoryBuffer::new(h, k0, samples).unwrap()
    }

    #[test]
    fn knots_reproduced_exactly() {
        let b = synthetic(0.1, -10, 0, |t| (t.exp(), t.sin(), t.cos()));
        let t = -7.0 * 0.1;
        let (x, v) = b.interpolate(t).unwrap();
        assert_eq!(x.as_slice()[0], t.exp());
        assert_eq!(v.as_slice()[0], t.sin());
    }

    #[test]
    fn linear_velocity_is_exact() {
        let (v0, g) = (0.7, -1.3);
        let b = synthetic(0.25, -8, 0, |t| (v0 * t + 0.5 * g * t * t, v0 + g * t, g));
        let t = -1.125;
        let (x, v) = b.interpolate(t).unwrap();
        assert!((v.as_slice()[0] - (v0 + g * t)).abs() < 1e-15);
        assert!((x.as_slice()[0] - (v0 * t + 0.5 * g * t * t)).abs() < 1e-15);
    }

    #[test]
    fn smooth_history_accuracy() {
        let b = synthetic(0.01, -300, 0, |t| (-t.cos(), t.sin(), t.cos()));
        for &t in &[-2.345_67, -0.004_3, -1.0 + 0.003] {
            let (x, v) = b.interpolate(t).unwrap();
            assert!((v.as_slice()[0] - t.sin()).abs() < 1e-8);
            assert!((x.as_slice()[0] + t.cos()).abs() < 1e-8);
            let a = b.interpolate_vdot(t).unwrap();
            assert!((a.as_slice()[0] - t.cos()).abs() < 1e-5);
        }
    }

    #[test]
    fn out_of_span_is_lookback_error() {
        let b = synthetic(0.1, -5, 0, |_| (0.0, 0.0, 0.0));
        assert!(matches!(b.interpolate(-0.6), Err(Error::Lookback { .. })));
        assert!(matches!(b.interpolate(0.05), Err(Error::Lookback { .. })));
    }

    #[test]
    fn off_grid_samples_rejected() {
        let mut b = synthetic(0.1, 0, 2, |_| (0.0, 0.0, 0.0));
        let mut samples: Vec<_> = b.samples.drain(..).collect();
        samples[1].t = 0.1001;
        assert!(HistoryBuffer::new(0.1, 0, samples).is_err());
    }

    #[test]
    fn cells_cover_window_and_integrate_polynomials() {
        // v' = 3 s^2 integrates to b^3 - a^3 (trapezoid error O(h^2)).
        let b = synthetic(0.001, -2000, 0, |t| (0.0, t * t * t, 3.0 * t * t));
        let (lo, hi) = (-1.234_56, -0.000_5);
        let cells = b.cells(lo, hi, |a| a.as_slice()[0]).unwrap();
        assert_eq!(cells.first().unwrap().s0, lo);
        assert_eq!(cells.last().unwrap().s1, hi);
        let total: f64 = cells.iter().map(|c| 0.5 * (c.s1 - c.s0) * (c.g0 + c.g1)).sum();
        assert!((total - (hi.powi(3) - lo.powi(3))).abs() < 1e-6);
        assert!(b.cells(0.0, 0.0, |_| 1.0).unwrap().is_empty());
    }

    #[test]
    fn trim_keeps_window() {
        let mut b = synthetic(0.1, -50, 0, |_| (0.0, 0.0, 0.0));
        b.trim_before(-1.0);
        assert!(b.start() <= -1.0 && b.start() > -1.1 - 1e-12);
        assert_eq!(b.first_index(), -10);
    }
}
