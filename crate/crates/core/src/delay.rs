//! Time-varying delay laws with exact bounds.
//!
//! Only closed-form families are offered so the bound `tau_bar = sup tau` and the slope bound
//! `c = sup |tau'|` are exact rather than sampled. Construction rejects any law that can go
//! negative or whose slope bound reaches 1.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DelaySpec {
    Constant {
        tau: f64,
    },
    /// `tau(t) = a + b sin(omega t)`.
    Sinusoidal {
        a: f64,
        b: f64,
        omega: f64,
    },
}

/// `(tau_bar, c)`: the sup of the delay and the sup of its slope.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DelayBounds {
    pub tau_bar: f64,
    pub c: f64,
}

impl DelaySpec {
    pub fn constant(tau: f64) -> Result<Self> {
        let spec = Self::Constant { tau };
        spec.validate()?;
        Ok(spec)
    }

    pub fn sinusoidal(a: f64, b: f64, omega: f64) -> Result<Self> {
        let spec = Self::Sinusoidal { a, b, omega };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Constant { tau } => {
                if !(tau.is_finite() && tau >= 0.0) {
                    return Err(Error::InvalidDelay(format!(
                        "constant delay must be finite and nonnegative, got {tau}"
                    )));
                }
            }
            Self::Sinusoidal { a, b, omega } => {
                if !(a.is_finite() && b.is_finite() && omega.is_finite()) {
                    return Err(Error::InvalidDelay("sinusoidal delay parameters must be finite".into()));
                }
                if b < 0.0 || omega < 0.0 {
                    return Err(Error::InvalidDelay(format!(
                        "sinusoidal delay needs b >= 0 and omega >= 0 (got b = {b}, omega = {omega})"
                    )));
                }
                if a - b < 0.0 {
                    return Err(Error::InvalidDelay(format!(
                        "delay must stay nonnegative: a - b = {} < 0",
                        a - b
                    )));
                }
                let c = b * omega;
                if c >= 1.0 {
                    return Err(Error::InvalidDelay(format!(
                        "delay slope bound c = b*omega = {c} must be < 1"
                    )));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Self::Constant { tau } => tau,
            Self::Sinusoidal { a, b, omega } => a + b * (omega * t).sin(),
        }
    }

    pub fn bounds(&self) -> DelayBounds {
        match *self {
            Self::Constant { tau } => DelayBounds { tau_bar: tau, c: 0.0 },
            Self::Sinusoidal { a, b, omega } => DelayBounds {
                tau_bar: a + b,
                c: b * omega,
            },
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Self::Constant { .. })
    }
}

pub fn tau_eval(spec: &DelaySpec, t: f64) -> f64 {
    spec.eval(t)
}

/// Certified `(tau_bar, c)`; re-validates the law first.
pub fn delay_bounds(spec: &DelaySpec) -> Result<DelayBounds> {
    spec.validate()?;
    Ok(spec.bounds())
}
