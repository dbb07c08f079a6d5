//! Simulation and certificate checking for Cucker-Smale flocking with time-varying delays.
//!
//! Agents follow `x_i' = v_i` and
//! `v_i'(t) = (lambda/N) sum_j psi(|x_i(t - tau) - x_j(t - tau)|) (v_j(t - tau) - v_i(t))`,
//! integrated by the method of steps with a fixed-step RK4 and cubic Hermite history. On top of
//! the integrator sit the spectral quantities (Fiedler number, the min-sum constant `psi*`), the
//! delay-energy functionals, the explicit exponential envelopes for velocity variance and
//! velocity diameter, and the experiment drivers.
//!
//! ```
//! use delayed_flocking::{experiments, integrator};
//!
//! let scenario = experiments::section4_scenario(0.0, 10.0).unwrap();
//! let run = integrator::run(&scenario).unwrap();
//! assert!(run.last().v_var < run.first().v_var);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod array;
pub mod config;
pub mod delay;
pub mod error;
pub mod experiments;
pub mod history;
pub mod integrator;
pub mod metrics;
pub mod model;
pub mod output;
pub mod selftest;
pub mod spectral;

pub use array::{AgentVectors, SquareMatrix};
pub use delay::{DelayBounds, DelaySpec};
pub use error::{Error, Result};
pub use experiments::{Classification, ConsensusCriteria};
pub use integrator::{InitialHistory, RunOutput, RunStatus, Scenario};
pub use model::{ModelParams, PotentialSpec, Variant};
