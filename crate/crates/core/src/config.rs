//! Strict JSON scenario files.
//!
//! Unknown keys are fatal, and every error names the offending key path.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::array::AgentVectors;
use crate::delay::DelaySpec;
use crate::error::{Error, Result};
use crate::experiments::ConsensusCriteria;
use crate::integrator::{InitialHistory, Scenario, SeedSample};
use crate::model::{ModelParams, PotentialSpec, Variant};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: ModelSection,
    pub delay: DelaySection,
    pub initial: InitialSection,
    pub integration: IntegrationSection,
    #[serde(default)]
    pub criteria: CriteriaSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n: usize,
    pub d: usize,
    pub lambda: f64,
    #[serde(default = "default_variant")]
    pub variant: Variant,
    pub potential: PotentialSection,
}

fn default_variant() -> Variant {
    Variant::MainDelay
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSection {
    CuckerSmale {
        beta: f64,
    },
    Constant {
        psi0: f64,
    },
    Table {
        distances: Vec<f64>,
        weights: Vec<f64>,
        psi_min: f64,
        psi_max: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DelaySection {
    Constant { tau: f64 },
    Sinusoidal { a: f64, b: f64, omega: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSection {
    Ballistic { x0: Vec<Vec<f64>>, v0: Vec<Vec<f64>> },
    Samples { samples: Vec<SampleEntry> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleEntry {
    pub t: f64,
    pub x: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationSection {
    pub h: f64,
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub sample_stride: usize,
}

fn default_stride() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriteriaSection {
    #[serde(default = "default_eps_v")]
    pub eps_v: f64,
    #[serde(default = "default_growth")]
    pub x_growth_factor: f64,
    /// Horizon for threshold probes.
    #[serde(default = "default_horizon")]
    pub horizon: f64,
}

fn default_eps_v() -> f64 {
    ConsensusCriteria::default().eps_v
}

fn default_growth() -> f64 {
    ConsensusCriteria::default().x_growth_factor
}

fn default_horizon() -> f64 {
    ConsensusCriteria::default().horizon
}

impl Default for CriteriaSection {
    fn default() -> Self {
        Self {
            eps_v: default_eps_v(),
            x_growth_factor: default_growth(),
            horizon: default_horizon(),
        }
    }
}

fn at<T>(path: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::config(path, e.to_string()))
}

fn vectors(path: &str, rows: &[Vec<f64>], n: usize, d: usize) -> Result<AgentVectors> {
    if rows.len() != n || rows.iter().any(|r| r.len() != d) {
        return Err(Error::config(path, format!("expected {n} rows of length {d}")));
    }
    at(path, AgentVectors::from_rows(rows))
}

impl ConfigFile {
    /// Validates every section and assembles the scenario and the consensus criteria.
    pub fn build(&self) -> Result<(Scenario, ConsensusCriteria)> {
        let m = &self.model;
        let potential = at(
            "model.potential",
            match &self.model.potential {
                PotentialSection::CuckerSmale { beta } => PotentialSpec::cucker_smale(*beta),
                PotentialSection::Constant { psi0 } => PotentialSpec::constant(*psi0),
                PotentialSection::Table {
                    distances,
                    weights,
                    psi_min,
                    psi_max,
                } => PotentialSpec::table(distances.clone(), weights.clone(), *psi_min, *psi_max),
            },
        )?;
        let params = at("model", ModelParams::new(m.n, m.d, m.lambda, m.variant, potential))?;

        let delay = match self.delay {
            DelaySection::Constant { tau } => at("delay.tau", DelaySpec::constant(tau))?,
            DelaySection::Sinusoidal { a, b, omega } => {
                let c = b * omega;
                if c >= 1.0 {
                    return Err(Error::config("delay.c", format!("c = b*omega = {c} must be < 1")));
                }
                at("delay", DelaySpec::sinusoidal(a, b, omega))?
            }
        };

        let (n, d) = (m.n, m.d);
        let initial = match &self.initial {
            InitialSection::Ballistic { x0, v0 } => InitialHistory::Ballistic {
                x0: vectors("initial.x0", x0, n, d)?,
                v0: vectors("initial.v0", v0, n, d)?,
            },
            InitialSection::Samples { samples } => InitialHistory::Samples(
                samples
                    .iter()
                    .enumerate()
                    .map(|(k, s)| {
                        Ok(SeedSample {
                            t: s.t,
                            x: vectors(&format!("initial.samples[{k}].x"), &s.x, n, d)?,
                            v: vectors(&format!("initial.samples[{k}].v"), &s.v, n, d)?,
                        })
                    })
                    .collect::<Result<_>>()?,
            ),
        };

        let int = &self.integration;
        if !(int.h > 0.0 && int.h.is_finite()) {
            return Err(Error::config(
                "integration.h",
                format!("step must be positive, got {}", int.h),
            ));
        }
        if !(int.t_end > 0.0 && int.t_end.is_finite()) {
            return Err(Error::config(
                "integration.t_end",
                format!("horizon must be positive, got {}", int.t_end),
            ));
        }
        if int.sample_stride == 0 {
            return Err(Error::config("integration.sample_stride", "must be at least 1"));
        }
        let scenario = at(
            "initial",
            Scenario::new(params, delay, initial, int.h, int.t_end, int.sample_stride),
        )?;

        let criteria = ConsensusCriteria {
            eps_v: self.criteria.eps_v,
            x_growth_factor: self.criteria.x_growth_factor,
            horizon: self.criteria.horizon,
            h: int.h,
        };
        at("criteria", criteria.validate())?;
        Ok((scenario, criteria))
    }

    pub fn from_scenario(scenario: &Scenario, criteria: &ConsensusCriteria) -> Self {
        let p = &scenario.params;
        let potential = match p.potential().clone() {
            PotentialSpec::CuckerSmale { beta } => PotentialSection::CuckerSmale { beta },
            PotentialSpec::Constant { psi0 } => PotentialSection::Constant { psi0 },
            PotentialSpec::Table {
                distances,
                weights,
                psi_min,
                psi_max,
            } => PotentialSection::Table {
                distances,
                weights,
                psi_min,
                psi_max,
            },
        };
        let delay = match scenario.delay {
            DelaySpec::Constant { tau } => DelaySection::Constant { tau },
            DelaySpec::Sinusoidal { a, b, omega } => DelaySection::Sinusoidal { a, b, omega },
        };
        let initial = match &scenario.initial {
            InitialHistory::Ballistic { x0, v0 } => InitialSection::Ballistic {
                x0: x0.to_rows(),
                v0: v0.to_rows(),
            },
            InitialHistory::Samples(samples) => InitialSection::Samples {
                samples: samples
                    .iter()
                    .map(|s| SampleEntry {
                        t: s.t,
                        x: s.x.to_rows(),
                        v: s.v.to_rows(),
                    })
                    .collect(),
            },
        };
        Self {
            model: ModelSection {
                n: p.n(),
                d: p.dim(),
                lambda: p.lambda(),
                variant: p.variant(),
                potential,
            },
            delay,
            initial,
            integration: IntegrationSection {
                h: scenario.h,
                t_end: scenario.t_end,
                sample_stride: scenario.sample_stride,
            },
            criteria: CriteriaSection {
                eps_v: criteria.eps_v,
                x_growth_factor: criteria.x_growth_factor,
                horizon: criteria.horizon,
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config sections always serialize")
    }
}

/// Parses a config document held in memory.
pub fn parse_config_str(text: &str) -> Result<(Scenario, ConsensusCriteria)> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ConfigFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(
            if path == "." { "<root>".to_string() } else { path },
            e.into_inner().to_string(),
        )
    })?;
    file.build()
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<(Scenario, ConsensusCriteria)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}

pub fn serialize_config(scenario: &Scenario, criteria: &ConsensusCriteria) -> String {
    ConfigFile::from_scenario(scenario, criteria).to_json()
}
