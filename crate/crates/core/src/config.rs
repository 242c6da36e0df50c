//! Run configuration, stored as flat TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::build_torus;
use crate::rotor_model::ModelParams;
use crate::samplers::{Boundary, SamplerSettings, Schedule, DEFAULT_SWEEPS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub beta: f64,
    pub q: usize,
    /// Rotation angle in radians.
    pub tau: f64,
    /// Side lengths joined by `x`, e.g. `8x8x8`.
    pub dims: String,
    pub steps: usize,
    pub seed: u64,
    pub sweeps: usize,
    pub schedule: Schedule,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
    /// `periodic` or `fixed:<angle>`; used by equilibrium sampling.
    pub boundary: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            beta: 1.0,
            q: 12,
            tau: 0.0,
            dims: "8x8x8".into(),
            steps: 100,
            seed: 0,
            sweeps: DEFAULT_SWEEPS,
            schedule: Schedule::Sequential,
            output_path: None,
            snapshot_every: None,
            boundary: "periodic".into(),
        }
    }
}

pub fn parse_dims(s: &str) -> Result<Vec<usize>> {
    s.split(['x', 'X'])
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|e| Error::Config(format!("bad dims {s:?}: {e}")))
        })
        .collect()
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        ModelParams::new(self.beta, self.q, self.tau, build_torus(&parse_dims(&self.dims)?)?)
    }

    pub fn sampler_settings(&self) -> SamplerSettings {
        SamplerSettings {
            sweeps: self.sweeps,
            seed: self.seed,
            schedule: self.schedule,
            warm_start: false,
        }
    }

    pub fn boundary(&self) -> Result<Boundary> {
        self.boundary.parse()
    }

    pub fn validate(&self) -> Result<()> {
        self.model_params()?;
        self.sampler_settings().validate()?;
        self.boundary()?;
        if self.steps == 0 {
            return Err(Error::Config("steps must be >= 1".into()));
        }
        if self.snapshot_every == Some(0) {
            return Err(Error::Config("snapshot_every must be >= 1".into()));
        }
        Ok(())
    }
}
