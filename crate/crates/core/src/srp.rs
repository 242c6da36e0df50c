//! The Sample-Rotate-Project update on coarse-grained configurations.
//!
//! One step samples a continuous configuration from the constrained measure
//! of the current labels, rotates every spin by `τ`, and re-projects. In
//! cell coordinates the rotation moves an offset `u` by `τ`; the label
//! increment is the number of cell boundaries crossed.

use serde::{Deserialize, Serialize};

use crate::discretization::DiscreteConfig;
use crate::error::{Error, Result};
use crate::observables::{angle_of, magnetization};
use crate::rng::StreamRng;
use crate::rotor_model::{total_energy, ModelParams};
use crate::samplers::{CellState, ConstrainedSampler, SamplerSettings};

/// Per-site label increments `η′_i − σ′_i mod q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncrementField {
    pub increments: Vec<usize>,
    pub q: usize,
}

impl IncrementField {
    /// Fraction of sites whose label changed.
    pub fn moved_fraction(&self) -> f64 {
        if self.increments.is_empty() {
            return 0.0;
        }
        self.increments.iter().filter(|&&n| n != 0).count() as f64 / self.increments.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub step: usize,
    pub magnetization: [f64; 2],
    pub angle: f64,
    pub increment_fraction: f64,
    pub energy: f64,
}

/// `τ = whole · w + rem` with `rem ∈ [0, w)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RotationSplit {
    pub whole: i64,
    pub rem: f64,
    pub width: f64,
}

impl RotationSplit {
    pub fn new(tau: f64, width: f64) -> Self {
        let mut whole = (tau / width).floor() as i64;
        let mut rem = tau - whole as f64 * width;
        if rem >= width {
            whole += 1;
            rem = 0.0;
        }
        RotationSplit {
            whole,
            rem: rem.max(0.0),
            width,
        }
    }

    /// Offset from which a spin crosses one more boundary.
    pub fn breakpoint(&self) -> f64 {
        self.width - self.rem
    }

    /// Increment and new offset of a spin at offset `u`.
    #[inline]
    pub fn apply(&self, u: f64) -> (i64, f64) {
        let top = self.width.next_down();
        if self.rem > 0.0 && u >= self.breakpoint() {
            (self.whole + 1, (u - self.breakpoint()).clamp(0.0, top))
        } else {
            (self.whole, (u + self.rem).min(top))
        }
    }
}

/// Result of one update.
#[derive(Debug, Clone)]
pub struct SrpOutcome {
    /// Continuous configuration sampled from the constrained measure before rotation.
    pub sampled: CellState,
    pub state: DiscreteConfig,
    pub increments: IncrementField,
}

/// A running SRP Markov chain.
pub struct SrpChain<'a> {
    params: &'a ModelParams,
    settings: SamplerSettings,
    sampler: ConstrainedSampler<'a>,
    split: RotationSplit,
    current: CellState,
    steps_done: u64,
}

impl<'a> SrpChain<'a> {
    pub fn new(params: &'a ModelParams, initial: DiscreteConfig, settings: SamplerSettings) -> Result<Self> {
        settings.validate()?;
        if initial.q != params.q || initial.len() != params.lattice.site_count() {
            return Err(Error::Param(
                "initial configuration does not match the model".into(),
            ));
        }
        Ok(SrpChain {
            params,
            settings,
            sampler: ConstrainedSampler::new(params, settings.schedule)?,
            split: RotationSplit::new(params.tau, params.cell_width()),
            current: CellState::at_midpoints(initial),
            steps_done: 0,
        })
    }

    pub fn state(&self) -> &DiscreteConfig {
        &self.current.labels
    }

    pub fn steps_done(&self) -> u64 {
        self.steps_done
    }

    pub fn step(&mut self, rng: &mut StreamRng) -> SrpOutcome {
        let mut cells = if self.settings.warm_start {
            self.current.clone()
        } else {
            CellState::at_midpoints(self.current.labels.clone())
        };
        for _ in 0..self.settings.sweeps {
            self.sampler.sweep(&mut cells, rng);
        }

        let q = self.params.q;
        let n = cells.offsets.len();
        let mut labels = Vec::with_capacity(n);
        let mut offsets = Vec::with_capacity(n);
        let mut increments = Vec::with_capacity(n);
        for (&k, &u) in cells.labels.labels.iter().zip(&cells.offsets) {
            let (inc, u2) = self.split.apply(u);
            let inc = inc.rem_euclid(q as i64) as usize;
            labels.push((k + inc) % q);
            offsets.push(u2);
            increments.push(inc);
        }
        let state = DiscreteConfig { labels, q };
        self.current = CellState {
            labels: state.clone(),
            offsets,
        };
        self.steps_done += 1;
        SrpOutcome {
            sampled: cells,
            state,
            increments: IncrementField { increments, q },
        }
    }
}

pub fn srp_step(
    params: &ModelParams,
    state: &DiscreteConfig,
    settings: &SamplerSettings,
    rng: &mut StreamRng,
) -> Result<(DiscreteConfig, IncrementField)> {
    let fresh = SamplerSettings {
        warm_start: false,
        ..*settings
    };
    let out = SrpChain::new(params, state.clone(), fresh)?.step(rng);
    Ok((out.state, out.increments))
}

/// Observables of one step: magnetization, its angle and the energy of the
/// sampled continuous layer, plus the fraction of sites that moved.
pub fn record(params: &ModelParams, step: usize, outcome: &SrpOutcome) -> TrajectoryRecord {
    let config = outcome.sampled.to_continuous();
    let m = magnetization(&config);
    TrajectoryRecord {
        step,
        magnetization: m,
        angle: angle_of(m).unwrap_or(0.0),
        increment_fraction: outcome.increments.moved_fraction(),
        energy: total_energy(params, &config).expect("sampled configuration matches lattice"),
    }
}

pub fn run_trajectory(
    params: &ModelParams,
    initial: &DiscreteConfig,
    steps: usize,
    settings: &SamplerSettings,
    rng: &mut StreamRng,
) -> Result<Vec<TrajectoryRecord>> {
    if steps == 0 {
        return Err(Error::Param("steps must be >= 1".into()));
    }
    let mut chain = SrpChain::new(params, initial.clone(), *settings)?;
    Ok((0..steps)
        .map(|t| {
            let out = chain.step(rng);
            record(params, t, &out)
        })
        .collect())
}

/// True iff every increment is 0 or 1.
pub fn verify_bernoulli(field: &IncrementField, _params: &ModelParams) -> bool {
    field.increments.iter().all(|&n| n <= 1)
}
