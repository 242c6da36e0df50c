//! Heat-bath sampling of the free rotator Gibbs measure and of the measure
//! constrained to a fixed coarse-grained configuration.
//!
//! The constrained chain stores each spin as (label, offset within the
//! cell). Local fields are computed from label differences and offsets
//! only, so shifting every label by the same amount leaves the sampled
//! offsets bit-for-bit unchanged.

use std::f64::consts::{PI, TAU};
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::{cell_lo, project, Arc, DiscreteConfig};
use crate::error::{Error, Result};
use crate::lattice::TorusLattice;
use crate::rng::StreamRng;
use crate::rotor_model::{canonical_angle, local_field, polar, ContinuousConfig, ModelParams};

/// Below this guaranteed acceptance rate the uniform proposal is replaced
/// by a piecewise-constant envelope.
const MIN_UNIFORM_ACCEPTANCE: f64 = 0.05;
const ENVELOPE_CELLS: usize = 1024;
pub const DEFAULT_SWEEPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    #[default]
    Sequential,
    Checkerboard,
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" => Ok(Schedule::Sequential),
            "checkerboard" => Ok(Schedule::Checkerboard),
            other => Err(Error::Config(format!("unknown schedule {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerSettings {
    pub sweeps: usize,
    pub seed: u64,
    pub schedule: Schedule,
    /// Reuse the previous continuous configuration between SRP steps instead
    /// of restarting from cell midpoints. Faster, but the step no longer
    /// samples the constrained measure afresh.
    pub warm_start: bool,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        SamplerSettings {
            sweeps: DEFAULT_SWEEPS,
            seed: 0,
            schedule: Schedule::Sequential,
            warm_start: false,
        }
    }
}

impl SamplerSettings {
    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 {
            return Err(Error::Param("sweeps must be >= 1".into()));
        }
        Ok(())
    }
}

/// Draw from the von Mises density `∝ exp(κ cos(θ − μ))` on `[0, 2π)`.
pub fn sample_von_mises<R: Rng + ?Sized>(kappa: f64, mu: f64, rng: &mut R) -> f64 {
    if kappa < 0.5 {
        // acceptance I0(κ)e^{-κ} stays above 0.64 here
        return sample_offset(kappa, canonical_angle(mu), TAU, rng);
    }
    // Best & Fisher (1979), in the parametrization used by numpy.
    let s = 0.5 / kappa;
    let r = s + (1.0 + s * s).sqrt();
    let w = loop {
        let u: f64 = rng.random();
        let z = (PI * u).cos();
        let w = (1.0 + r * z) / (r + z);
        let y = kappa * (r - w);
        let v: f64 = rng.random();
        if y * (2.0 - y) - v >= 0.0 || (y / v).ln() + 1.0 - y >= 0.0 {
            break w;
        }
    };
    let mut theta = w.clamp(-1.0, 1.0).acos();
    if rng.random::<f64>() < 0.5 {
        theta = -theta;
    }
    canonical_angle(theta + mu)
}

/// Draw from the von Mises density restricted to `arc`.
pub fn sample_von_mises_on_arc<R: Rng + ?Sized>(kappa: f64, mu: f64, arc: &Arc, rng: &mut R) -> f64 {
    let u = sample_offset(kappa, arc.offset_of(mu), arc.width(), rng);
    let x = canonical_angle(arc.lo + u);
    if arc.contains(x) {
        x
    } else {
        arc.lo
    }
}

/// Range of `cos(u − μ)` over `u ∈ [a, b]`.
#[inline]
fn cos_range(mu: f64, a: f64, b: f64) -> (f64, f64) {
    let len = b - a;
    let ca = (a - mu).cos();
    let cb = (b - mu).cos();
    let max = if canonical_angle(mu - a) <= len { 1.0 } else { ca.max(cb) };
    let min = if canonical_angle(mu + PI - a) <= len { -1.0 } else { ca.min(cb) };
    (max, min)
}

/// Offset in `[0, width)` drawn from `∝ exp(κ cos(u − μ))`, where `μ` is
/// measured from the start of the interval.
pub(crate) fn sample_offset<R: Rng + ?Sized>(kappa: f64, mu: f64, width: f64, rng: &mut R) -> f64 {
    let top = width.next_down();
    if kappa == 0.0 {
        return (width * rng.random::<f64>()).min(top);
    }
    let (cmax, cmin) = cos_range(mu, 0.0, width);
    if (-kappa * (cmax - cmin)).exp() >= MIN_UNIFORM_ACCEPTANCE {
        loop {
            let u = (width * rng.random::<f64>()).min(top);
            if rng.random::<f64>() < (kappa * ((u - mu).cos() - cmax)).exp() {
                return u;
            }
        }
    }
    sample_offset_enveloped(kappa, mu, width, cmax, rng)
}

fn sample_offset_enveloped<R: Rng + ?Sized>(kappa: f64, mu: f64, width: f64, cmax: f64, rng: &mut R) -> f64 {
    let h = width / ENVELOPE_CELLS as f64;
    let mut heights = Vec::with_capacity(ENVELOPE_CELLS);
    let mut cumulative = Vec::with_capacity(ENVELOPE_CELLS);
    let mut total = 0.0;
    for c in 0..ENVELOPE_CELLS {
        let a = c as f64 * h;
        let (cm, _) = cos_range(mu, a, a + h);
        heights.push(cm);
        total += (kappa * (cm - cmax)).exp();
        cumulative.push(total);
    }
    let top = width.next_down();
    loop {
        let t = total * rng.random::<f64>();
        let c = cumulative.partition_point(|&x| x <= t).min(ENVELOPE_CELLS - 1);
        let u = ((c as f64 + rng.random::<f64>()) * h).min(top);
        if rng.random::<f64>() < (kappa * ((u - mu).cos() - heights[c])).exp() {
            return u;
        }
    }
}

/// Spin configuration in cell coordinates: a label and an offset in
/// `[0, 2π/q)` per site.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub labels: DiscreteConfig,
    pub offsets: Vec<f64>,
}

/// Angle in cell `k` at offset `u`, nudged so that it projects back to `k`.
pub(crate) fn place_in_cell(k: usize, q: usize, u: f64) -> f64 {
    let lo = cell_lo(k, q);
    let hi = if k + 1 == q { TAU } else { cell_lo(k + 1, q) };
    (lo + u).clamp(lo, hi.next_down())
}

impl CellState {
    pub fn at_midpoints(labels: DiscreteConfig) -> Self {
        let w = TAU / labels.q as f64;
        let offsets = vec![0.5 * w; labels.len()];
        CellState { labels, offsets }
    }

    pub fn from_continuous(config: &ContinuousConfig, constraint: &DiscreteConfig) -> Result<Self> {
        let q = constraint.q;
        let w = TAU / q as f64;
        if config.len() != constraint.len() {
            return Err(Error::Param(format!(
                "configuration has {} sites, constraint has {}",
                config.len(),
                constraint.len()
            )));
        }
        let mut offsets = Vec::with_capacity(config.len());
        for (site, (&a, &k)) in config.angles.iter().zip(&constraint.labels).enumerate() {
            if project(a, q) != k {
                return Err(Error::ConstraintViolation { site, angle: a, label: k });
            }
            offsets.push((a - cell_lo(k, q)).clamp(0.0, w.next_down()));
        }
        Ok(CellState {
            labels: constraint.clone(),
            offsets,
        })
    }

    pub fn to_continuous(&self) -> ContinuousConfig {
        let q = self.labels.q;
        ContinuousConfig {
            angles: self
                .labels
                .labels
                .iter()
                .zip(&self.offsets)
                .map(|(&k, &u)| place_in_cell(k, q, u))
                .collect(),
        }
    }
}

fn color_classes(lat: &TorusLattice) -> [Vec<usize>; 2] {
    let mut classes = [Vec::new(), Vec::new()];
    for s in 0..lat.site_count() {
        classes[lat.parity(s)].push(s);
    }
    classes
}

fn check_constraint(params: &ModelParams, constraint: &DiscreteConfig) -> Result<()> {
    if constraint.q != params.q {
        return Err(Error::Param(format!(
            "constraint uses q = {}, model uses q = {}",
            constraint.q, params.q
        )));
    }
    if constraint.len() != params.lattice.site_count() {
        return Err(Error::Param(format!(
            "constraint has {} sites, lattice has {}",
            constraint.len(),
            params.lattice.site_count()
        )));
    }
    Ok(())
}

/// Heat-bath sweeps of the constrained measure in cell coordinates.
pub struct ConstrainedSampler<'a> {
    params: &'a ModelParams,
    schedule: Schedule,
    classes: Option<[Vec<usize>; 2]>,
    // cos/sin of the lower endpoint of cell d, indexed by label difference
    base: Vec<f64>,
}

impl<'a> ConstrainedSampler<'a> {
    pub fn new(params: &'a ModelParams, schedule: Schedule) -> Result<Self> {
        let classes = match schedule {
            Schedule::Sequential => None,
            Schedule::Checkerboard => {
                if !params.lattice.is_bipartite() {
                    return Err(Error::Param(
                        "checkerboard schedule needs even side lengths".into(),
                    ));
                }
                Some(color_classes(&params.lattice))
            }
        };
        let base = (0..params.q).map(|d| cell_lo(d, params.q)).collect();
        Ok(ConstrainedSampler {
            params,
            schedule,
            classes,
            base,
        })
    }

    /// Concentration and mean direction of the conditional at `site`, the
    /// direction measured from the start of the site's own cell.
    #[inline]
    pub fn cell_field(&self, state: &CellState, site: usize) -> (f64, f64) {
        let q = self.params.q;
        let labels = &state.labels.labels;
        let ki = labels[site];
        let (mut hx, mut hy) = (0.0, 0.0);
        for &(j, m) in self.params.lattice.neighbors_unchecked(site) {
            if j == site {
                continue;
            }
            let d = (labels[j] + q - ki) % q;
            let (s, c) = (self.base[d] + state.offsets[j]).sin_cos();
            hx += m as f64 * c;
            hy += m as f64 * s;
        }
        polar(self.params.beta * hx, self.params.beta * hy)
    }

    #[inline]
    fn resample(&self, state: &CellState, site: usize, rng: &mut impl Rng) -> f64 {
        let (kappa, mu) = self.cell_field(state, site);
        sample_offset(kappa, mu, self.params.cell_width(), rng)
    }

    pub fn sweep(&self, state: &mut CellState, rng: &mut StreamRng) {
        let streams = rng.next_sweep();
        match (&self.schedule, &self.classes) {
            (Schedule::Checkerboard, Some(classes)) => {
                for class in classes {
                    let snapshot = &*state;
                    let fresh: Vec<f64> = class
                        .par_iter()
                        .map(|&s| self.resample(snapshot, s, &mut streams.site(s)))
                        .collect();
                    for (&s, u) in class.iter().zip(fresh) {
                        state.offsets[s] = u;
                    }
                }
            }
            _ => {
                for s in 0..state.offsets.len() {
                    state.offsets[s] = self.resample(state, s, &mut streams.site(s));
                }
            }
        }
    }
}

/// One constrained heat-bath sweep. The input must satisfy the constraint.
pub fn constrained_sweep(
    params: &ModelParams,
    config: &ContinuousConfig,
    constraint: &DiscreteConfig,
    settings: &SamplerSettings,
    rng: &mut StreamRng,
) -> Result<ContinuousConfig> {
    check_constraint(params, constraint)?;
    let mut state = CellState::from_continuous(config, constraint)?;
    ConstrainedSampler::new(params, settings.schedule)?.sweep(&mut state, rng);
    Ok(state.to_continuous())
}

/// Fresh constrained chain: midpoint start followed by `settings.sweeps` sweeps.
pub fn sample_constrained_cells(
    params: &ModelParams,
    constraint: &DiscreteConfig,
    settings: &SamplerSettings,
    rng: &mut StreamRng,
) -> Result<CellState> {
    check_constraint(params, constraint)?;
    settings.validate()?;
    let sampler = ConstrainedSampler::new(params, settings.schedule)?;
    let mut state = CellState::at_midpoints(constraint.clone());
    for _ in 0..settings.sweeps {
        sampler.sweep(&mut state, rng);
    }
    Ok(state)
}

pub fn sample_constrained(
    params: &ModelParams,
    constraint: &DiscreteConfig,
    settings: &SamplerSettings,
    rng: &mut StreamRng,
) -> Result<ContinuousConfig> {
    sample_constrained_cells(params, constraint, settings, rng).map(|s| s.to_continuous())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    Periodic,
    /// Sites with any coordinate equal to 0 are held at this angle.
    FixedAngle(f64),
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "periodic" {
            return Ok(Boundary::Periodic);
        }
        let angle = s
            .strip_prefix("fixed:")
            .or_else(|| s.strip_prefix("fixed_angle:"))
            .ok_or_else(|| Error::Config(format!("unknown boundary {s:?}")))?;
        angle
            .parse::<f64>()
            .map(Boundary::FixedAngle)
            .map_err(|e| Error::Config(format!("bad boundary angle {angle:?}: {e}")))
    }
}

/// Unconstrained heat-bath chain for the finite-volume Gibbs measure.
pub struct EquilibriumSampler<'a> {
    params: &'a ModelParams,
    schedule: Schedule,
    classes: Option<[Vec<usize>; 2]>,
    clamped: Vec<bool>,
    boundary: Boundary,
}

impl<'a> EquilibriumSampler<'a> {
    pub fn new(params: &'a ModelParams, boundary: Boundary, schedule: Schedule) -> Result<Self> {
        let lat = &params.lattice;
        let classes = match schedule {
            Schedule::Sequential => None,
            Schedule::Checkerboard => {
                if !lat.is_bipartite() {
                    return Err(Error::Param(
                        "checkerboard schedule needs even side lengths".into(),
                    ));
                }
                Some(color_classes(lat))
            }
        };
        let clamped = match boundary {
            Boundary::Periodic => vec![false; lat.site_count()],
            Boundary::FixedAngle(_) => (0..lat.site_count()).map(|s| lat.is_shell(s)).collect(),
        };
        Ok(EquilibriumSampler {
            params,
            schedule,
            classes,
            clamped,
            boundary,
        })
    }

    /// Uniform random start with the boundary shell set to its angle.
    pub fn initial(&self, rng: &mut StreamRng) -> ContinuousConfig {
        let streams = rng.next_sweep();
        let angles = (0..self.clamped.len())
            .map(|s| match (self.boundary, self.clamped[s]) {
                (Boundary::FixedAngle(phi), true) => canonical_angle(phi),
                _ => (TAU * streams.site(s).random::<f64>()).min(TAU.next_down()),
            })
            .collect();
        ContinuousConfig { angles }
    }

    fn resample(&self, config: &ContinuousConfig, site: usize, rng: &mut impl Rng) -> f64 {
        // lattice and config lengths are validated at construction
        let (kappa, mu) = local_field(self.params, config, site).expect("validated site");
        sample_von_mises(kappa, mu, rng)
    }

    pub fn sweep(&self, config: &mut ContinuousConfig, rng: &mut StreamRng) {
        let streams = rng.next_sweep();
        match (&self.schedule, &self.classes) {
            (Schedule::Checkerboard, Some(classes)) => {
                for class in classes {
                    let snapshot = &*config;
                    let fresh: Vec<(usize, f64)> = class
                        .par_iter()
                        .filter(|&&s| !self.clamped[s])
                        .map(|&s| (s, self.resample(snapshot, s, &mut streams.site(s))))
                        .collect();
                    for (s, a) in fresh {
                        config.angles[s] = a;
                    }
                }
            }
            _ => {
                for s in 0..config.len() {
                    if !self.clamped[s] {
                        config.angles[s] = self.resample(config, s, &mut streams.site(s));
                    }
                }
            }
        }
    }
}

pub fn sample_equilibrium(
    params: &ModelParams,
    boundary: Boundary,
    settings: &SamplerSettings,
    rng: &mut StreamRng,
) -> Result<ContinuousConfig> {
    settings.validate()?;
    let sampler = EquilibriumSampler::new(params, boundary, settings.schedule)?;
    let mut config = sampler.initial(rng);
    for _ in 0..settings.sweeps {
        sampler.sweep(&mut config, rng);
    }
    Ok(config)
}

/// Continues an equilibrium chain from a stored configuration.
pub fn continue_equilibrium(
    params: &ModelParams,
    boundary: Boundary,
    mut config: ContinuousConfig,
    sweeps: usize,
    schedule: Schedule,
    rng: &mut StreamRng,
) -> Result<ContinuousConfig> {
    if config.len() != params.lattice.site_count() {
        return Err(Error::Param("configuration does not match the lattice".into()));
    }
    let sampler = EquilibriumSampler::new(params, boundary, schedule)?;
    for _ in 0..sweeps {
        sampler.sweep(&mut config, rng);
    }
    Ok(config)
}
