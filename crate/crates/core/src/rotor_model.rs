//! Continuous-spin rotator model with nearest-neighbor cosine coupling.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::lattice::TorusLattice;

/// Canonical representative of an angle in `[0, 2π)` (floored modulo).
#[inline]
pub fn canonical_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid of a tiny negative number rounds up to exactly 2π.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Pair interaction of the first-layer model. Only the cosine coupling is
/// provided; the trait marks where other nearest-neighbor potentials would
/// plug in.
pub trait PairPotential {
    fn bond_energy(&self, a: f64, b: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineCoupling {
    pub beta: f64,
}

impl PairPotential for CosineCoupling {
    #[inline]
    fn bond_energy(&self, a: f64, b: f64) -> f64 {
        -self.beta * (a - b).cos()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub beta: f64,
    pub q: usize,
    pub tau: f64,
    pub lattice: TorusLattice,
}

impl ModelParams {
    pub fn new(beta: f64, q: usize, tau: f64, lattice: TorusLattice) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::Param(format!("beta must be finite and >= 0, got {beta}")));
        }
        if q < 2 {
            return Err(Error::Param(format!("q must be >= 2, got {q}")));
        }
        if !(tau > -TAU && tau < TAU) {
            return Err(Error::Param(format!("tau must lie in (-2pi, 2pi), got {tau}")));
        }
        Ok(ModelParams {
            beta,
            q,
            tau,
            lattice,
        })
    }

    /// Arc width `2π/q` of one coarse-graining cell.
    #[inline]
    pub fn cell_width(&self) -> f64 {
        TAU / self.q as f64
    }

    /// Whether one update can only add 0 or 1 to each label.
    pub fn bernoulli_regime(&self) -> bool {
        self.tau >= 0.0 && self.tau <= self.cell_width()
    }

    pub fn coupling(&self) -> CosineCoupling {
        CosineCoupling { beta: self.beta }
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        ModelParams::new(self.beta, self.q, tau, self.lattice.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousConfig {
    pub angles: Vec<f64>,
}

impl ContinuousConfig {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if let Some((i, a)) = angles
            .iter()
            .enumerate()
            .find(|(_, a)| !(**a >= 0.0 && **a < TAU))
        {
            return Err(Error::Param(format!("angle {a} at site {i} outside [0, 2pi)")));
        }
        Ok(ContinuousConfig { angles })
    }

    /// Builds a configuration from arbitrary reals, canonicalizing each.
    pub fn from_raw(angles: impl IntoIterator<Item = f64>) -> Self {
        ContinuousConfig {
            angles: angles.into_iter().map(canonical_angle).collect(),
        }
    }

    pub fn constant(n: usize, angle: f64) -> Self {
        ContinuousConfig {
            angles: vec![canonical_angle(angle); n],
        }
    }

    pub fn rotated(&self, c: f64) -> Self {
        ContinuousConfig::from_raw(self.angles.iter().map(|a| a + c))
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

fn check_len(params: &ModelParams, config: &ContinuousConfig) -> Result<()> {
    let n = params.lattice.site_count();
    if config.len() != n {
        return Err(Error::Param(format!(
            "configuration has {} sites, lattice has {n}",
            config.len()
        )));
    }
    Ok(())
}

/// Polar form `(κ, μ)` of `β Σ_j m_ij (cos σ_j, sin σ_j)`, so that the
/// single-site conditional density is `∝ exp(κ cos(θ − μ))`. Self-loops
/// (side length 1) carry no angle dependence and are skipped.
pub fn local_field(params: &ModelParams, config: &ContinuousConfig, site: usize) -> Result<(f64, f64)> {
    check_len(params, config)?;
    let nbrs = params.lattice.neighbors(site)?;
    let (mut hx, mut hy) = (0.0, 0.0);
    for &(j, m) in nbrs {
        if j == site {
            continue;
        }
        let (s, c) = config.angles[j].sin_cos();
        hx += m as f64 * c;
        hy += m as f64 * s;
    }
    Ok(polar(params.beta * hx, params.beta * hy))
}

/// `(|h|, arg h)` with the argument in `[0, 2π)`; a zero vector maps to `(0, 0)`.
#[inline]
pub(crate) fn polar(hx: f64, hy: f64) -> (f64, f64) {
    let kappa = hx.hypot(hy);
    if kappa == 0.0 {
        (0.0, 0.0)
    } else {
        (kappa, canonical_angle(hy.atan2(hx)))
    }
}

/// `H = −β Σ_{⟨ij⟩} cos(σ_i − σ_j)` over nearest-neighbor pairs counted with
/// multiplicity.
pub fn total_energy(params: &ModelParams, config: &ContinuousConfig) -> Result<f64> {
    check_len(params, config)?;
    let pot = params.coupling();
    Ok(params
        .lattice
        .forward_bonds()
        .map(|(i, j)| pot.bond_energy(config.angles[i], config.angles[j]))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_torus;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn ring(l: usize, beta: f64) -> ModelParams {
        ModelParams::new(beta, 8, 0.1, build_torus(&[l]).unwrap()).unwrap()
    }

    #[test]
    fn canonical_angle_edges() {
        assert_eq!(canonical_angle(0.0), 0.0);
        assert_eq!(canonical_angle(TAU), 0.0);
        assert_eq!(canonical_angle(-1e-18), 0.0);
        assert!((canonical_angle(-PI / 2.0) - 1.5 * PI).abs() < 1e-15);
    }

    #[test]
    fn free_field_is_zero() {
        let p = ring(4, 0.0);
        let c = ContinuousConfig::from_raw([0.3, 1.0, 2.0, 5.0]);
        assert_eq!(local_field(&p, &c, 1).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn aligned_neighbors() {
        let p = ring(4, 1.0);
        let c = ContinuousConfig::from_raw([0.0, 1.0, 0.0, 3.0]);
        let (k, mu) = local_field(&p, &c, 1).unwrap();
        assert!((k - 2.0).abs() < 1e-15);
        assert_eq!(mu, 0.0);
    }

    #[test]
    fn cancelling_neighbors() {
        let p = ring(4, 1.0);
        let c = ContinuousConfig::from_raw([0.0, 1.0, PI, 3.0]);
        let (k, _) = local_field(&p, &c, 1).unwrap();
        assert!(k < 1e-15);
    }

    #[test]
    fn energies_on_ring_of_four() {
        let p = ring(4, 1.0);
        let flat = ContinuousConfig::constant(4, 0.7);
        assert!((total_energy(&p, &flat).unwrap() + 4.0).abs() < 1e-12);
        let alt = ContinuousConfig::from_raw([0.0, PI, 0.0, PI]);
        assert!((total_energy(&p, &alt).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn energy_matches_edge_enumeration() {
        let lat = build_torus(&[3, 4, 2]).unwrap();
        let p = ModelParams::new(0.8, 5, 0.2, lat.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = ContinuousConfig::from_raw((0..lat.site_count()).map(|_| rng.random::<f64>() * TAU));
        // Independent route: half the sum over ordered neighbor pairs with multiplicity.
        let mut brute = 0.0;
        for i in 0..lat.site_count() {
            for &(j, m) in lat.neighbors(i).unwrap() {
                brute += m as f64 * (c.angles[i] - c.angles[j]).cos();
            }
        }
        brute *= -0.8 / 2.0;
        assert!((total_energy(&p, &c).unwrap() - brute).abs() < 1e-10);
    }

    #[test]
    fn conditional_matches_energy_differences() {
        let lat = build_torus(&[3, 3]).unwrap();
        let p = ModelParams::new(1.3, 6, 0.2, lat.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let c = ContinuousConfig::from_raw((0..9).map(|_| rng.random::<f64>() * TAU));
            let site = rng.random_range(0..9);
            let (k, mu) = local_field(&p, &c, site).unwrap();
            let (a, b) = (rng.random::<f64>() * TAU, rng.random::<f64>() * TAU);
            let mut ca = c.clone();
            ca.angles[site] = a;
            let mut cb = c.clone();
            cb.angles[site] = b;
            let dh = total_energy(&p, &cb).unwrap() - total_energy(&p, &ca).unwrap();
            let from_field = k * ((b - mu).cos() - (a - mu).cos());
            assert!((-dh - from_field).abs() < 1e-10);
        }
    }

    #[test]
    fn bernoulli_flag() {
        let lat = build_torus(&[2]).unwrap();
        let w = TAU / 12.0;
        assert!(ModelParams::new(0.0, 12, 0.0, lat.clone()).unwrap().bernoulli_regime());
        assert!(ModelParams::new(0.0, 12, w, lat.clone()).unwrap().bernoulli_regime());
        assert!(!ModelParams::new(0.0, 12, 1.01 * w, lat.clone()).unwrap().bernoulli_regime());
        assert!(!ModelParams::new(0.0, 12, -0.1, lat.clone()).unwrap().bernoulli_regime());
        assert!(ModelParams::new(0.0, 1, 0.0, lat.clone()).is_err());
        assert!(ModelParams::new(-1.0, 4, 0.0, lat.clone()).is_err());
        assert!(ModelParams::new(1.0, 4, TAU, lat).is_err());
    }
}
