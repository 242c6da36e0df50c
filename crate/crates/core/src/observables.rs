//! Order parameters, drift estimation and increment statistics.

use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::discretization::DiscreteConfig;
use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::rotor_model::{canonical_angle, ContinuousConfig, ModelParams};
use crate::samplers::{place_in_cell, sample_constrained_cells, sample_equilibrium, Boundary, SamplerSettings};
use crate::srp::IncrementField;

/// Volume average of `(cos σ_i, sin σ_i)`.
pub fn magnetization(config: &ContinuousConfig) -> [f64; 2] {
    let n = config.len().max(1) as f64;
    let (sx, sy) = config.angles.iter().fold((0.0, 0.0), |(x, y), a| {
        let (s, c) = a.sin_cos();
        (x + c, y + s)
    });
    [sx / n, sy / n]
}

/// Planar argument in `[0, 2π)`.
pub fn angle_of(v: [f64; 2]) -> Result<f64> {
    if v[0] == 0.0 && v[1] == 0.0 {
        return Err(Error::UndefinedAngle);
    }
    Ok(canonical_angle(v[1].atan2(v[0])))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiEstimate {
    /// Mean of `(cos σ_0, sin σ_0)` over the chains, not normalized by `m`.
    pub vector: [f64; 2],
    pub norm: f64,
    pub std_error: [f64; 2],
}

/// Monte Carlo estimate of the constrained expectation of the spin at site
/// 0, from `n_chains` independent constrained chains.
pub fn psi_estimate(
    params: &ModelParams,
    state: &DiscreteConfig,
    n_chains: usize,
    settings: &SamplerSettings,
    rng: &mut StreamRng,
) -> Result<PsiEstimate> {
    if n_chains == 0 {
        return Err(Error::Param("n_chains must be >= 1".into()));
    }
    let children: Vec<StreamRng> = (0..n_chains as u64).map(|c| rng.fork(c)).collect();
    rng.advance(1);
    let samples = children
        .into_par_iter()
        .map(|mut r| {
            let cells = sample_constrained_cells(params, state, settings, &mut r)?;
            let a = place_in_cell(cells.labels.labels[0], params.q, cells.offsets[0]);
            let (s, c) = a.sin_cos();
            Ok([c, s])
        })
        .collect::<Result<Vec<[f64; 2]>>>()?;

    let n = samples.len() as f64;
    let mean = [0, 1].map(|k| samples.iter().map(|v| v[k]).sum::<f64>() / n);
    let std_error = [0, 1].map(|k| {
        if samples.len() < 2 {
            return 0.0;
        }
        let var = samples.iter().map(|v| (v[k] - mean[k]).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    });
    Ok(PsiEstimate {
        vector: mean,
        norm: mean[0].hypot(mean[1]),
        std_error,
    })
}

/// Magnetization length of an equilibrium sample with the boundary shell
/// held at angle 0; the empirical normalizer for [`psi_estimate`].
pub fn magnetization_length(params: &ModelParams, settings: &SamplerSettings, rng: &mut StreamRng) -> Result<f64> {
    let config = sample_equilibrium(params, Boundary::FixedAngle(0.0), settings, rng)?;
    let m = magnetization(&config);
    Ok(m[0].hypot(m[1]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftFit {
    /// Radians per step.
    pub rate: f64,
    pub intercept: f64,
    pub residual_rms: f64,
}

/// Continues each angle onto the branch nearest its predecessor.
pub fn unwrap_angles(angles: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(angles.len());
    let mut prev: Option<f64> = None;
    for &a in angles {
        let next = match prev {
            None => a,
            Some(p) => {
                let jump = (a - p).rem_euclid(TAU);
                let jump = if jump > TAU / 2.0 { jump - TAU } else { jump };
                p + jump
            }
        };
        out.push(next);
        prev = Some(next);
    }
    out
}

/// Linear fit of the unwrapped angle against the step index, discarding the
/// first 10% of samples.
pub fn drift_fit(angles: &[f64]) -> Result<DriftFit> {
    drift_fit_with_burn_in(angles, angles.len() / 10)
}

pub fn drift_fit_with_burn_in(angles: &[f64], burn_in: usize) -> Result<DriftFit> {
    if angles.len() < 10 {
        return Err(Error::TooFewSamples {
            need: 10,
            got: angles.len(),
        });
    }
    if burn_in + 2 > angles.len() {
        return Err(Error::Param(format!(
            "burn-in of {burn_in} leaves fewer than two of {} samples",
            angles.len()
        )));
    }
    let y = unwrap_angles(angles);
    let pts: Vec<(f64, f64)> = (burn_in..y.len()).map(|t| (t as f64, y[t])).collect();
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(t, v)| (t - tm) * (v - ym)).sum();
    let sxx: f64 = pts.iter().map(|(t, _)| (t - tm).powi(2)).sum();
    let rate = sxy / sxx;
    let intercept = ym - rate * tm;
    let residual_rms = (pts
        .iter()
        .map(|(t, v)| (v - intercept - rate * t).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(DriftFit {
        rate,
        intercept,
        residual_rms,
    })
}

/// Pooled fraction of `+1` increments and the largest increment seen.
pub fn increment_stats(fields: &[IncrementField]) -> Result<(f64, usize)> {
    let total: usize = fields.iter().map(|f| f.increments.len()).sum();
    if total == 0 {
        return Err(Error::TooFewSamples { need: 1, got: 0 });
    }
    let ones = fields
        .iter()
        .flat_map(|f| &f.increments)
        .filter(|&&n| n == 1)
        .count();
    let max = fields
        .iter()
        .flat_map(|f| &f.increments)
        .copied()
        .max()
        .unwrap_or(0);
    Ok((ones as f64 / total as f64, max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn magnetization_examples() {
        let m = magnetization(&ContinuousConfig::constant(7, 1.2));
        assert!((m[0] - 1.2f64.cos()).abs() < 1e-15 && (m[1] - 1.2f64.sin()).abs() < 1e-15);
        let m = magnetization(&ContinuousConfig::from_raw([0.0, PI]));
        assert!(m[0].abs() < 1e-15 && m[1].abs() < 1e-15);
    }

    #[test]
    fn angle_examples() {
        assert_eq!(angle_of([1.0, 0.0]).unwrap(), 0.0);
        assert!((angle_of([0.0, -1.0]).unwrap() - 1.5 * PI).abs() < 1e-15);
        assert!((angle_of([-1.0, 0.0]).unwrap() - PI).abs() < 1e-15);
        assert!(matches!(angle_of([0.0, 0.0]), Err(Error::UndefinedAngle)));
    }

    #[test]
    fn drift_of_clean_ramp() {
        let angles: Vec<f64> = (0..100).map(|t| canonical_angle(0.1 * t as f64)).collect();
        let fit = drift_fit(&angles).unwrap();
        assert!((fit.rate - 0.1).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-10);
        assert!(fit.residual_rms < 1e-12);
    }

    #[test]
    fn drift_of_constant() {
        let fit = drift_fit(&[2.5; 30]).unwrap();
        assert_eq!(fit.rate, 0.0);
        assert!(drift_fit(&[1.0; 9]).is_err());
    }

    #[test]
    fn drift_with_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let angles: Vec<f64> = (0..400)
            .map(|t| {
                // Box-Muller
                let (u1, u2): (f64, f64) = (rng.random(), rng.random());
                let z = (-2.0 * (1.0 - u1).ln()).sqrt() * (TAU * u2).cos();
                canonical_angle(1.0 + 0.05 * t as f64 + 0.02 * z)
            })
            .collect();
        let fit = drift_fit(&angles).unwrap();
        assert!((fit.rate - 0.05).abs() < 0.005, "{fit:?}");
    }

    #[test]
    fn unwrap_handles_backwards_wrap() {
        let y = unwrap_angles(&[0.1, TAU - 0.1, TAU - 0.3]);
        assert!((y[1] + 0.1).abs() < 1e-12);
        assert!((y[2] + 0.3).abs() < 1e-12);
    }

    #[test]
    fn increment_stats_examples() {
        let zeros = IncrementField { increments: vec![0; 10], q: 4 };
        assert_eq!(increment_stats(std::slice::from_ref(&zeros)).unwrap(), (0.0, 0));
        let mixed = IncrementField { increments: vec![1, 0, 1, 1], q: 4 };
        assert_eq!(increment_stats(&[zeros, mixed]).unwrap(), (3.0 / 14.0, 1));
        assert!(increment_stats(&[]).is_err());
    }
}
