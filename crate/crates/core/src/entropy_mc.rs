//! Plug-in estimates of the per-site relative entropy between two label
//! laws from samples.
//!
//! A window is a run of `window` consecutive site indices taken cyclically,
//! so on a one-dimensional ring it is a block of neighbors. Histograms pool
//! every translate of the window in every sample. Standard errors come from
//! a grouped jackknife over samples.

use crate::discretization::DiscreteConfig;
use crate::error::{Error, Result};
use crate::oracle::STATE_LIMIT;

pub const JACKKNIFE_GROUPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyEstimate {
    /// Relative entropy of the window marginals divided by `window`.
    pub value: f64,
    pub std_error: f64,
    pub window: usize,
    /// Total variation between the raw and smoothed reference histograms;
    /// zero when no smoothing was needed.
    pub smoothing_mass: f64,
}

fn window_code(config: &DiscreteConfig, start: usize, window: usize) -> usize {
    let n = config.len();
    (0..window)
        .rev()
        .fold(0, |acc, k| acc * config.q + config.labels[(start + k) % n])
}

/// Per-sample window histograms.
fn counts(samples: &[DiscreteConfig], window: usize, bins: usize) -> Vec<Vec<u32>> {
    samples
        .iter()
        .map(|s| {
            let mut h = vec![0u32; bins];
            for start in 0..s.len() {
                h[window_code(s, start, window)] += 1;
            }
            h
        })
        .collect()
}

/// Relative entropy per site of two histograms, with add-one-half smoothing
/// of `mu` when `nu` has mass on an empty `mu` bin.
fn plug_in(nu: &[f64], mu: &[f64], window: usize) -> (f64, f64) {
    let tn: f64 = nu.iter().sum();
    let tm: f64 = mu.iter().sum();
    let needs = nu.iter().zip(mu).any(|(a, b)| *a > 0.0 && *b == 0.0);
    let (pad, tm_s) = if needs { (0.5, tm + 0.5 * mu.len() as f64) } else { (0.0, tm) };
    let mut kl = 0.0;
    let mut smoothing = 0.0;
    for (a, b) in nu.iter().zip(mu) {
        let r = (b + pad) / tm_s;
        smoothing += (r - b / tm).abs();
        if *a > 0.0 {
            let p = a / tn;
            kl += p * (p / r).ln();
        }
    }
    (kl / window as f64, 0.5 * smoothing)
}

fn groups(hists: &[Vec<u32>], g: usize, bins: usize) -> Vec<Vec<f64>> {
    let n = hists.len();
    (0..g)
        .map(|k| {
            let mut acc = vec![0.0; bins];
            for h in &hists[k * n / g..(k + 1) * n / g] {
                for (a, &c) in acc.iter_mut().zip(h) {
                    *a += c as f64;
                }
            }
            acc
        })
        .collect()
}

fn sum(vs: &[Vec<f64>], skip: Option<usize>, bins: usize) -> Vec<f64> {
    let mut acc = vec![0.0; bins];
    for (k, v) in vs.iter().enumerate() {
        if Some(k) == skip {
            continue;
        }
        for (a, b) in acc.iter_mut().zip(v) {
            *a += b;
        }
    }
    acc
}

pub fn block_entropy_rate(
    samples_nu: &[DiscreteConfig],
    samples_mu: &[DiscreteConfig],
    window: usize,
) -> Result<EntropyEstimate> {
    let first = samples_nu
        .first()
        .or(samples_mu.first())
        .ok_or(Error::TooFewSamples { need: 2, got: 0 })?;
    let (q, n) = (first.q, first.len());
    if samples_nu.iter().chain(samples_mu).any(|s| s.q != q || s.len() != n) {
        return Err(Error::Param("samples have inconsistent shapes".into()));
    }
    let least = samples_nu.len().min(samples_mu.len());
    if least < 2 {
        return Err(Error::TooFewSamples { need: 2, got: least });
    }
    if window == 0 || window > n {
        return Err(Error::Param(format!("window {window} outside 1..={n}")));
    }
    let states = (q as u128).checked_pow(window as u32).unwrap_or(u128::MAX);
    if states > STATE_LIMIT as u128 {
        return Err(Error::Guard {
            states,
            limit: STATE_LIMIT,
        });
    }
    let bins = states as usize;
    let g = JACKKNIFE_GROUPS.min(least);
    let gn = groups(&counts(samples_nu, window, bins), g, bins);
    let gm = groups(&counts(samples_mu, window, bins), g, bins);

    let (value, smoothing_mass) = plug_in(&sum(&gn, None, bins), &sum(&gm, None, bins), window);
    let reps: Vec<f64> = (0..g)
        .map(|k| plug_in(&sum(&gn, Some(k), bins), &sum(&gm, Some(k), bins), window).0)
        .collect();
    let mean = reps.iter().sum::<f64>() / g as f64;
    let var = reps.iter().map(|r| (r - mean).powi(2)).sum::<f64>() * (g as f64 - 1.0) / g as f64;
    Ok(EntropyEstimate {
        value,
        std_error: var.sqrt(),
        window,
        smoothing_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn configs(n: usize, q: usize, idx: &[usize]) -> Vec<DiscreteConfig> {
        idx.iter().map(|&i| DiscreteConfig::from_index(i, n, q)).collect()
    }

    #[test]
    fn identical_samples_give_exact_zero() {
        let s = configs(4, 3, &(0..81).collect::<Vec<_>>());
        let e = block_entropy_rate(&s, &s, 2).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.std_error, 0.0);
        assert_eq!(e.smoothing_mass, 0.0);
    }

    #[test]
    fn window_codes_wrap() {
        let c = DiscreteConfig::new(vec![1, 2, 0], 3).unwrap();
        assert_eq!(window_code(&c, 0, 2), 1 + 3 * 2);
        assert_eq!(window_code(&c, 2, 2), 3);
    }

    #[test]
    fn point_mass_against_uniform_window_one() {
        // every site label 0 against all labels equally often
        let nu = configs(3, 3, &[0; 10]);
        let mu = configs(3, 3, &(0..27).cycle().take(270).collect::<Vec<_>>());
        let e = block_entropy_rate(&nu, &mu, 1).unwrap();
        assert!((e.value - 3f64.ln()).abs() < 1e-12);
        assert_eq!(e.smoothing_mass, 0.0);
    }

    #[test]
    fn smoothing_is_reported() {
        let nu = configs(2, 2, &[3, 3, 3, 3]);
        let mu = configs(2, 2, &[0, 0, 0, 0]);
        let e = block_entropy_rate(&nu, &mu, 1).unwrap();
        assert!(e.value.is_finite() && e.value > 0.0);
        assert!(e.smoothing_mass > 0.0);
    }

    #[test]
    fn guards() {
        let s = configs(13, 2, &[0, 1, 2]);
        assert!(matches!(block_entropy_rate(&s, &s, 13), Err(Error::Guard { .. })));
        assert!(block_entropy_rate(&s, &s, 0).is_err());
        assert!(block_entropy_rate(&s[..1], &s, 1).is_err());
    }
}
