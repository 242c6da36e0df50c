//! Dobrushin certificates for the cell-constrained single-site conditionals.
//!
//! Inside a cell the conditional of a spin is proportional to
//! `exp(β Σ_j cos(u − θ_j))`. Changing one neighbor from `a` to `b`
//! multiplies it by `e^g` with `g(u) = β (cos(u − a) − cos(u − b))`, and for
//! any base density the total variation moved by such a tilt is at most
//! `tanh(osc g / 4)`, whatever the other neighbors are. The coefficient is
//! the sup of that bound over `(a, b)`, found by grid search on the circle
//! and inflated by the grid's Lipschitz slack. The oscillation over the cell
//! is evaluated in closed form.

use std::f64::consts::{FRAC_PI_2, TAU};

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

pub const DEFAULT_RESOLUTION: usize = 128;
pub const MIN_RESOLUTION: usize = 8;

/// Oscillation of `amp · sin(u − phase)` over `u ∈ [lo, hi]`.
fn sine_oscillation(amp: f64, phase: f64, lo: f64, hi: f64) -> f64 {
    let f = |u: f64| amp * (u - phase).sin();
    let (mut max, mut min) = (f(lo).max(f(hi)), f(lo).min(f(hi)));
    // critical points phase ± π/2 + 2πk
    for crit in [phase + FRAC_PI_2, phase - FRAC_PI_2] {
        let first = crit + ((lo - crit) / TAU).ceil() * TAU;
        if first <= hi {
            max = max.max(f(first));
            min = min.min(f(first));
        }
    }
    max - min
}

/// Oscillation over the cell `[0, width]` of `β (cos(u − a) − cos(u − b))`.
fn tilt_oscillation(beta: f64, width: f64, a: f64, b: f64) -> f64 {
    let amp = 2.0 * beta * ((b - a) / 2.0).sin().abs();
    sine_oscillation(amp, (a + b) / 2.0, 0.0, width)
}

/// Lipschitz slack added to the grid maximum.
pub fn grid_slack(beta: f64, resolution: usize) -> f64 {
    beta * (TAU / resolution as f64) / 2.0
}

/// Coefficient for a constraint cell of the given width.
pub fn neighbor_coefficient_for_width(beta: f64, width: f64, resolution: usize) -> Result<f64> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::Param(format!("beta must be finite and >= 0, got {beta}")));
    }
    if !(width > 0.0 && width <= TAU / 2.0) {
        return Err(Error::Param(format!("cell width {width} outside (0, π]")));
    }
    if resolution < MIN_RESOLUTION {
        return Err(Error::Param(format!(
            "grid resolution must be >= {MIN_RESOLUTION}, got {resolution}"
        )));
    }
    if beta == 0.0 {
        return Ok(0.0);
    }
    let h = TAU / resolution as f64;
    let osc = (0..resolution)
        .into_par_iter()
        .map(|i| {
            (0..resolution)
                .map(|j| tilt_oscillation(beta, width, i as f64 * h, j as f64 * h))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(((osc / 4.0).tanh() + grid_slack(beta, resolution)).min(1.0))
}

/// Single nearest-neighbor Dobrushin coefficient with `q` equal cells.
pub fn neighbor_coefficient(beta: f64, q: usize, resolution: usize) -> Result<f64> {
    if q < 2 {
        return Err(Error::Param(format!("q must be >= 2, got {q}")));
    }
    neighbor_coefficient_for_width(beta, TAU / q as f64, resolution)
}

/// Coefficient under the τ-refined partition, whose cells have widths
/// `rem` and `w − rem` for `τ = whole · w + rem`.
pub fn refined_neighbor_coefficient(beta: f64, q: usize, tau: f64, resolution: usize) -> Result<f64> {
    if q < 2 {
        return Err(Error::Param(format!("q must be >= 2, got {q}")));
    }
    let w = TAU / q as f64;
    let rem = tau.rem_euclid(w);
    let widest = if rem > 0.0 && rem < w { rem.max(w - rem) } else { w };
    neighbor_coefficient_for_width(beta, widest, resolution)
}

/// Total variation between the conditionals on `[0, width)` of
/// `exp(β cos(u − a) + κ cos(u − μ))` and the same with `a` replaced by
/// `b`; `(κ, μ)` is the field of the remaining neighbors.
pub fn conditional_tv(beta: f64, width: f64, a: f64, b: f64, rest: (f64, f64)) -> f64 {
    let gl = GaussLegendre::new(16);
    let panels = 64;
    let (kappa, mu) = rest;
    let shift = beta + kappa;
    let dens = |u: f64, c: f64| (beta * (u - c).cos() + kappa * (u - mu).cos() - shift).exp();
    let za = gl.integrate_composite(0.0, width, panels, |u| dens(u, a));
    let zb = gl.integrate_composite(0.0, width, panels, |u| dens(u, b));
    0.5 * gl.integrate_composite(0.0, width, panels, |u| (dens(u, a) / za - dens(u, b) / zb).abs())
}

fn inf_as_string<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) if x.is_infinite() => s.serialize_str("inf"),
        Some(x) => s.serialize_f64(*x),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DobrushinReport {
    pub schema: String,
    pub beta: f64,
    pub q: usize,
    pub d: usize,
    pub c_bar: f64,
    pub per_neighbor: f64,
    /// `−ln c̄` per lattice step; infinite when `c̄ = 0`.
    #[serde(serialize_with = "inf_as_string")]
    pub decay_exponent: Option<f64>,
    pub grid_resolution: usize,
    pub slack: f64,
    pub pass: bool,
}

impl DobrushinReport {
    pub fn line(&self) -> String {
        format!(
            "{} dobrushin beta={} q={} d={}: c_bar={:.6e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.beta,
            self.q,
            self.d,
            self.c_bar
        )
    }
}

pub fn certify(beta: f64, q: usize, d: usize, resolution: usize) -> Result<DobrushinReport> {
    if !(1..=3).contains(&d) {
        return Err(Error::Param(format!("dimension must be 1, 2 or 3, got {d}")));
    }
    let per_neighbor = neighbor_coefficient(beta, q, resolution)?;
    let c_bar = 2.0 * d as f64 * per_neighbor;
    let pass = c_bar < 1.0;
    Ok(DobrushinReport {
        schema: "rotorpca.dobrushin.v1".into(),
        beta,
        q,
        d,
        c_bar,
        per_neighbor,
        decay_exponent: pass.then(|| if c_bar == 0.0 { f64::INFINITY } else { -c_bar.ln() }),
        grid_resolution: resolution,
        slack: grid_slack(beta, resolution),
        pass,
    })
}

/// Smallest `q ≤ q_max` whose certificate passes with exponent at least `alpha_target`.
pub fn suggest_q(beta: f64, d: usize, alpha_target: f64, q_max: usize, resolution: usize) -> Result<Option<usize>> {
    if !(alpha_target > 0.0) {
        return Err(Error::Param(format!("alpha_target must be > 0, got {alpha_target}")));
    }
    for q in 2..=q_max {
        let r = certify(beta, q, d, resolution)?;
        if r.decay_exponent.is_some_and(|a| a >= alpha_target) {
            return Ok(Some(q));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn closed_form(beta: f64, q: usize) -> f64 {
        (beta * (PI / q as f64).sin()).tanh()
    }

    #[test]
    fn sine_oscillation_against_dense_grid() {
        for &(phase, lo, hi) in &[(0.3, 0.0, 0.5), (2.0, 0.0, 3.0), (-1.0, 0.0, 0.01), (5.5, 0.0, 1.2)] {
            let n = 200_000;
            let vals: Vec<f64> = (0..=n).map(|k| (lo + (hi - lo) * k as f64 / n as f64 - phase).sin()).collect();
            let osc = vals.iter().cloned().fold(f64::MIN, f64::max) - vals.iter().cloned().fold(f64::MAX, f64::min);
            assert!((sine_oscillation(1.0, phase, lo, hi) - osc).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_coupling_is_exactly_zero() {
        assert_eq!(neighbor_coefficient(0.0, 7, 64).unwrap(), 0.0);
        let r = certify(0.0, 7, 3, 64).unwrap();
        assert_eq!(r.c_bar, 0.0);
        assert_eq!(r.decay_exponent, Some(f64::INFINITY));
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["decay_exponent"], "inf");
    }

    #[test]
    fn brackets_the_closed_form() {
        for &(beta, q) in &[(0.1, 64), (0.5, 3), (2.0, 12), (0.05, 128)] {
            let exact = closed_form(beta, q);
            for res in [64, 128, 256] {
                let c = neighbor_coefficient(beta, q, res).unwrap();
                assert!(c >= exact - 1e-12, "beta={beta} q={q} res={res}");
                assert!(c <= exact + grid_slack(beta, res) + 1e-12);
            }
        }
    }

    #[test]
    fn bound_dominates_actual_total_variation() {
        let q = 6;
        let w = TAU / q as f64;
        for &beta in &[0.3, 1.0, 3.0] {
            let c = neighbor_coefficient(beta, q, 64).unwrap();
            for &(a, b) in &[(0.0, PI), (1.0, 4.0), (w / 2.0, w / 2.0 + PI), (2.0, 2.5)] {
                for &rest in &[(0.0, 0.0), (2.0, 0.3), (10.0, 5.0)] {
                    assert!(conditional_tv(beta, w, a, b, rest) <= c + 1e-12);
                }
            }
        }
    }

    #[test]
    fn reports_match_examples() {
        let r = certify(0.1, 64, 3, DEFAULT_RESOLUTION).unwrap();
        assert!(r.pass && r.per_neighbor < 1.0 / 6.0);
        assert!((r.c_bar - 6.0 * r.per_neighbor).abs() < 1e-15);
        let r = certify(10.0, 4, 3, DEFAULT_RESOLUTION).unwrap();
        assert!(!r.pass && r.decay_exponent.is_none());
        let v = serde_json::to_value(&r).unwrap();
        assert!(v["decay_exponent"].is_null());
    }

    #[test]
    fn suggest_q_examples() {
        assert_eq!(suggest_q(0.0, 3, 1.0, 16, 64).unwrap(), Some(2));
        assert!(suggest_q(0.1, 3, 0.5, 128, 64).unwrap().is_some_and(|q| q <= 128));
        assert_eq!(suggest_q(10.0, 3, 0.5, 8, 64).unwrap(), None);
        assert!(suggest_q(1.0, 3, 0.0, 8, 64).is_err());
    }

    #[test]
    fn refined_cells_never_worse() {
        for &beta in &[0.1, 1.0, 5.0] {
            for &frac in &[0.0, 0.1, 0.5, 0.9] {
                let q = 8;
                let tau = frac * TAU / q as f64;
                let plain = neighbor_coefficient(beta, q, 64).unwrap();
                let refined = refined_neighbor_coefficient(beta, q, tau, 64).unwrap();
                assert!(refined <= plain, "beta={beta} frac={frac}");
            }
        }
    }

    #[test]
    fn bad_resolution_rejected() {
        assert!(neighbor_coefficient(0.1, 8, 4).is_err());
    }
}
