//! Equal-arc coarse-graining of the circle into `q` labelled cells.
//!
//! Cell `k` is the half-open arc `[2πk/q, 2π(k+1)/q)`; labels are 0-based so
//! that increments live in the additive group `Z_q`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rotor_model::canonical_angle;

/// Lower endpoint of cell `k`.
#[inline]
pub fn cell_lo(k: usize, q: usize) -> f64 {
    TAU * k as f64 / q as f64
}

/// Label of the cell containing `angle`. The result is consistent with
/// [`cell_lo`] exactly: `cell_lo(k) <= angle < cell_lo(k + 1)`.
pub fn project(angle: f64, q: usize) -> usize {
    let a = canonical_angle(angle);
    let mut k = ((a * q as f64 / TAU).floor() as usize).min(q - 1);
    if a < cell_lo(k, q) {
        k -= 1;
    } else if k + 1 < q && a >= cell_lo(k + 1, q) {
        k += 1;
    }
    k
}

/// Label and sub-label under the refinement of each cell into
/// `[lo, lo + τ)` (sub-label 0) and `[lo + τ, lo + 2π/q)` (sub-label 1).
pub fn refined_project(angle: f64, q: usize, tau: f64) -> Result<(usize, u8)> {
    let w = TAU / q as f64;
    if !(tau > 0.0 && tau < w) {
        return Err(Error::Param(format!(
            "refinement needs 0 < tau < 2pi/q = {w}, got {tau}"
        )));
    }
    let a = canonical_angle(angle);
    let k = project(a, q);
    let sub = if a - cell_lo(k, q) < tau { 0 } else { 1 };
    Ok((k, sub))
}

/// Circular interval `[lo, hi)`. When `wraps` is set the arc passes through
/// angle 0 and consists of `[lo, 2π) ∪ [0, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub lo: f64,
    pub hi: f64,
    pub wraps: bool,
}

impl Arc {
    /// Arc starting at `lo` (canonicalized) with the given width in `(0, 2π]`.
    pub fn from_start(lo: f64, width: f64) -> Self {
        let lo = canonical_angle(lo);
        let hi = lo + width;
        if hi > TAU {
            Arc {
                lo,
                hi: hi - TAU,
                wraps: true,
            }
        } else {
            Arc {
                lo,
                hi,
                wraps: false,
            }
        }
    }

    pub fn full() -> Self {
        Arc {
            lo: 0.0,
            hi: TAU,
            wraps: false,
        }
    }

    pub fn width(&self) -> f64 {
        if self.wraps {
            self.hi + TAU - self.lo
        } else {
            self.hi - self.lo
        }
    }

    pub fn contains(&self, angle: f64) -> bool {
        let a = canonical_angle(angle);
        if self.wraps {
            a >= self.lo || a < self.hi
        } else {
            a >= self.lo && a < self.hi
        }
    }

    pub fn midpoint(&self) -> f64 {
        canonical_angle(self.lo + 0.5 * self.width())
    }

    /// Position of `angle` measured counter-clockwise from the start of the arc.
    pub fn offset_of(&self, angle: f64) -> f64 {
        canonical_angle(angle - self.lo)
    }

    /// Length of the overlap of two arcs.
    pub fn intersection_length(&self, other: &Arc) -> f64 {
        let (a0, a1) = (self.lo, self.lo + self.width());
        let (b0, b1) = (other.lo, other.lo + other.width());
        [-TAU, 0.0, TAU]
            .iter()
            .map(|s| ((a1).min(b1 + s) - (a0).max(b0 + s)).max(0.0))
            .sum()
    }
}

/// Cell of `label` rotated by `−shift`: `[2πk/q − shift, 2π(k+1)/q − shift)`.
pub fn cell(label: usize, q: usize, shift: f64) -> Arc {
    Arc::from_start(cell_lo(label, q) - shift, TAU / q as f64)
}

/// One label in `{0, …, q−1}` per site.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiscreteConfig {
    pub labels: Vec<usize>,
    pub q: usize,
}

impl DiscreteConfig {
    pub fn new(labels: Vec<usize>, q: usize) -> Result<Self> {
        if q < 2 {
            return Err(Error::Param(format!("q must be >= 2, got {q}")));
        }
        if let Some((i, l)) = labels.iter().enumerate().find(|(_, &l)| l >= q) {
            return Err(Error::Param(format!("label {l} at site {i} not below q = {q}")));
        }
        Ok(DiscreteConfig { labels, q })
    }

    pub fn constant(n: usize, label: usize, q: usize) -> Self {
        DiscreteConfig {
            labels: vec![label % q; n],
            q,
        }
    }

    /// Projection of a continuous configuration.
    pub fn from_angles(angles: &[f64], q: usize) -> Self {
        DiscreteConfig {
            labels: angles.iter().map(|&a| project(a, q)).collect(),
            q,
        }
    }

    /// Sitewise `labels + a mod q`.
    pub fn shifted(&self, a: i64) -> Self {
        let q = self.q as i64;
        DiscreteConfig {
            labels: self
                .labels
                .iter()
                .map(|&l| (l as i64 + a).rem_euclid(q) as usize)
                .collect(),
            q: self.q,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Mixed-radix index with site 0 least significant.
    pub fn index(&self) -> usize {
        self.labels.iter().rev().fold(0, |acc, &l| acc * self.q + l)
    }

    pub fn from_index(mut index: usize, n_sites: usize, q: usize) -> Self {
        let labels = (0..n_sites)
            .map(|_| {
                let l = index % q;
                index /= q;
                l
            })
            .collect();
        DiscreteConfig { labels, q }
    }
}
