//! Exact finite-volume engine for tiny periodic systems.
//!
//! Every quantity is a ratio of integrals of `e^{−H}` over products of arcs,
//! evaluated with tensorized Gauss-Legendre rules. With `Λ` the whole torus
//! the one-step kernel is
//!
//! ```text
//! M_τ(σ′, η′) = ∫ e^{−H} 1{σ ∈ σ′} 1{σ + τ ∈ η′} dσ  /  ∫ e^{−H} 1{σ ∈ σ′} dσ
//! ```
//!
//! Inside one cell, `σ_i + τ` lands in at most two cells, split at a single
//! breakpoint, so every numerator is an integral over a product of sub-arcs.
//! Denominators use their own (unsplit) rule, so row sums measure the
//! quadrature error instead of being 1 by construction.

mod entropy;
mod suite;

pub use entropy::{entropy_loss_identity, relative_entropy, stationarity_check};
pub use suite::{check_identities, identity_suite, support_violations, test_measures, CheckResult, SuiteReport};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::{cell_lo, DiscreteConfig};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::rotor_model::ModelParams;
use crate::srp::RotationSplit;

/// Largest number of configurations handled by dense enumeration.
pub const STATE_LIMIT: usize = 4096;
pub const DEFAULT_QUAD_ORDER: usize = 32;
pub const MIN_QUAD_ORDER: usize = 8;

/// Dense transition matrix over all `q^n` configurations, rows indexed by
/// the present configuration and columns by the next, both in mixed-radix
/// order with site 0 least significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelMatrix {
    pub q: usize,
    #[serde(rename = "sites")]
    pub n_sites: usize,
    pub entries: Vec<f64>,
}

impl KernelMatrix {
    pub fn zeros(q: usize, n_sites: usize) -> Self {
        let d = q.pow(n_sites as u32);
        KernelMatrix {
            q,
            n_sites,
            entries: vec![0.0; d * d],
        }
    }

    pub fn dim(&self) -> usize {
        self.q.pow(self.n_sites as u32)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.dim() + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        let d = self.dim();
        self.entries[row * d + col] = v;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let d = self.dim();
        &self.entries[row * d..(row + 1) * d]
    }

    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.dim())
            .map(|r| (self.row(r).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Matrix product: first `self`, then `other`.
    pub fn then(&self, other: &KernelMatrix) -> KernelMatrix {
        let d = self.dim();
        let mut out = KernelMatrix::zeros(self.q, self.n_sites);
        for r in 0..d {
            for m in 0..d {
                let a = self.get(r, m);
                if a == 0.0 {
                    continue;
                }
                for c in 0..d {
                    out.entries[r * d + c] += a * other.get(m, c);
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &KernelMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `max |M(σ′+a, η′+a) − M(σ′, η′)|` over all entries and shifts `a`.
    pub fn covariance_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for a in 1..self.q as i64 {
            let shift: Vec<usize> = (0..d)
                .map(|i| DiscreteConfig::from_index(i, self.n_sites, self.q).shifted(a).index())
                .collect();
            for r in 0..d {
                for c in 0..d {
                    worst = worst.max((self.get(shift[r], shift[c]) - self.get(r, c)).abs());
                }
            }
        }
        worst
    }

    /// Row-vector product `ν M`.
    pub fn push_forward(&self, nu: &DiscreteDistribution) -> DiscreteDistribution {
        let d = self.dim();
        let mut out = vec![0.0; d];
        for (r, &w) in nu.weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (c, o) in out.iter_mut().enumerate() {
                *o += w * self.get(r, c);
            }
        }
        DiscreteDistribution {
            q: self.q,
            n_sites: self.n_sites,
            weights: out,
        }
    }
}

/// Probability vector over the `q^n` configurations of a tiny volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    pub q: usize,
    #[serde(rename = "sites")]
    pub n_sites: usize,
    #[serde(rename = "entries")]
    pub weights: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(q: usize, n_sites: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != q.pow(n_sites as u32) {
            return Err(Error::Param(format!(
                "{} weights for {} configurations",
                weights.len(),
                q.pow(n_sites as u32)
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Param("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::Param(format!("weights sum to {total}, not 1")));
        }
        Ok(DiscreteDistribution { q, n_sites, weights })
    }

    pub fn from_unnormalized(q: usize, n_sites: usize, mut weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Param("weights have no mass".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Self::new(q, n_sites, weights)
    }

    pub fn uniform(q: usize, n_sites: usize) -> Self {
        let d = q.pow(n_sites as u32);
        DiscreteDistribution {
            q,
            n_sites,
            weights: vec![1.0 / d as f64; d],
        }
    }

    pub fn point_mass(q: usize, n_sites: usize, index: usize) -> Self {
        let mut weights = vec![0.0; q.pow(n_sites as u32)];
        weights[index] = 1.0;
        DiscreteDistribution { q, n_sites, weights }
    }

    pub fn total_variation(&self, other: &DiscreteDistribution) -> f64 {
        0.5 * self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    /// Marginal law of the label at one site.
    pub fn site_marginal(&self, site: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.q];
        for (i, &w) in self.weights.iter().enumerate() {
            out[(i / self.q.pow(site as u32)) % self.q] += w;
        }
        out
    }
}

pub(crate) fn check_guard(params: &ModelParams) -> Result<usize> {
    let n = params.lattice.site_count() as u32;
    let states = (params.q as u128).checked_pow(n).unwrap_or(u128::MAX);
    if states > STATE_LIMIT as u128 {
        return Err(Error::Guard {
            states,
            limit: STATE_LIMIT,
        });
    }
    Ok(states as usize)
}

fn check_quad_order(quad_order: usize) -> Result<()> {
    if quad_order < MIN_QUAD_ORDER {
        return Err(Error::Param(format!(
            "quad_order must be >= {MIN_QUAD_ORDER}, got {quad_order}"
        )));
    }
    Ok(())
}

type Nodes = Vec<(f64, f64)>;

/// Tensor-grid integral of `e^{−H + H_min}` over products of per-site node sets.
struct BoxIntegrator {
    beta: f64,
    n: usize,
    // (i, j, multiplicity) with i < j; self-loops are constant and dropped
    bonds: Vec<(usize, usize, f64)>,
    // bonds whose later endpoint is the given site
    closing: Vec<Vec<usize>>,
}

impl BoxIntegrator {
    fn new(params: &ModelParams) -> Self {
        let n = params.lattice.site_count();
        let mut bonds: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j) in params.lattice.forward_bonds() {
            if i == j {
                continue;
            }
            let (a, b) = (i.min(j), i.max(j));
            match bonds.iter_mut().find(|(x, y, _)| *x == a && *y == b) {
                Some(e) => e.2 += 1.0,
                None => bonds.push((a, b, 1.0)),
            }
        }
        let mut closing = vec![Vec::new(); n];
        for (k, &(_, b, _)) in bonds.iter().enumerate() {
            closing[b].push(k);
        }
        BoxIntegrator {
            beta: params.beta,
            n,
            bonds,
            closing,
        }
    }

    fn integrate(&self, nodes: &[Nodes]) -> f64 {
        let tables: Vec<Vec<f64>> = self
            .bonds
            .iter()
            .map(|&(i, j, m)| {
                let mut t = Vec::with_capacity(nodes[i].len() * nodes[j].len());
                for &(a, _) in &nodes[i] {
                    for &(b, _) in &nodes[j] {
                        t.push((self.beta * m * ((a - b).cos() - 1.0)).exp());
                    }
                }
                t
            })
            .collect();
        let mut idx = vec![0usize; self.n];
        self.nested(0, nodes, &tables, &mut idx)
    }

    fn nested(&self, depth: usize, nodes: &[Nodes], tables: &[Vec<f64>], idx: &mut [usize]) -> f64 {
        if depth == self.n {
            return 1.0;
        }
        let mut sum = 0.0;
        for (x, &(_, w)) in nodes[depth].iter().enumerate() {
            idx[depth] = x;
            let mut f = w;
            for &b in &self.closing[depth] {
                let (i, j, _) = self.bonds[b];
                f *= tables[b][idx[i] * nodes[j].len() + idx[j]];
            }
            if f != 0.0 {
                sum += f * self.nested(depth + 1, nodes, tables, idx);
            }
        }
        sum
    }
}

fn log_scale_estimate(params: &ModelParams) -> f64 {
    // e^{-H} is evaluated relative to its maximum e^{β · #bonds}
    -2.0 * params.beta * params.lattice.forward_bonds().count() as f64
}

fn full_cell_nodes(gl: &GaussLegendre, labels: &[usize], q: usize) -> Vec<Nodes> {
    let w = std::f64::consts::TAU / q as f64;
    labels
        .iter()
        .map(|&k| {
            let lo = cell_lo(k, q);
            gl.on_interval(lo, lo + w)
        })
        .collect()
}

fn normalizer(integ: &BoxIntegrator, params: &ModelParams, nodes: &[Nodes], row: usize) -> Result<f64> {
    let z = integ.integrate(nodes);
    if !(z > f64::MIN_POSITIVE) {
        return Err(Error::Underflow {
            row,
            log_estimate: log_scale_estimate(params),
        });
    }
    Ok(z)
}

fn kernel_row(
    params: &ModelParams,
    integ: &BoxIntegrator,
    gl: &GaussLegendre,
    split: &RotationSplit,
    row: usize,
) -> Result<Vec<f64>> {
    let q = params.q;
    let n = params.lattice.site_count();
    let dim = q.pow(n as u32);
    let sigma = DiscreteConfig::from_index(row, n, q);
    let den = normalizer(integ, params, &full_cell_nodes(gl, &sigma.labels, q), row)?;

    let mut out = vec![0.0; dim];
    if split.rem == 0.0 {
        // the rotation maps cells onto cells
        let col = sigma.shifted(split.whole).index();
        let num = integ.integrate(&full_cell_nodes(gl, &sigma.labels, q));
        out[col] = num / den;
        return Ok(out);
    }

    let w = split.width;
    let b = split.breakpoint();
    let halves: Vec<[Nodes; 2]> = sigma
        .labels
        .iter()
        .map(|&k| {
            let lo = cell_lo(k, q);
            [gl.on_interval(lo, lo + b), gl.on_interval(lo + b, lo + w)]
        })
        .collect();

    for pattern in 0..(1usize << n) {
        let nodes: Vec<Nodes> = (0..n).map(|i| halves[i][(pattern >> i) & 1].clone()).collect();
        let num = integ.integrate(&nodes);
        let eta = DiscreteConfig {
            labels: (0..n)
                .map(|i| {
                    let inc = split.whole + ((pattern >> i) & 1) as i64;
                    (sigma.labels[i] as i64 + inc).rem_euclid(q as i64) as usize
                })
                .collect(),
            q,
        };
        out[eta.index()] += num / den;
    }
    Ok(out)
}

/// Exact one-step kernel `M_τ` of the whole periodic volume.
pub fn exact_kernel(params: &ModelParams, quad_order: usize) -> Result<KernelMatrix> {
    let dim = check_guard(params)?;
    check_quad_order(quad_order)?;
    let integ = BoxIntegrator::new(params);
    let gl = GaussLegendre::new(quad_order);
    let split = RotationSplit::new(params.tau, params.cell_width());
    let rows = (0..dim)
        .into_par_iter()
        .map(|r| kernel_row(params, &integ, &gl, &split, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(KernelMatrix {
        q: params.q,
        n_sites: params.lattice.site_count(),
        entries: rows.into_iter().flatten().collect(),
    })
}

/// Law of the coarse-grained configuration under the finite-volume Gibbs measure.
pub fn exact_gibbs_marginal(params: &ModelParams, quad_order: usize) -> Result<DiscreteDistribution> {
    let dim = check_guard(params)?;
    check_quad_order(quad_order)?;
    let integ = BoxIntegrator::new(params);
    let gl = GaussLegendre::new(quad_order);
    let n = params.lattice.site_count();
    let weights = (0..dim)
        .into_par_iter()
        .map(|r| {
            let labels = DiscreteConfig::from_index(r, n, params.q).labels;
            normalizer(&integ, params, &full_cell_nodes(&gl, &labels, params.q), r)
        })
        .collect::<Result<Vec<f64>>>()?;
    DiscreteDistribution::from_unnormalized(params.q, n, weights)
}

/// Single-site conditional law of the label at `site` given the labels of
/// all other sites (the entry of `boundary` at `site` is ignored).
pub fn exact_discrete_specification(
    params: &ModelParams,
    site: usize,
    boundary: &DiscreteConfig,
    quad_order: usize,
) -> Result<Vec<f64>> {
    check_guard(params)?;
    check_quad_order(quad_order)?;
    let n = params.lattice.site_count();
    if site >= n {
        return Err(Error::SiteOutOfRange { site, count: n });
    }
    if boundary.len() != n || boundary.q != params.q {
        return Err(Error::Param("boundary does not match the model".into()));
    }
    let integ = BoxIntegrator::new(params);
    let gl = GaussLegendre::new(quad_order);
    let mut labels = boundary.labels.clone();
    let raw = (0..params.q)
        .map(|k| {
            labels[site] = k;
            normalizer(&integ, params, &full_cell_nodes(&gl, &labels, params.q), k)
        })
        .collect::<Result<Vec<f64>>>()?;
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|x| x / total).collect())
}

/// Probability that the spin at `site` lies in each of `bins` equal
/// sub-arcs of its cell, under the measure constrained to `constraint`.
pub fn exact_constrained_site_density(
    params: &ModelParams,
    constraint: &DiscreteConfig,
    site: usize,
    bins: usize,
    quad_order: usize,
) -> Result<Vec<f64>> {
    check_quad_order(quad_order)?;
    let n = params.lattice.site_count();
    if site >= n {
        return Err(Error::SiteOutOfRange { site, count: n });
    }
    if bins == 0 || constraint.len() != n || constraint.q != params.q {
        return Err(Error::Param("bad constraint or bin count".into()));
    }
    if n > 6 {
        return Err(Error::Guard {
            states: quad_order.pow(n as u32) as u128,
            limit: STATE_LIMIT,
        });
    }
    let integ = BoxIntegrator::new(params);
    let gl = GaussLegendre::new(quad_order);
    let q = params.q;
    let h = params.cell_width() / bins as f64;
    let lo = cell_lo(constraint.labels[site], q);
    let mut nodes = full_cell_nodes(&gl, &constraint.labels, q);
    let raw: Vec<f64> = (0..bins)
        .map(|b| {
            nodes[site] = gl.on_interval(lo + b as f64 * h, lo + (b + 1) as f64 * h);
            integ.integrate(&nodes)
        })
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|x| x / total).collect())
}

/// Time reversal of `M` with respect to `mu`:
/// `M̂(η′, σ′) = mu(σ′) M(σ′, η′) / (mu M)(η′)`.
pub fn backwards_kernel(m: &KernelMatrix, mu: &DiscreteDistribution) -> Result<KernelMatrix> {
    let rows = backwards_rows(m, mu);
    let mut out = KernelMatrix::zeros(m.q, m.n_sites);
    for (eta, row) in rows.into_iter().enumerate() {
        let row = row.ok_or(Error::ZeroReach(eta))?;
        for (sigma, v) in row.into_iter().enumerate() {
            out.set(eta, sigma, v);
        }
    }
    Ok(out)
}

/// Rows of the backwards kernel; `None` where `(mu M)(η′) = 0`.
pub(crate) fn backwards_rows(m: &KernelMatrix, mu: &DiscreteDistribution) -> Vec<Option<Vec<f64>>> {
    let reach = m.push_forward(mu);
    let d = m.dim();
    (0..d)
        .map(|eta| {
            let r = reach.weights[eta];
            if !(r > 0.0) {
                return None;
            }
            Some((0..d).map(|s| mu.weights[s] * m.get(s, eta) / r).collect())
        })
        .collect()
}
