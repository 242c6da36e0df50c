//! Periodic hypercubic lattices in one to three dimensions.
//!
//! Sites are indexed row-major with the last axis fastest. Neighbors are
//! stored with multiplicities so that side length 2 (both directions wrap
//! to the same site) and side length 1 (a site is its own neighbor) are
//! represented faithfully.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TorusLattice {
    dims: Vec<usize>,
    strides: Vec<usize>,
    site_count: usize,
    // CSR adjacency: neighbors of site i live in nbr[offsets[i]..offsets[i + 1]].
    offsets: Vec<usize>,
    nbr: Vec<(usize, u32)>,
}

impl TorusLattice {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Lattice("dims must not be empty".into()));
        }
        if dims.len() > 3 {
            return Err(Error::Lattice(format!(
                "dimension {} not supported (max 3)",
                dims.len()
            )));
        }
        if let Some(k) = dims.iter().position(|&l| l == 0) {
            return Err(Error::Lattice(format!("side length along axis {k} is zero")));
        }
        let site_count = dims
            .iter()
            .try_fold(1usize, |acc, &l| acc.checked_mul(l))
            .ok_or_else(|| Error::Lattice("site count overflows".into()))?;

        let mut strides = vec![1; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }

        let mut lat = TorusLattice {
            dims: dims.to_vec(),
            strides,
            site_count,
            offsets: Vec::with_capacity(site_count + 1),
            nbr: Vec::with_capacity(site_count * 2 * dims.len()),
        };

        lat.offsets.push(0);
        for site in 0..site_count {
            let mut list: Vec<(usize, u32)> = Vec::with_capacity(2 * dims.len());
            for axis in 0..dims.len() {
                for step in [1isize, -1] {
                    let j = lat.step(site, axis, step);
                    match list.iter_mut().find(|(s, _)| *s == j) {
                        Some(entry) => entry.1 += 1,
                        None => list.push((j, 1)),
                    }
                }
            }
            lat.nbr.extend(list);
            lat.offsets.push(lat.nbr.len());
        }
        Ok(lat)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dimension(&self) -> usize {
        self.dims.len()
    }

    pub fn site_count(&self) -> usize {
        self.site_count
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        self.dims
            .iter()
            .zip(&self.strides)
            .map(|(&l, &s)| (site / s) % l)
            .collect()
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .zip(&self.dims)
            .zip(&self.strides)
            .map(|((&c, &l), &s)| (c % l) * s)
            .sum()
    }

    /// Site reached from `site` by `step` lattice units along `axis`, with
    /// periodic wraparound.
    pub fn step(&self, site: usize, axis: usize, step: isize) -> usize {
        let l = self.dims[axis] as isize;
        let s = self.strides[axis];
        let c = ((site / s) % self.dims[axis]) as isize;
        let nc = (c + step).rem_euclid(l);
        site - (c as usize) * s + (nc as usize) * s
    }

    /// Distinct nearest neighbors with edge multiplicities.
    pub fn neighbors(&self, site: usize) -> Result<&[(usize, u32)]> {
        if site >= self.site_count {
            return Err(Error::SiteOutOfRange {
                site,
                count: self.site_count,
            });
        }
        Ok(self.neighbors_unchecked(site))
    }

    #[inline]
    pub(crate) fn neighbors_unchecked(&self, site: usize) -> &[(usize, u32)] {
        &self.nbr[self.offsets[site]..self.offsets[site + 1]]
    }

    /// Forward bonds `(i, i + e_k)`, one per site and axis. Summing over this
    /// list visits every unordered nearest-neighbor pair with its
    /// multiplicity.
    pub fn forward_bonds(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.site_count)
            .flat_map(move |i| (0..self.dims.len()).map(move |k| (i, self.step(i, k, 1))))
    }

    /// True when every side length is even, so the torus is bipartite.
    pub fn is_bipartite(&self) -> bool {
        self.dims.iter().all(|l| l % 2 == 0)
    }

    /// Checkerboard color (0 or 1) of a site; only meaningful on bipartite tori.
    pub fn parity(&self, site: usize) -> usize {
        self.coords(site).iter().sum::<usize>() % 2
    }

    /// Sites on the outer shell of the box obtained by cutting the torus open
    /// at coordinate 0 along every axis.
    pub fn is_shell(&self, site: usize) -> bool {
        self.coords(site).contains(&0)
    }
}

pub fn build_torus(dims: &[usize]) -> Result<TorusLattice> {
    TorusLattice::new(dims)
}

pub fn neighbors(lat: &TorusLattice, site: usize) -> Result<Vec<(usize, u32)>> {
    lat.neighbors(site).map(<[_]>::to_vec)
}
