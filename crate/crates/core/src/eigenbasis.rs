//! Dirichlet eigenpairs of `-Δ` on the square `Ω = (0, π)²`.
//!
//! Every eigenfunction is a product of sines,
//! `w(x, y) = (2/π) sin(p x) sin(q y)` with `λ = p² + q²`, so the basis is
//! closed-form and exactly orthonormal. Modes are ordered by eigenvalue with
//! ties broken lexicographically on `(p, q)`.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_2_PI, PI};

/// L² normalisation of a sine-product eigenfunction on `(0, π)²`.
pub const MODE_NORM: f64 = FRAC_2_PI;

/// Spatial dimension of the domain.
pub const DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EigenMode {
    /// 1-based position in the ordered basis.
    pub index: usize,
    pub p: u32,
    pub q: u32,
}

impl EigenMode {
    /// `p² + q²` as an integer; exact for every representable mode.
    pub fn eigenvalue_int(&self) -> u64 {
        let (p, q) = (self.p as u64, self.q as u64);
        p * p + q * q
    }

    pub fn eigenvalue(&self) -> f64 {
        self.eigenvalue_int() as f64
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        MODE_NORM * (self.p as f64 * x).sin() * (self.q as f64 * y).sin()
    }

    /// `(∂ₓw, ∂ᵧw)`.
    pub fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        let (p, q) = (self.p as f64, self.q as f64);
        let (sx, cx) = ((p * x).sin(), (p * x).cos());
        let (sy, cy) = ((q * y).sin(), (q * y).cos());
        [MODE_NORM * p * cx * sy, MODE_NORM * q * sx * cy]
    }

    /// `-Δw` from the second derivatives of the sine factors.
    pub fn neg_laplacian(&self, x: f64, y: f64) -> f64 {
        let (p, q) = (self.p as f64, self.q as f64);
        let sx = (p * x).sin();
        let sy = (q * y).sin();
        let wxx = -p * p * MODE_NORM * sx * sy;
        let wyy = -q * q * MODE_NORM * sx * sy;
        -(wxx + wyy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    modes: Vec<EigenMode>,
    lookup: BTreeMap<(u32, u32), usize>,
}

impl EigenBasis {
    /// The first `size` modes in canonical order.
    pub fn new(size: usize) -> Self {
        assert!(size >= 1, "basis must contain at least one mode");
        // Lattice points with p² + q² ≤ L number about πL/4; grow L until
        // the disc holds enough, then every mode below the cut is present.
        let mut limit = (4 * size as u64 / 3).max(2) + 2;
        let mut pairs = loop {
            let pairs = lattice_pairs(limit);
            if pairs.len() >= size {
                break pairs;
            }
            limit *= 2;
        };
        pairs.sort_by_key(|&(p, q)| (p * p + q * q, p, q));
        pairs.truncate(size);
        let modes: Vec<EigenMode> = pairs
            .into_iter()
            .enumerate()
            .map(|(i, (p, q))| EigenMode {
                index: i + 1,
                p: p as u32,
                q: q as u32,
            })
            .collect();
        let lookup = modes.iter().map(|m| ((m.p, m.q), m.index - 1)).collect();
        Self { modes, lookup }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[EigenMode] {
        &self.modes
    }

    /// Mode at 0-based position `i`.
    pub fn mode(&self, i: usize) -> EigenMode {
        self.modes[i]
    }

    pub fn eigenvalue(&self, i: usize) -> f64 {
        self.modes[i].eigenvalue()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.modes.iter().map(EigenMode::eigenvalue).collect()
    }

    /// 0-based position of the mode `(p, q)`, if it is in the basis.
    pub fn position(&self, p: u32, q: u32) -> Option<usize> {
        self.lookup.get(&(p, q)).copied()
    }

    /// Largest 1D sine frequency in either direction over the first `count` modes.
    pub fn max_frequency_of(&self, count: usize) -> usize {
        self.modes[..count.min(self.len())]
            .iter()
            .map(|m| m.p.max(m.q) as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn max_frequency(&self) -> usize {
        self.max_frequency_of(self.len())
    }

    /// `min_j λ_j / j^{2/d}`, the measured constant in the Weyl lower bound.
    pub fn weyl_constant(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| m.eigenvalue() / (m.index as f64).powf(2.0 / DIM as f64))
            .fold(f64::INFINITY, f64::min)
    }
}

fn lattice_pairs(limit: u64) -> Vec<(u64, u64)> {
    let mut pairs = Vec::new();
    let mut p = 1u64;
    while p * p < limit {
        let mut q = 1u64;
        while p * p + q * q <= limit {
            pairs.push((p, q));
            q += 1;
        }
        p += 1;
    }
    pairs
}

/// Distance from `(x, y)` to the boundary of the square.
pub fn boundary_distance(x: f64, y: f64) -> f64 {
    x.min(PI - x).min(y).min(PI - y)
}

pub fn is_interior(x: f64, y: f64) -> bool {
    boundary_distance(x, y) > 0.0
}
