//! Coefficient-space calculus on the Dirichlet eigenbasis.
//!
//! A [`SpectralField`] holds the coefficients `f_j = ∫_Ω f w_j dx` of a
//! function against the first `len` modes of an [`EigenBasis`]. Fractional
//! powers `Λ^s = (-Δ)^{s/2}` act diagonally by `λ_j^{s/2}`; because `λ₁ = 2 > 0`
//! negative powers are well defined and give `Λ⁻¹` and the stream function.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::eigenbasis::{EigenBasis, EigenMode, MODE_NORM};
use crate::error::{Error, Result, Warning};
use crate::grid::{GridField, QuadGrid, Trig, TrigTable};

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    basis: Arc<EigenBasis>,
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn new(basis: Arc<EigenBasis>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() > basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                got: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("spectral coefficients must be finite"));
        }
        Ok(Self { basis, coeffs })
    }

    pub fn zeros(basis: Arc<EigenBasis>, len: usize) -> Self {
        assert!(len <= basis.len());
        Self {
            basis,
            coeffs: alloc::vec![0.0; len],
        }
    }

    /// Unit coefficient on the mode at 0-based position `pos`, length `len`.
    pub fn unit(basis: Arc<EigenBasis>, len: usize, pos: usize) -> Self {
        let mut f = Self::zeros(basis, len);
        f.coeffs[pos] = 1.0;
        f
    }

    /// Unit field on the mode `(p, q)`, sized to the whole basis.
    pub fn mode(basis: Arc<EigenBasis>, p: u32, q: u32) -> Option<Self> {
        let pos = basis.position(p, q)?;
        let len = basis.len();
        Some(Self::unit(basis, len, pos))
    }

    pub fn basis(&self) -> &Arc<EigenBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn modes(&self) -> &[EigenMode] {
        &self.basis.modes()[..self.coeffs.len()]
    }

    fn with_coeffs(&self, coeffs: Vec<f64>) -> Self {
        Self {
            basis: self.basis.clone(),
            coeffs,
        }
    }

    fn diagonal<F: Fn(f64) -> f64>(&self, multiplier: F) -> Self {
        let coeffs = self
            .modes()
            .iter()
            .zip(&self.coeffs)
            .map(|(m, &c)| multiplier(m.eigenvalue()) * c)
            .collect();
        self.with_coeffs(coeffs)
    }

    /// `Λ^s f`, multiplying coefficient `j` by `λ_j^{s/2}`; meaningful for `s ∈ [-2, 2]`.
    pub fn frac_apply(&self, s: f64) -> Self {
        debug_assert!((-2.0..=2.0).contains(&s));
        self.diagonal(|lambda| lambda.powf(0.5 * s))
    }

    /// `‖f‖_{s,D} = (Σ λ_j^s f_j²)^{1/2}`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.modes()
            .iter()
            .zip(&self.coeffs)
            .map(|(m, &c)| m.eigenvalue().powf(s) * c * c)
            .sum::<f64>()
            .sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// L² pairing; coefficients past the shorter field are zero.
    pub fn dot(&self, other: &Self) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    /// `P_m f`, the first `m` coefficients.
    pub fn project(&self, m: usize) -> Self {
        assert!(m <= self.len(), "projection rank exceeds field length");
        self.with_coeffs(self.coeffs[..m].to_vec())
    }

    /// Zero-extends to `len` coefficients.
    pub fn padded(&self, len: usize) -> Self {
        assert!(len >= self.len() && len <= self.basis.len());
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(len, 0.0);
        self.with_coeffs(coeffs)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        self.with_coeffs(self.coeffs.iter().map(|c| alpha * c).collect())
    }

    /// `self - other` in the longer of the two coefficient spaces.
    pub fn difference(&self, other: &Self) -> Self {
        let len = self.len().max(other.len());
        let coeffs = (0..len)
            .map(|j| {
                self.coeffs.get(j).copied().unwrap_or(0.0) - other.coeffs.get(j).copied().unwrap_or(0.0)
            })
            .collect();
        self.with_coeffs(coeffs)
    }

    pub fn value_at(&self, x: f64, y: f64) -> f64 {
        self.modes()
            .iter()
            .zip(&self.coeffs)
            .map(|(m, &c)| c * m.value(x, y))
            .sum()
    }

    pub fn gradient_at(&self, x: f64, y: f64) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (m, &c) in self.modes().iter().zip(&self.coeffs) {
            let gm = m.gradient(x, y);
            g[0] += c * gm[0];
            g[1] += c * gm[1];
        }
        g
    }

    /// `u = ∇^⊥Λ⁻¹θ = (-∂ᵧψ, ∂ₓψ)` at a single point.
    pub fn velocity_at(&self, x: f64, y: f64) -> [f64; 2] {
        let g = self.frac_apply(-1.0).gradient_at(x, y);
        [-g[1], g[0]]
    }

    pub fn synthesize(&self, xs: &[f64], ys: &[f64]) -> GridField {
        synthesize_separable(self.modes(), &self.coeffs, xs, ys, Trig::Sin, Trig::Sin, |_| 1.0)
    }

    pub fn synthesize_on(&self, grid: &QuadGrid) -> GridField {
        self.synthesize(grid.xs(), grid.ys())
    }

    /// `(∂ₓf, ∂ᵧf)` sampled on the tensor grid.
    pub fn gradient_on(&self, xs: &[f64], ys: &[f64]) -> [GridField; 2] {
        let modes = self.modes();
        [
            synthesize_separable(modes, &self.coeffs, xs, ys, Trig::Cos, Trig::Sin, |m| m.p as f64),
            synthesize_separable(modes, &self.coeffs, xs, ys, Trig::Sin, Trig::Cos, |m| m.q as f64),
        ]
    }

    /// `∇^⊥f = (-∂ᵧf, ∂ₓf)` sampled on the tensor grid.
    pub fn perp_gradient_on(&self, xs: &[f64], ys: &[f64]) -> [GridField; 2] {
        let [fx, fy] = self.gradient_on(xs, ys);
        [fy.map(|v| -v), fx]
    }

    /// Velocity `R_D^⊥θ` sampled on the tensor grid; never truncated.
    pub fn velocity_on(&self, xs: &[f64], ys: &[f64]) -> VelocityField {
        let psi = self.frac_apply(-1.0);
        let [ux, uy] = psi.perp_gradient_on(xs, ys);
        VelocityField { ux, uy }
    }

    fn mixed_derivative_on(&self, xs: &[f64], ys: &[f64]) -> GridField {
        synthesize_separable(self.modes(), &self.coeffs, xs, ys, Trig::Cos, Trig::Cos, |m| {
            m.p as f64 * m.q as f64
        })
    }
}

/// `Σ_j c_j·factor(mode_j)·(2/π)·X_{p_j}(x)·Y_{q_j}(y)`, grouped by `p` so the
/// cost is `O(M n + P n²)`.
pub(crate) fn synthesize_separable<F: Fn(&EigenMode) -> f64>(
    modes: &[EigenMode],
    coeffs: &[f64],
    xs: &[f64],
    ys: &[f64],
    kind_x: Trig,
    kind_y: Trig,
    factor: F,
) -> GridField {
    let (nx, ny) = (xs.len(), ys.len());
    let pmax = modes.iter().map(|m| m.p as usize).max().unwrap_or(0);
    let qmax = modes.iter().map(|m| m.q as usize).max().unwrap_or(0);
    let tx = TrigTable::new(xs, pmax);
    let ty = TrigTable::new(ys, qmax);
    let mut by_p = alloc::vec![alloc::vec![0.0; ny]; pmax + 1];
    let mut used = alloc::vec![false; pmax + 1];
    for (m, &c) in modes.iter().zip(coeffs) {
        if c == 0.0 {
            continue;
        }
        let scale = MODE_NORM * c * factor(m);
        let row = ty.row(m.q as usize, kind_y);
        let acc = &mut by_p[m.p as usize];
        for (a, &yv) in acc.iter_mut().zip(row) {
            *a += scale * yv;
        }
        used[m.p as usize] = true;
    }
    let mut values = alloc::vec![0.0; nx * ny];
    for p in 0..=pmax {
        if !used[p] {
            continue;
        }
        let xrow = tx.row(p, kind_x);
        let g = &by_p[p];
        for (a, &xv) in xrow.iter().enumerate() {
            let out = &mut values[a * ny..(a + 1) * ny];
            for (o, &gv) in out.iter_mut().zip(g) {
                *o += xv * gv;
            }
        }
    }
    GridField::new(xs.to_vec(), ys.to_vec(), values)
}

/// Result of projecting grid samples onto the eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub field: SpectralField,
    pub warnings: Vec<Warning>,
}

/// `f_j = ∫_Ω f w_j dx` by tensor quadrature, for the first `count` modes.
///
/// Exact for band-limited `f` when the grid integrates products of two modes;
/// otherwise a [`Warning::BandwidthExceeded`] is attached.
pub fn analyze(grid: &QuadGrid, samples: &GridField, basis: Arc<EigenBasis>, count: usize) -> Analysis {
    assert!(count <= basis.len());
    let (nx, n) = (grid.xs().len(), grid.ys().len());
    assert_eq!(samples.xs().len(), nx);
    assert_eq!(samples.ys().len(), n);
    let modes = &basis.modes()[..count];
    let pmax = modes.iter().map(|m| m.p as usize).max().unwrap_or(0);
    let qmax = modes.iter().map(|m| m.q as usize).max().unwrap_or(0);
    let (wx, w) = (grid.x_rule().weights(), grid.y_rule().weights());
    let tx = TrigTable::new(grid.xs(), pmax);
    let ty = TrigTable::new(grid.ys(), qmax);
    let f = samples.values();

    // partial[p][b] = Σ_a w_a sin(p x_a) f(x_a, y_b)
    let mut partial = alloc::vec![alloc::vec![0.0; n]; pmax + 1];
    let mut needed = alloc::vec![false; pmax + 1];
    for m in modes {
        needed[m.p as usize] = true;
    }
    for p in 1..=pmax {
        if !needed[p] {
            continue;
        }
        let sx = tx.sin(p);
        let row = &mut partial[p];
        for a in 0..nx {
            let wa = wx[a] * sx[a];
            let fa = &f[a * n..(a + 1) * n];
            for (r, &v) in row.iter_mut().zip(fa) {
                *r += wa * v;
            }
        }
    }
    let coeffs = modes
        .iter()
        .map(|m| {
            let sy = ty.sin(m.q as usize);
            let row = &partial[m.p as usize];
            MODE_NORM * (0..n).map(|b| w[b] * sy[b] * row[b]).sum::<f64>()
        })
        .collect();

    let mut warnings = Vec::new();
    let required = 2 * basis.max_frequency_of(count);
    if grid.exact_bandwidth() < required {
        warnings.push(Warning::BandwidthExceeded {
            required,
            exact: grid.exact_bandwidth(),
        });
    }
    Analysis {
        field: SpectralField { basis, coeffs },
        warnings,
    }
}

/// Samples `f` on the grid and analyzes it.
pub fn analyze_fn<F: FnMut(f64, f64) -> f64>(
    grid: &QuadGrid,
    basis: Arc<EigenBasis>,
    count: usize,
    f: F,
) -> Analysis {
    analyze(grid, &grid.sample(f), basis, count)
}

/// Divergence-free velocity sampled on a tensor grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub ux: GridField,
    pub uy: GridField,
}

impl VelocityField {
    /// Largest pointwise speed on the sample grid.
    pub fn max_speed(&self) -> f64 {
        self.ux
            .values()
            .iter()
            .zip(self.uy.values())
            .fold(0.0, |m, (a, b)| m.max((a * a + b * b).sqrt()))
    }
}

/// Coefficients of `∇·R_D^⊥θ`: the divergence is rebuilt from the mixed
/// second derivatives of the stream function and analyzed on `grid`.
pub fn velocity_divergence(theta: &SpectralField, grid: &QuadGrid) -> SpectralField {
    let psi = theta.frac_apply(-1.0);
    // ∂ₓuₓ = -∂ₓ∂ᵧψ, ∂ᵧuᵧ = ∂ᵧ∂ₓψ
    let dx_ux = psi.mixed_derivative_on(grid.xs(), grid.ys()).map(|v| -v);
    let dy_uy = psi.mixed_derivative_on(grid.xs(), grid.ys());
    let div = dx_ux.zip_with(&dy_uy, |a, b| a + b);
    analyze(grid, &div, theta.basis().clone(), theta.len()).field
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::PI;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn basis(n: usize) -> Arc<EigenBasis> {
        Arc::new(EigenBasis::new(n))
    }

    fn random_field(b: &Arc<EigenBasis>, len: usize, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        SpectralField::new(b.clone(), coeffs).unwrap()
    }

    #[test]
    fn frac_on_single_modes() {
        let b = basis(20);
        for j in 0..20 {
            let e = SpectralField::unit(b.clone(), 20, j);
            let got = e.frac_apply(2.0);
            assert_eq!(got.coeffs()[j], b.eigenvalue(j));
        }
        let e11 = SpectralField::mode(b.clone(), 1, 1).unwrap();
        assert_abs_diff_eq!(e11.frac_apply(-2.0).coeffs()[0], 0.5, epsilon = 1e-16);
    }

    #[test]
    fn sobolev_norm_examples() {
        let b = basis(10);
        let e11 = SpectralField::mode(b.clone(), 1, 1).unwrap();
        assert_abs_diff_eq!(e11.sobolev_norm(1.0), 2f64.sqrt(), epsilon = 1e-15);
        let f = SpectralField::new(b.clone(), alloc::vec![1.0, 1.0]).unwrap();
        let want = (2f64.sqrt() + 5f64.sqrt()).sqrt();
        assert_abs_diff_eq!(f.sobolev_norm(0.5), want, epsilon = 1e-15);
        let r = random_field(&b, 10, 3);
        let parseval: f64 = r.coeffs().iter().map(|c| c * c).sum();
        assert!((r.sobolev_norm(0.0).powi(2) - parseval).abs() < 1e-14 * parseval);
    }

    #[test]
    fn rejects_non_finite_and_oversized() {
        let b = basis(3);
        assert!(SpectralField::new(b.clone(), alloc::vec![f64::NAN]).is_err());
        assert!(SpectralField::new(b, alloc::vec![0.0; 4]).is_err());
    }

    #[test]
    fn projection_identity_and_self_adjoint() {
        let b = basis(30);
        let f = random_field(&b, 30, 1);
        let g = random_field(&b, 30, 2);
        assert_eq!(f.project(30), f);
        for m in [1, 7, 19, 30] {
            let lhs = f.project(m).dot(&g);
            let rhs = f.dot(&g.project(m));
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-15);
            assert_eq!(f.project(m).project(m), f.project(m));
        }
    }

    #[test]
    fn velocity_examples() {
        let b = basis(10);
        let e11 = SpectralField::mode(b.clone(), 1, 1).unwrap();
        let u = e11.velocity_at(PI / 2.0, PI / 2.0);
        assert_abs_diff_eq!(u[0], 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!(u[1], 0.0, epsilon = 1e-16);

        // θ = e_(1,2): ψ = (1/√5)(2/π) sin x sin 2y, u = (-∂ᵧψ, ∂ₓψ)
        let e12 = SpectralField::mode(b, 1, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let (x, y): (f64, f64) = (rng.random_range(0.0..PI), rng.random_range(0.0..PI));
            let c = 2.0 / PI / 5f64.sqrt();
            let want = [-c * x.sin() * 2.0 * (2.0 * y).cos(), c * x.cos() * (2.0 * y).sin()];
            let got = e12.velocity_at(x, y);
            assert_abs_diff_eq!(got[0], want[0], epsilon = 1e-14);
            assert_abs_diff_eq!(got[1], want[1], epsilon = 1e-14);
        }
    }

    #[test]
    fn velocity_grid_matches_pointwise() {
        let b = basis(25);
        let theta = random_field(&b, 25, 5);
        let grid = QuadGrid::with_nodes(9);
        let v = theta.velocity_on(grid.xs(), grid.ys());
        for (i, (x, y, ux)) in v.ux.points().enumerate() {
            let u = theta.velocity_at(x, y);
            assert_abs_diff_eq!(ux, u[0], epsilon = 1e-13);
            assert_abs_diff_eq!(v.uy.values()[i], u[1], epsilon = 1e-13);
        }
    }

    #[test]
    fn velocity_is_divergence_free() {
        let b = basis(40);
        for seed in 0..3 {
            let mut theta = random_field(&b, 40, seed);
            let n = theta.l2_norm();
            theta = theta.scaled(1.0 / n);
            let grid = QuadGrid::for_bandwidth(2 * b.max_frequency() + 4);
            let div = velocity_divergence(&theta, &grid);
            assert!(div.coeffs().iter().all(|c| c.abs() < 1e-12));
        }
    }

    #[test]
    fn synthesize_then_analyze_recovers_mode() {
        let b = basis(30);
        let grid = QuadGrid::for_bandwidth(2 * b.max_frequency());
        let e21 = SpectralField::mode(b.clone(), 2, 1).unwrap();
        let a = analyze(&grid, &e21.synthesize_on(&grid), b.clone(), 30);
        assert!(a.warnings.is_empty());
        let pos = b.position(2, 1).unwrap();
        for (j, c) in a.field.coeffs().iter().enumerate() {
            let want = if j == pos { 1.0 } else { 0.0 };
            assert!((c - want).abs() < 1e-12, "coefficient {j}: {c}");
        }
        let zero = analyze(&grid, &grid.zeros(), b, 30);
        assert!(zero.field.coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn analyze_product_of_modes_matches_product_to_sum() {
        // sin x sin y · sin 2x sin y = ½(cos x - cos 3x)·½(1 - cos 2y).
        // Sine coefficients on (0,π): (2/π)∫ (cos x − cos 3x)/2 · sin(px) dx and
        // (2/π)∫ (1 − cos 2y)/2 · sin(qy) dy, nonzero only for even p and odd q.
        let b = basis(120);
        let grid = QuadGrid::for_bandwidth(80);
        let a = analyze_fn(&grid, b.clone(), 120, |x, y| {
            x.sin() * y.sin() * (2.0 * x).sin() * y.sin()
        });
        let cos_sin = |a: f64, p: f64| {
            // ∫_0^π cos(a x) sin(p x) dx for integer a, p with p ± a odd
            if ((p + a) as i64) % 2 == 1 {
                2.0 * p / (p * p - a * a)
            } else {
                0.0
            }
        };
        for (j, m) in b.modes().iter().enumerate() {
            let (p, q) = (m.p as f64, m.q as f64);
            let fx = 0.5 * (cos_sin(1.0, p) - cos_sin(3.0, p));
            let fy = 0.5 * (cos_sin(0.0, q) - cos_sin(2.0, q));
            // f_j = (2/π) ∫∫ f sin(px) sin(qy) with the (2/π) of w_j
            let want = (2.0 / PI) * fx * fy;
            assert!((a.field.coeffs()[j] - want).abs() < 1e-12, "mode ({p},{q})");
        }
    }

    #[test]
    fn analyze_warns_when_grid_too_coarse() {
        let b = basis(50);
        let grid = QuadGrid::with_nodes(8);
        let a = analyze(&grid, &grid.zeros(), b, 50);
        assert!(matches!(a.warnings[0], Warning::BandwidthExceeded { .. }));
    }

    #[test]
    fn h1_norm_matches_dirichlet_energy() {
        let b = basis(35);
        let f = random_field(&b, 35, 9);
        let grid = QuadGrid::for_bandwidth(2 * b.max_frequency() + 4);
        let [gx, gy] = f.gradient_on(grid.xs(), grid.ys());
        let energy = grid.inner(&gx, &gx) + grid.inner(&gy, &gy);
        let norm2 = f.sobolev_norm(1.0).powi(2);
        assert!((energy - norm2).abs() < 1e-12 * norm2);
    }

    #[test]
    fn padding_preserves_norms_and_differences() {
        let b = basis(40);
        let f = random_field(&b, 12, 4);
        let g = random_field(&b, 40, 5);
        let padded = f.padded(40);
        for s in [-1.0, 0.0, 0.5, 1.0] {
            assert_eq!(padded.sobolev_norm(s), f.sobolev_norm(s));
        }
        assert_eq!(g.difference(&f), g.difference(&padded));
    }

    proptest! {
        #[test]
        fn frac_powers_compose_and_invert(seed in 0u64..1000, a in -1.0f64..1.0, c in -1.0f64..1.0) {
            let b = basis(50);
            let f = random_field(&b, 50, seed);
            let back = f.frac_apply(1.0).frac_apply(-1.0);
            for (x, y) in back.coeffs().iter().zip(f.coeffs()) {
                prop_assert!((x - y).abs() <= 1e-14 * y.abs().max(1e-300));
            }
            let lhs = f.frac_apply(a).frac_apply(c);
            let rhs = f.frac_apply(a + c);
            for (x, y) in lhs.coeffs().iter().zip(rhs.coeffs()) {
                prop_assert!((x - y).abs() <= 1e-13 * y.abs());
            }
        }

        #[test]
        fn frac_is_self_adjoint(seed in 0u64..1000) {
            let b = basis(50);
            let f = random_field(&b, 50, seed);
            let g = random_field(&b, 50, seed + 7);
            for s in [0.5, 1.0, 1.5] {
                let lhs = f.frac_apply(s).dot(&g);
                let rhs = f.dot(&g.frac_apply(s));
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
            }
        }

        #[test]
        fn sobolev_norm_nondecreasing_in_order(seed in 0u64..1000, s in -2.0f64..1.9) {
            let b = basis(30);
            let f = random_field(&b, 30, seed);
            prop_assert!(f.sobolev_norm(s) <= f.sobolev_norm(s + 0.1) * (1.0 + 1e-14));
        }
    }
}
