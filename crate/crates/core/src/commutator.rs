//! Commutators of `Λ` with multiplication and differentiation, the
//! commutator form of the SQG nonlinearity, and measured bound ratios.
//!
//! `[Λ^s, ∇]ψ` is evaluated primarily through the heat kernel,
//! `c_s ∫₀^∞ t^{-1-s/2} ∫_Ω (∇ₓ + ∇ᵧ)H(x, y, t) ψ(y) dy dt`, because `∇ψ` does
//! not satisfy the Dirichlet condition and its re-expansion in the sine basis
//! converges only in `L²`. A regularized spectral evaluation serves as an
//! independent cross-check away from the boundary.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_2_PI, PI};

use crate::bump::TestFunction;
use crate::eigenbasis::{boundary_distance, EigenBasis, DIM};
use crate::error::{Error, Result, Warning};
use crate::grid::{GridField, QuadGrid};
use crate::heat::{image_count, SubordinationRule, SERIES_TOL};
use crate::quadrature::GaussLegendre;
use crate::spectral::{analyze, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommutatorTag {
    LambdaChi,
    FracsGrad,
    NonlinearityIdentity,
}

impl CommutatorTag {
    pub fn name(self) -> &'static str {
        match self {
            Self::LambdaChi => "lambda_chi",
            Self::FracsGrad => "fracs_grad",
            Self::NonlinearityIdentity => "nonlinearity_identity",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorReport {
    pub tag: CommutatorTag,
    /// Oversampling basis size (0 when not applicable).
    pub oversampling: usize,
    pub measured: f64,
    pub normalizer: f64,
    pub ratio: f64,
    pub warnings: Vec<Warning>,
}

impl CommutatorReport {
    fn new(tag: CommutatorTag, oversampling: usize, measured: f64, normalizer: f64, warnings: Vec<Warning>) -> Self {
        let ratio = if normalizer > 0.0 { measured / normalizer } else { 0.0 };
        Self {
            tag,
            oversampling,
            measured,
            normalizer,
            ratio,
            warnings,
        }
    }
}


/// Relative `L²` mass of a product left outside the oversampling basis above
/// which results are flagged.
pub const TAIL_TOL: f64 = 1e-8;

/// Support grid for integrands `φ·g` where `g` mixes modes up to `count`.
pub fn bump_grid(phi: &TestFunction, basis: &EigenBasis, count: usize) -> QuadGrid {
    phi.support_grid_for(2 * basis.max_frequency_of(count))
}

fn last_nonzero(f: &SpectralField) -> usize {
    f.coeffs().iter().rposition(|&c| c != 0.0).map_or(0, |i| i + 1)
}

fn check_band_limit(psi: &SpectralField, oversampling: usize) -> Result<Arc<EigenBasis>> {
    let basis = psi.basis().clone();
    if oversampling > basis.len() {
        return Err(Error::DimensionMismatch {
            expected: oversampling,
            got: basis.len(),
        });
    }
    // M ≥ 4m is the intended regime; smaller M is allowed for refinement
    // studies and shows up through the oversampling-tail warning.
    if last_nonzero(psi) > oversampling {
        return Err(Error::InvalidArgument("ψ must lie in the oversampling basis"));
    }
    Ok(basis)
}

/// Relative `L²` tail `(‖g‖² - ‖P_M g‖²)^{1/2} / ‖g‖` of a sampled product.
fn analysis_tail(grid: &QuadGrid, samples: &GridField, projected: &SpectralField) -> f64 {
    let total = grid.inner(samples, samples);
    if total <= 0.0 {
        return 0.0;
    }
    let kept = projected.l2_norm().powi(2);
    ((total - kept).max(0.0) / total).sqrt()
}

fn push_tail(warnings: &mut Vec<Warning>, relative: f64) {
    if relative > TAIL_TOL {
        warnings.push(Warning::OversamplingTail { relative });
    }
}

/// `(grid samples of g, P_M g)` for `g = f·ψ` with `f` given pointwise.
fn multiply_and_analyze<F: Fn(f64, f64) -> f64>(
    grid: &QuadGrid,
    psi: &SpectralField,
    basis: &Arc<EigenBasis>,
    oversampling: usize,
    f: F,
) -> (GridField, SpectralField) {
    let values = psi.synthesize(grid.xs(), grid.ys());
    let mut product = values.clone();
    for ((slot, (x, y, _)), v) in product.values_mut().iter_mut().zip(values.points()).zip(values.values()) {
        *slot = f(x, y) * v;
    }
    let projected = analyze(grid, &product, basis.clone(), oversampling).field;
    (product, projected)
}

/// `[Λ, χ]ψ = Λ(χψ) - χΛψ` in the first `oversampling` modes, with the
/// ratio `‖[Λ, χ]ψ‖_{1/2,D} / (‖χ‖_{W^{2,p}} ‖ψ‖_{1/2,D})`.
pub fn commutator_lambda_chi(
    chi: &TestFunction,
    psi: &SpectralField,
    oversampling: usize,
    p: f64,
) -> Result<(SpectralField, CommutatorReport)> {
    let basis = check_band_limit(psi, oversampling)?;
    let grid = bump_grid(chi, &basis, oversampling);
    let (chi_psi, p_chi_psi) = multiply_and_analyze(&grid, psi, &basis, oversampling, |x, y| chi.value(x, y));
    let lambda_psi = psi.frac_apply(1.0);
    let (chi_lpsi, p_chi_lpsi) = multiply_and_analyze(&grid, &lambda_psi, &basis, oversampling, |x, y| chi.value(x, y));
    let comm = p_chi_psi.frac_apply(1.0).difference(&p_chi_lpsi);

    let mut warnings = Vec::new();
    push_tail(&mut warnings, analysis_tail(&grid, &chi_psi, &p_chi_psi));
    push_tail(&mut warnings, analysis_tail(&grid, &chi_lpsi, &p_chi_lpsi));
    let measured = comm.sobolev_norm(0.5);
    let normalizer = chi.w2p_norm(p, &grid) * psi.sobolev_norm(0.5);
    let report = CommutatorReport::new(CommutatorTag::LambdaChi, oversampling, measured, normalizer, warnings);
    Ok((comm, report))
}

/// `∫_0^π g(y - c) sin(k y) dy` restricted to the window where the Gaussian
/// factor exceeds the series tolerance.
fn windowed_moment<G: Fn(f64) -> f64>(gl: &GaussLegendre, c: f64, reach: f64, k: f64, g: G) -> f64 {
    let lo = (c - reach).max(0.0);
    let hi = (c + reach).min(PI);
    if lo >= hi {
        return 0.0;
    }
    gl.integrate(lo, hi, |y| g(y - c) * (k * y).sin())
}

/// Moments of the interval kernel against `sin(k y)`:
/// `(∫ h(x, y, t) sin(ky) dy, ∫ (∂ₓ + ∂ᵧ)h(x, y, t) sin(ky) dy)`, from the images.
fn interval_moments(gl: &GaussLegendre, x: f64, t: f64, k: u32) -> (f64, f64) {
    let n_img = image_count(t) as i64;
    let norm = (4.0 * PI * t).sqrt().recip();
    // e^{-z²/4t}·(1 + |z|/2t) < 1e-16 beyond this reach
    let reach = (4.0 * t * ((1.0 / SERIES_TOL).ln() + 4.0)).sqrt();
    let gauss = |z: f64| norm * (-z * z / (4.0 * t)).exp();
    let dgauss = |z: f64| -z / (2.0 * t) * gauss(z);
    let kf = k as f64;
    let (mut h, mut defect) = (0.0, 0.0);
    for n in -n_img..=n_img {
        let shift = 2.0 * PI * n as f64;
        let direct = x + shift;
        let reflected = -x - shift;
        h += windowed_moment(gl, direct, reach, kf, gauss);
        h -= windowed_moment(gl, reflected, reach, kf, gauss);
        defect -= 2.0 * windowed_moment(gl, reflected, reach, kf, dgauss);
    }
    (h, defect)
}

/// Nodes of the per-window Gauss–Legendre rule used for kernel moments.
pub const MOMENT_NODES: usize = 64;

/// Kernel-route value of `[Λ^s, ∇]ψ(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracGradValue {
    pub x: [f64; 2],
    pub value: [f64; 2],
    /// Bound on the omitted `t > t_max` part of the time integral.
    pub tail_estimate: f64,
}

impl FracGradValue {
    pub fn norm(&self) -> f64 {
        self.value[0].hypot(self.value[1])
    }
}

/// `[Λ^s, ∇]ψ(x) = c_s ∫₀^∞ t^{-1-s/2} ∫_Ω (∇ₓ + ∇ᵧ)H(x, y, t) ψ(y) dy dt`.
///
/// With `H = h(x₁, y₁) h(x₂, y₂)` and `ψ` a sine expansion the inner
/// integral factorises into 1D kernel moments, each integrated image by image.
/// Below `t_min` the integrand is `O(e^{-d(x)²/4t})` and is dropped.
pub fn frac_grad_kernel(psi: &SpectralField, rule: &SubordinationRule, x: [f64; 2]) -> Result<FracGradValue> {
    let d = boundary_distance(x[0], x[1]);
    if !(d > 0.0) {
        return Err(Error::NotInterior { x: x[0], y: x[1] });
    }
    let len = last_nonzero(psi);
    let modes = &psi.basis().modes()[..len];
    let coeffs = &psi.coeffs()[..len];
    let kmax = modes.iter().map(|m| m.p.max(m.q)).max().unwrap_or(0) as usize;
    let gl = GaussLegendre::new(MOMENT_NODES);
    let time = rule.time_rule();
    let a = 1.0 + 0.5 * rule.s();

    let mut value = [0.0; 2];
    let mut moments = alloc::vec![[(0.0, 0.0); 2]; kmax + 1];
    for (&t, &w) in time.nodes().iter().zip(time.weights()) {
        for k in 1..=kmax {
            moments[k] = [
                interval_moments(&gl, x[0], t, k as u32),
                interval_moments(&gl, x[1], t, k as u32),
            ];
        }
        let weight = w * t.powf(-a);
        let (mut v0, mut v1) = (0.0, 0.0);
        for (m, &c) in modes.iter().zip(coeffs) {
            let (h1, d1) = moments[m.p as usize][0];
            let (h2, d2) = moments[m.q as usize][1];
            v0 += c * d1 * h2;
            v1 += c * h1 * d2;
        }
        value[0] += weight * v0;
        value[1] += weight * v1;
    }
    let scale = rule.cs() * FRAC_2_PI;
    let t_max = time.t_max();
    let amplitude: f64 = coeffs.iter().map(|c| c.abs()).sum();
    // beyond t_max each moment pair decays at least like e^{-2t}
    let tail_estimate = 0.5 * rule.cs() * amplitude * PI * PI * t_max.powf(-a) * (-2.0 * t_max).exp();
    Ok(FracGradValue {
        x,
        value: [scale * value[0], scale * value[1]],
        tail_estimate,
    })
}

/// `∫_0^π cos(p x) sin(k x) dx`.
fn cos_sin_integral(p: u32, k: u32) -> f64 {
    if p == k || (p + k) % 2 == 0 {
        0.0
    } else {
        let (pf, kf) = (p as f64, k as f64);
        2.0 * kf / (kf * kf - pf * pf)
    }
}

/// Regularized spectral value of `Λ^s∇ψ(x) - ∇Λ^sψ(x)`.
///
/// `∂ₓψ` is re-expanded in the sine basis in closed form; the resulting
/// series for `Λ^s∂ₓψ` does not converge absolutely, so it is summed with the
/// factor `e^{-δλ}` and extrapolated to `δ → 0` by two Richardson levels. At
/// interior points the regularization error is a power series in `δ` up to
/// terms of size `e^{-d(x)²/4δ}`.
pub fn frac_grad_spectral(psi: &SpectralField, s: f64, x: [f64; 2], delta: f64) -> [f64; 2] {
    let eval = |delta: f64| regularized_frac_grad(psi, s, x, delta);
    let level = |delta: f64| {
        let (a, b) = (eval(delta), eval(0.5 * delta));
        [2.0 * b[0] - a[0], 2.0 * b[1] - a[1]]
    };
    let (r1, r2) = (level(delta), level(0.5 * delta));
    [(4.0 * r2[0] - r1[0]) / 3.0, (4.0 * r2[1] - r1[1]) / 3.0]
}

fn regularized_frac_grad(psi: &SpectralField, s: f64, x: [f64; 2], delta: f64) -> [f64; 2] {
    let len = last_nonzero(psi);
    let modes = &psi.basis().modes()[..len];
    let coeffs = &psi.coeffs()[..len];
    let kmax = ((1.0 / SERIES_TOL).ln() / delta).sqrt().ceil() as u32 + 1;
    let half = 0.5 * s;
    let mut out = [0.0; 2];
    for (m, &c) in modes.iter().zip(coeffs) {
        let (p, q) = (m.p, m.q);
        let (pf, qf) = (p as f64, q as f64);
        let lam = pf * pf + qf * qf;
        // ∂ₓ part: c·(2/π)·p·cos(p x₁) sin(q x₂) re-expanded over sin(k x₁) sin(q x₂)
        let mut sum0 = 0.0;
        let mut sum1 = 0.0;
        for k in 1..=kmax {
            let kf = k as f64;
            let mu_x = kf * kf + qf * qf;
            let mu_y = pf * pf + kf * kf;
            let ix = cos_sin_integral(p, k);
            if ix != 0.0 {
                sum0 += (-delta * mu_x).exp() * mu_x.powf(half) * ix * (kf * x[0]).sin();
            }
            let iy = cos_sin_integral(q, k);
            if iy != 0.0 {
                sum1 += (-delta * mu_y).exp() * mu_y.powf(half) * iy * (kf * x[1]).sin();
            }
        }
        let norm = c * FRAC_2_PI * FRAC_2_PI;
        // (2/π)² from the two normalizations, one 1D factor integrated exactly
        let lambda_grad0 = norm * pf * sum0 * (qf * x[1]).sin();
        let lambda_grad1 = norm * qf * sum1 * (pf * x[0]).sin();
        let grad_lambda0 = c * FRAC_2_PI * lam.powf(half) * pf * (pf * x[0]).cos() * (qf * x[1]).sin();
        let grad_lambda1 = c * FRAC_2_PI * lam.powf(half) * qf * (pf * x[0]).sin() * (qf * x[1]).cos();
        out[0] += lambda_grad0 - grad_lambda0;
        out[1] += lambda_grad1 - grad_lambda1;
    }
    out
}

/// `‖ψ‖_{L^p}`: quadrature for finite `p`, dense sampling for `p = ∞`.
pub fn lp_norm(psi: &SpectralField, p: f64) -> f64 {
    let basis = psi.basis();
    let len = last_nonzero(psi);
    if p.is_infinite() {
        let n = 64 * basis.max_frequency_of(len).max(1) + 1;
        let xs: Vec<f64> = (0..=n).map(|i| PI * i as f64 / n as f64).collect();
        psi.synthesize(&xs, &xs).max_abs()
    } else {
        let grid = QuadGrid::for_bandwidth(4 * basis.max_frequency_of(len) + 64);
        grid.lp_norm(&psi.synthesize_on(&grid), p)
    }
}

/// One rung of the distance ladder for `[Λ^s, ∇]ψ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracGradRow {
    pub x: [f64; 2],
    pub distance: f64,
    pub magnitude: f64,
    /// `|[Λ^s, ∇]ψ(x)|·d(x)^{s+1+d/p} / ‖ψ‖_{L^p}`.
    pub normalized: f64,
    pub tail_estimate: f64,
}

/// Kernel-route commutator at each point, normalized by the distance weight.
pub fn commutator_frac_grad(psi: &SpectralField, s: f64, points: &[[f64; 2]], p: f64) -> Result<Vec<FracGradRow>> {
    if !(p > 1.0) {
        return Err(Error::InvalidArgument("integrability exponent must lie in (1, ∞]"));
    }
    let rule = SubordinationRule::new(s)?;
    let norm = lp_norm(psi, p);
    let exponent = s + 1.0 + DIM as f64 / p;
    points
        .iter()
        .map(|&x| {
            let v = frac_grad_kernel(psi, &rule, x)?;
            let d = boundary_distance(x[0], x[1]);
            let magnitude = v.norm();
            let normalized = if norm > 0.0 { magnitude * d.powf(exponent) / norm } else { 0.0 };
            Ok(FracGradRow {
                x,
                distance: d,
                magnitude,
                normalized,
                tail_estimate: v.tail_estimate,
            })
        })
        .collect()
}

/// Points `(d, d)` with `d = π/4, π/8, …` on the diagonal towards the corner.
pub fn diagonal_ladder(rungs: usize) -> Vec<[f64; 2]> {
    (0..rungs)
        .map(|k| {
            let d = PI / (4.0 * (1u64 << k) as f64);
            [d, d]
        })
        .collect()
}

/// `∫_Ω θ (R_D^⊥θ)·∇φ dx` by quadrature.
pub fn nonlinearity_weak_form(theta: &SpectralField, phi: &TestFunction) -> f64 {
    let grid = bump_grid(phi, theta.basis(), last_nonzero(theta));
    nonlinearity_weak_form_on(theta, phi, &grid)
}

pub fn nonlinearity_weak_form_on(theta: &SpectralField, phi: &TestFunction, grid: &QuadGrid) -> f64 {
    transport_pairing(theta, &theta.frac_apply(-1.0), phi, grid)
}

/// `∫ θ ∇^⊥ψ·∇φ dx` on a grid covering the support of `φ`.
fn transport_pairing(theta: &SpectralField, psi: &SpectralField, phi: &TestFunction, grid: &QuadGrid) -> f64 {
    transport_integrals(theta, psi, phi, grid).0
}

/// `(∫ θ ∇^⊥ψ·∇φ, ∫ |θ ∇^⊥ψ·∇φ|)`.
fn transport_integrals(theta: &SpectralField, psi: &SpectralField, phi: &TestFunction, grid: &QuadGrid) -> (f64, f64) {
    let (xs, ys) = (grid.xs(), grid.ys());
    let th = theta.synthesize(xs, ys);
    let [ux, uy] = psi.perp_gradient_on(xs, ys);
    let mut integrand = th.clone();
    for (i, (slot, (x, y, v))) in integrand.values_mut().iter_mut().zip(th.points()).enumerate() {
        let g = phi.gradient(x, y);
        *slot = v * (ux.values()[i] * g[0] + uy.values()[i] * g[1]);
    }
    (grid.integrate(&integrand), grid.integrate(&integrand.map(f64::abs)))
}

/// `P_M ∂ₓψ` and `P_M ∂ᵧψ` in closed form.
pub fn projected_gradient(psi: &SpectralField, oversampling: usize) -> [SpectralField; 2] {
    let basis = psi.basis().clone();
    let kmax = basis.max_frequency_of(oversampling) as u32;
    let mut out = [alloc::vec![0.0; oversampling], alloc::vec![0.0; oversampling]];
    for (m, &c) in psi.basis().modes().iter().zip(psi.coeffs()) {
        if c == 0.0 {
            continue;
        }
        for k in 1..=kmax {
            // ∂ₓ(sin px sin qy) = p cos px sin qy, re-expanded over sin kx
            if let Some(j) = basis.position(k, m.q).filter(|&j| j < oversampling) {
                out[0][j] += c * m.p as f64 * FRAC_2_PI * cos_sin_integral(m.p, k);
            }
            if let Some(j) = basis.position(m.p, k).filter(|&j| j < oversampling) {
                out[1][j] += c * m.q as f64 * FRAC_2_PI * cos_sin_integral(m.q, k);
            }
        }
    }
    let [gx, gy] = out;
    [
        SpectralField::new(basis.clone(), gx).expect("length matches"),
        SpectralField::new(basis, gy).expect("length matches"),
    ]
}

/// Both sides of the commutator identity for the nonlinearity and their gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResidual {
    pub lhs: f64,
    /// `½∫[Λ, ∇^⊥]ψ·∇φ ψ dx`.
    pub first: f64,
    /// `½∫∇^⊥ψ·[Λ, ∇φ]ψ dx`.
    pub second: f64,
    pub residual: f64,
    /// `max(∫|θu·∇φ|, |first|, |second|)`.
    pub scale: f64,
    pub tail: f64,
}

impl IdentityResidual {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual / self.scale
        } else {
            0.0
        }
    }
}

/// Tanh–sinh nodes per unit of bandwidth on the support grid of the
/// identity check; the grid is refined together with the oversampling level.
pub const IDENTITY_NODES_PER_FREQ: usize = 8;

/// `|∫θu·∇φ - (½∫[Λ,∇^⊥]ψ·∇φ ψ - ½∫∇^⊥ψ·[Λ,∇φ]ψ)|` with `θ = Λψ`, `u = ∇^⊥ψ`.
///
/// `Λ` acts after re-analysis in the first `oversampling` modes:
/// `Λ P_M∇^⊥ψ` from the closed-form expansion of `∇ψ`, `Λ P_M(ψ∂ᵢφ)` by
/// quadrature. Terms carrying `Λ` are paired through coefficients, all others
/// are integrated on a support grid of `φ` whose size grows with `M`.
pub fn commutator_identity_residual(psi: &SpectralField, phi: &TestFunction, oversampling: usize) -> Result<IdentityResidual> {
    let basis = check_band_limit(psi, oversampling)?;
    let nodes = IDENTITY_NODES_PER_FREQ * 2 * basis.max_frequency_of(oversampling) + 1;
    let grid = phi.support_grid(nodes);
    let (xs, ys) = (grid.xs(), grid.ys());
    let lambda_psi = psi.frac_apply(1.0);
    let (lhs, lhs_abs) = transport_integrals(&lambda_psi, psi, phi, &grid);

    let [gx, gy] = projected_gradient(psi, oversampling);
    // ∇^⊥ = (-∂ᵧ, ∂ₓ)
    let perp = [gy.scaled(-1.0), gx];
    let perp_lambda = lambda_psi.perp_gradient_on(xs, ys);
    let perp_v = psi.perp_gradient_on(xs, ys);
    let psi_v = psi.synthesize(xs, ys);
    let theta_v = lambda_psi.synthesize(xs, ys);
    let grad_phi: Vec<[f64; 2]> = psi_v.points().map(|(x, y, _)| phi.gradient(x, y)).collect();

    let mut tail = 0.0f64;
    let (mut first, mut second) = (0.0, 0.0);
    for i in 0..2 {
        let psi_dphi = GridField::new(
            xs.to_vec(),
            ys.to_vec(),
            psi_v.values().iter().zip(&grad_phi).map(|(v, g)| v * g[i]).collect(),
        );
        let a = analyze(&grid, &psi_dphi, basis.clone(), oversampling).field;
        tail = tail.max(analysis_tail(&grid, &psi_dphi, &a));
        // ∫ ψ∂ᵢφ (Λ P_M∇^⊥ψ)ᵢ and ∫ (∇^⊥ψ)ᵢ Λ P_M(ψ∂ᵢφ)
        let lifted_perp = perp[i].frac_apply(1.0).dot(&a);
        let lifted_phi = perp[i].dot(&a.frac_apply(1.0));
        let plain_perp = grid.inner(&psi_dphi, &perp_lambda[i]);
        let dphi_theta = GridField::new(
            xs.to_vec(),
            ys.to_vec(),
            theta_v.values().iter().zip(&grad_phi).map(|(v, g)| v * g[i]).collect(),
        );
        let plain_phi = grid.inner(&dphi_theta, &perp_v[i]);
        first += 0.5 * (lifted_perp - plain_perp);
        second += 0.5 * (lifted_phi - plain_phi);
    }
    let residual = (lhs - (first - second)).abs();
    Ok(IdentityResidual {
        lhs,
        first,
        second,
        residual,
        scale: lhs_abs.max(first.abs()).max(second.abs()),
        tail,
    })
}

/// Report wrapper for [`commutator_identity_residual`].
pub fn identity_report(psi: &SpectralField, phi: &TestFunction, oversampling: usize) -> Result<CommutatorReport> {
    let r = commutator_identity_residual(psi, phi, oversampling)?;
    Ok(CommutatorReport::new(
        CommutatorTag::NonlinearityIdentity,
        oversampling,
        r.residual,
        r.scale,
        Vec::new(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bump::SUPPORT_NODES;
    use crate::galerkin::random_spectrum;
    use approx::assert_abs_diff_eq;

    fn basis(n: usize) -> Arc<EigenBasis> {
        Arc::new(EigenBasis::new(n))
    }

    #[test]
    fn zero_inputs_give_zero() {
        let b = basis(64);
        let zero = SpectralField::zeros(b.clone(), 64);
        let chi = TestFunction::default();
        let (c, r) = commutator_lambda_chi(&chi, &zero, 64, 4.0).unwrap();
        assert!(c.coeffs().iter().all(|&v| v == 0.0));
        assert_eq!(r.ratio, 0.0);
        assert_eq!(nonlinearity_weak_form(&zero, &chi), 0.0);
        let res = commutator_identity_residual(&zero, &chi, 64).unwrap();
        assert_eq!(res.residual, 0.0);
        let rows = commutator_frac_grad(&zero, 1.0, &[[1.0, 1.2]], f64::INFINITY).unwrap();
        assert_eq!(rows[0].magnitude, 0.0);
    }

    #[test]
    fn lambda_chi_ratio_is_homogeneous() {
        let b = basis(64);
        let psi = random_spectrum(&b, 16, 4, 1.0).padded(64);
        let chi = TestFunction::default();
        let (_, r1) = commutator_lambda_chi(&chi, &psi, 64, 4.0).unwrap();
        let (_, r2) = commutator_lambda_chi(&chi, &psi.scaled(2.0), 64, 4.0).unwrap();
        let (_, r3) = commutator_lambda_chi(&chi.scaled(3.0), &psi, 64, 4.0).unwrap();
        assert!(r1.ratio.is_finite() && r1.ratio > 0.0);
        assert!((r2.ratio - r1.ratio).abs() < 1e-12 * r1.ratio);
        assert!((r3.ratio - r1.ratio).abs() < 1e-12 * r1.ratio);
    }

    #[test]
    fn band_limit_is_enforced() {
        let b = basis(64);
        let psi = random_spectrum(&b, 48, 1, 1.0).padded(64);
        assert!(commutator_lambda_chi(&TestFunction::default(), &psi, 32, 4.0).is_err());
    }

    #[test]
    fn cos_sin_integral_matches_quadrature() {
        let gl = GaussLegendre::new(80);
        for p in 1..6 {
            for k in 1..9 {
                let want = gl.integrate(0.0, PI, |x| (p as f64 * x).cos() * (k as f64 * x).sin());
                assert_abs_diff_eq!(cos_sin_integral(p, k), want, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn kernel_moments_reproduce_heat_semigroup() {
        // ∫ h(x, y, t) sin(k y) dy = e^{-k² t} sin(k x)
        let gl = GaussLegendre::new(MOMENT_NODES);
        for &t in &[1e-6, 1e-3, 0.1, 2.0] {
            for k in 1..5 {
                for &x in &[0.05, 0.9, 2.5] {
                    let (h, _) = interval_moments(&gl, x, t, k);
                    let want = (-((k * k) as f64) * t).exp() * (k as f64 * x).sin();
                    assert_abs_diff_eq!(h, want, epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn defect_moment_matches_eigen_expansion() {
        // (∂ₓ + ∂ᵧ)h against sin(ky): ∂ₓ e^{-k²t} sin(kx) plus the
        // boundary-corrected ∫ ∂ᵧh sin(ky) = -k ∫ h cos(ky) dy.
        let gl = GaussLegendre::new(MOMENT_NODES);
        let fine = GaussLegendre::new(200);
        for &t in &[0.05, 0.5] {
            for k in 1..4u32 {
                let x = 0.7;
                let (_, d) = interval_moments(&gl, x, t, k);
                let kf = k as f64;
                let cos_part = fine.integrate(0.0, PI, |y| {
                    crate::heat::interval_kernel_eigen(x, y, t).h * (kf * y).cos()
                });
                let want = kf * (-kf * kf * t).exp() * (kf * x).cos() - kf * cos_part;
                assert_abs_diff_eq!(d, want, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn kernel_and_spectral_routes_agree_in_the_interior() {
        let b = basis(8);
        let rule = SubordinationRule::new(1.0).unwrap();
        for (p, q, x) in [(1, 1, [1.2, 1.4]), (2, 1, [1.0, 1.7]), (1, 2, [1.5, 1.1])] {
            let psi = SpectralField::mode(b.clone(), p, q).unwrap();
            let kernel = frac_grad_kernel(&psi, &rule, x).unwrap().value;
            let spectral = frac_grad_spectral(&psi, 1.0, x, 2e-3);
            let scale = spectral[0].hypot(spectral[1]);
            assert!(scale > 0.0);
            for i in 0..2 {
                assert!((kernel[i] - spectral[i]).abs() < 1e-4 * scale, "{p},{q}: {kernel:?} vs {spectral:?}");
            }
        }
    }

    #[test]
    fn weak_form_is_quadrature_converged() {
        let b = basis(16);
        let theta = random_spectrum(&b, 16, 5, 1.0);
        let phi = TestFunction::new([1.4, 1.7], 0.9);
        let coarse = nonlinearity_weak_form_on(&theta, &phi, &bump_grid(&phi, &b, 16));
        let fine = nonlinearity_weak_form_on(&theta, &phi, &phi.support_grid(2 * SUPPORT_NODES));
        assert!((coarse - fine).abs() < 1e-12);
    }

    #[test]
    fn weak_form_vanishes_for_flat_test_function() {
        let b = basis(16);
        let theta = random_spectrum(&b, 16, 2, 1.0);
        let flat = TestFunction::default().scaled(0.0);
        assert_eq!(nonlinearity_weak_form(&theta, &flat), 0.0);
    }

    #[test]
    fn identity_residual_is_linear_in_phi() {
        let b = basis(32);
        let mut c = alloc::vec![0.0; 32];
        c[b.position(1, 1).unwrap()] = 1.0;
        c[b.position(2, 1).unwrap()] = 0.7;
        c[b.position(1, 2).unwrap()] = -0.4;
        let psi = SpectralField::new(b.clone(), c).unwrap();
        let phi = TestFunction::default();
        let r1 = commutator_identity_residual(&psi, &phi, 32).unwrap();
        let r3 = commutator_identity_residual(&psi, &phi.scaled(3.0), 32).unwrap();
        assert!((r3.lhs - 3.0 * r1.lhs).abs() < 1e-13 * r1.scale);
        assert!((r3.first - 3.0 * r1.first).abs() < 1e-13 * r1.scale);
        assert!((r3.scale - 3.0 * r1.scale).abs() < 1e-13 * r3.scale);
        assert!(r3.relative() < 1e-12 && r1.relative() < 1e-12);
    }

    #[test]
    fn ladder_points_sit_on_the_diagonal() {
        let pts = diagonal_ladder(5);
        assert_eq!(pts.len(), 5);
        assert_abs_diff_eq!(pts[4][0], PI / 64.0, epsilon = 1e-16);
        assert!(pts.iter().all(|p| p[0] == p[1]));
    }
}
