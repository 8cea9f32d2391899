//! Dirichlet heat kernel of the square and the subordination route to `Λ^s`.
//!
//! Two independent kernel evaluations are provided: the eigenfunction sum
//! `H = Σ e^{-λ_j t} w_j(x) w_j(y)` and the method of images, where the 1D
//! interval kernel is a signed sum of translated and reflected Gaussians and
//! the square kernel is the product of two interval kernels. In the image form
//! the translated Gaussians are annihilated exactly by `∇ₓ + ∇ᵧ`, so the
//! translation defect is computed from the reflected images alone.
//!
//! Fractional powers are recovered from the heat semigroup through
//! `λ^{s/2} = c_s ∫₀^∞ t^{-1-s/2} (1 - e^{-tλ}) dt`, integrated with
//! [`TimeRule`] plus closed-form tails.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::eigenbasis::{boundary_distance, EigenBasis, DIM};
use crate::error::{Error, Result, Warning};
use crate::quadrature::TimeRule;
use crate::spectral::SpectralField;

/// Relative size below which dropped series terms are ignored.
pub const SERIES_TOL: f64 = 1e-16;

pub(crate) fn check_order(s: f64) -> Result<()> {
    if s > 0.0 && s < 2.0 {
        Ok(())
    } else {
        Err(Error::OrderOutOfRange(s))
    }
}

/// `∫₀^∞ t^{-1-s/2}(1 - e^{-λt}) dt` split into the quadrature window and
/// closed-form tails. Returns `(value, dropped_tail_bound)`.
fn subordination_integral(rule: &TimeRule, s: f64, lambda: f64) -> (f64, f64) {
    let a = 1.0 + 0.5 * s;
    let window = rule.integrate_window(|t| -(-lambda * t).exp_m1() * t.powf(-a));
    let left = left_tail(lambda, s, rule.t_min());
    let big_t = rule.t_max();
    let right = (2.0 / s) * big_t.powf(-0.5 * s);
    // ∫_T^∞ t^{-1-s/2} e^{-λt} dt, which the tail formula above omits
    let dropped = big_t.powf(-a) * (-lambda * big_t).exp() / lambda;
    (window + left + right, dropped)
}

/// `∫₀^a t^{-1-s/2}(1 - e^{-λt}) dt = Σ_{k≥1} (-1)^{k+1} λ^k a^{k-s/2} / (k!(k - s/2))`.
fn left_tail(lambda: f64, s: f64, a: f64) -> f64 {
    let half = 0.5 * s;
    let x = lambda * a;
    let mut term_pow = a.powf(-half); // a^{-s/2}·(λa)^k/k! built incrementally
    let mut sum = 0.0;
    for k in 1..80 {
        term_pow *= x / k as f64;
        let term = term_pow / (k as f64 - half);
        if k % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// The constant `c_s = (s/2) / Γ(1 - s/2)`, so that
/// `1 = c_s ∫₀^∞ t^{-1-s/2}(1 - e^{-t}) dt`, `0 < s < 2`.
pub fn compute_cs(s: f64) -> Result<f64> {
    Ok(SubordinationRule::new(s)?.cs())
}

/// Time quadrature and normalisation for one fractional order.
#[derive(Debug, Clone, PartialEq)]
pub struct SubordinationRule {
    s: f64,
    cs: f64,
    rule: TimeRule,
}

impl SubordinationRule {
    pub fn new(s: f64) -> Result<Self> {
        Self::with_rule(s, TimeRule::standard())
    }

    pub fn with_rule(s: f64, rule: TimeRule) -> Result<Self> {
        check_order(s)?;
        // ∫₀^∞ t^{-1-s/2}(1 - e^{-t}) dt = Γ(1 - s/2) / (s/2)
        let cs = 0.5 * s / libm::tgamma(1.0 - 0.5 * s);
        Ok(Self { s, cs, rule })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn cs(&self) -> f64 {
        self.cs
    }

    pub fn time_rule(&self) -> &TimeRule {
        &self.rule
    }

    /// `c_s ∫₀^∞ t^{-1-s/2}(1 - e^{-tλ}) dt`, which should equal `λ^{s/2}`.
    pub fn lambda_power(&self, lambda: f64) -> f64 {
        self.cs * subordination_integral(&self.rule, self.s, lambda).0
    }

    /// `|c_s ∫₀^∞ t^{-1-s/2}(1 - e^{-t}) dt - 1|` evaluated on this rule.
    pub fn normalization_residual(&self) -> f64 {
        (self.lambda_power(1.0) - 1.0).abs()
    }
}

/// `e^{tΔ}f`: coefficient `j` multiplied by `e^{-λ_j t}`.
pub fn heat_apply(f: &SpectralField, t: f64) -> SpectralField {
    assert!(t >= 0.0, "heat semigroup needs t ≥ 0");
    if t == 0.0 {
        return f.clone();
    }
    let basis = f.basis();
    let coeffs = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(j, &c)| c * (-basis.eigenvalue(j) * t).exp())
        .collect();
    SpectralField::new(basis.clone(), coeffs).expect("heat semigroup keeps coefficients finite")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subordinated {
    pub field: SpectralField,
    /// Bound on the part of the right tail left out of the closed form, relative to `‖f‖₀`.
    pub tail_estimate: f64,
}

/// `Λ^s f = c_s ∫₀^∞ t^{-1-s/2}(f - e^{tΔ}f) dt`, the time integral taken
/// over the nodes of the rule with `heat_apply` at each node.
pub fn frac_via_subordination(f: &SpectralField, rule: &SubordinationRule) -> Subordinated {
    let s = rule.s();
    let a = 1.0 + 0.5 * s;
    let time = rule.time_rule();
    let basis = f.basis();
    let len = f.len();
    let mut acc = alloc::vec![0.0; len];
    for (&t, &w) in time.nodes().iter().zip(time.weights()) {
        let heated = heat_apply(f, t);
        let weight = w * t.powf(-a);
        for ((out, &c), &h) in acc.iter_mut().zip(f.coeffs()).zip(heated.coeffs()) {
            *out += weight * (c - h);
        }
    }
    let big_t = time.t_max();
    let right = (2.0 / s) * big_t.powf(-0.5 * s);
    let mut tail = 0.0f64;
    for (j, out) in acc.iter_mut().enumerate() {
        let lambda = basis.eigenvalue(j);
        let c = f.coeffs()[j];
        *out += c * (left_tail(lambda, s, time.t_min()) + right);
        *out *= rule.cs();
        tail = tail.max(rule.cs() * big_t.powf(-a) * (-lambda * big_t).exp() / lambda);
    }
    Subordinated {
        field: SpectralField::new(basis.clone(), acc).expect("finite subordination result"),
        tail_estimate: tail,
    }
}

/// Values of the 1D Dirichlet heat kernel on `(0, π)` and its derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalKernel {
    pub h: f64,
    pub dx: f64,
    pub dy: f64,
    /// `(∂ₓ + ∂ᵧ) h`, from the reflected images only.
    pub translation_defect: f64,
}

/// Image count `N` such that every dropped Gaussian is below
/// `exp(-(2πN)²/(4t)) < 1e-16` of the kernel scale.
pub fn image_count(t: f64) -> usize {
    let reach = (4.0 * t * (1.0 / SERIES_TOL).ln()).sqrt();
    ((reach / (2.0 * PI)).ceil() as usize).max(1)
}

/// 1D kernel by the method of images:
/// `h = Σₙ G(x - y + 2πn) - G(x + y + 2πn)` with `G(z) = (4πt)^{-1/2} e^{-z²/4t}`.
pub fn interval_kernel_images(x: f64, y: f64, t: f64) -> IntervalKernel {
    let n_img = image_count(t) as i64;
    let norm = (4.0 * PI * t).sqrt().recip();
    let gauss = |z: f64| norm * (-z * z / (4.0 * t)).exp();
    let mut h = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    let mut defect = 0.0;
    for n in -n_img..=n_img {
        let shift = 2.0 * PI * n as f64;
        let z1 = x - y + shift;
        let z2 = x + y + shift;
        let g1 = gauss(z1);
        let g2 = gauss(z2);
        let dg1 = -z1 / (2.0 * t) * g1;
        let dg2 = -z2 / (2.0 * t) * g2;
        h += g1 - g2;
        dx += dg1 - dg2;
        dy += -dg1 - dg2;
        defect -= 2.0 * dg2;
    }
    IntervalKernel {
        h,
        dx,
        dy,
        translation_defect: defect,
    }
}

/// 1D kernel from its sine expansion, truncated once `e^{-p²t}` falls below
/// [`SERIES_TOL`] relative to the first term.
pub fn interval_kernel_eigen(x: f64, y: f64, t: f64) -> IntervalKernel {
    let mut h = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    let first = (-t).exp();
    let mut p = 1u32;
    loop {
        let pf = p as f64;
        let e = (-pf * pf * t).exp();
        if e < SERIES_TOL * first {
            break;
        }
        let (sx, cx) = ((pf * x).sin(), (pf * x).cos());
        let (sy, cy) = ((pf * y).sin(), (pf * y).cos());
        h += e * sx * sy;
        dx += e * pf * cx * sy;
        dy += e * pf * sx * cy;
        p += 1;
    }
    let c = 2.0 / PI;
    IntervalKernel {
        h: c * h,
        dx: c * dx,
        dy: c * dy,
        translation_defect: c * (dx + dy),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMethod {
    EigenSum,
    ImageSeries,
}

/// `H(x, y, t)` with `∇ₓH` and `∇ᵧH`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    pub grad_x: [f64; 2],
    pub grad_y: [f64; 2],
}

impl KernelValue {
    pub fn translation_defect(&self) -> [f64; 2] {
        [self.grad_x[0] + self.grad_y[0], self.grad_x[1] + self.grad_y[1]]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatKernelEval {
    pub t: f64,
    pub method: KernelMethod,
    /// Image count per axis, or the number of eigenmodes summed.
    pub truncation: usize,
    pub values: Vec<KernelValue>,
    pub warnings: Vec<Warning>,
}

/// Square kernel as the product of two image-series interval kernels.
pub fn kernel_images(x: [f64; 2], y: [f64; 2], t: f64) -> KernelValue {
    let k1 = interval_kernel_images(x[0], y[0], t);
    let k2 = interval_kernel_images(x[1], y[1], t);
    KernelValue {
        value: k1.h * k2.h,
        grad_x: [k1.dx * k2.h, k1.h * k2.dx],
        grad_y: [k1.dy * k2.h, k1.h * k2.dy],
    }
}

/// `(∇ₓ + ∇ᵧ)H` from the reflected images; the free-space part cancels identically.
pub fn translation_defect_images(x: [f64; 2], y: [f64; 2], t: f64) -> [f64; 2] {
    let k1 = interval_kernel_images(x[0], y[0], t);
    let k2 = interval_kernel_images(x[1], y[1], t);
    [k1.translation_defect * k2.h, k1.h * k2.translation_defect]
}

/// `(∇ₓ + ∇ᵧ)` applied to the whole-space Gaussian `(4πt)^{-d/2} e^{-|x-y|²/4t}`.
pub fn free_space_translation_defect(x: [f64; 2], y: [f64; 2], t: f64) -> [f64; 2] {
    let r2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
    let g = (4.0 * PI * t).recip() * (-r2 / (4.0 * t)).exp();
    let mut out = [0.0; 2];
    for (i, o) in out.iter_mut().enumerate() {
        let gx = -(x[i] - y[i]) / (2.0 * t) * g;
        let gy = (x[i] - y[i]) / (2.0 * t) * g;
        *o = gx + gy;
    }
    out
}

/// Eigen-sum evaluation over the modes of `basis`, with a truncation warning
/// when the basis is exhausted before the terms fall below tolerance.
pub fn kernel_eigen(basis: &EigenBasis, x: [f64; 2], y: [f64; 2], t: f64) -> (KernelValue, usize, Option<Warning>) {
    let first = (-basis.eigenvalue(0) * t).exp();
    let mut v = KernelValue {
        value: 0.0,
        grad_x: [0.0; 2],
        grad_y: [0.0; 2],
    };
    let mut used = 0;
    let mut last = 1.0;
    for m in basis.modes() {
        let e = (-m.eigenvalue() * t).exp();
        last = e / first;
        if last < SERIES_TOL {
            break;
        }
        let wx = m.value(x[0], x[1]);
        let wy = m.value(y[0], y[1]);
        let gx = m.gradient(x[0], x[1]);
        let gy = m.gradient(y[0], y[1]);
        v.value += e * wx * wy;
        for i in 0..2 {
            v.grad_x[i] += e * gx[i] * wy;
            v.grad_y[i] += e * wx * gy[i];
        }
        used += 1;
    }
    let warning = (used == basis.len() && last >= SERIES_TOL).then_some(Warning::EigenSumTruncated {
        t,
        modes: used,
        last_term: last,
    });
    (v, used, warning)
}

/// Kernel at each `(x, y)` pair. The eigen route needs a basis large enough
/// for the requested `t`; it warns otherwise.
pub fn kernel_eval(
    pairs: &[([f64; 2], [f64; 2])],
    t: f64,
    method: KernelMethod,
    basis: Option<&EigenBasis>,
) -> Result<HeatKernelEval> {
    if t <= 0.0 {
        return Err(Error::InvalidArgument("heat kernel needs t > 0"));
    }
    let mut warnings = Vec::new();
    let mut values = Vec::with_capacity(pairs.len());
    let truncation = match method {
        KernelMethod::ImageSeries => {
            values.extend(pairs.iter().map(|&(x, y)| kernel_images(x, y, t)));
            image_count(t)
        }
        KernelMethod::EigenSum => {
            let basis = basis.ok_or(Error::InvalidArgument("eigen-sum kernel needs a basis"))?;
            let mut used = 0;
            for &(x, y) in pairs {
                let (v, n, w) = kernel_eigen(basis, x, y, t);
                used = used.max(n);
                values.push(v);
                if let Some(w) = w {
                    if !warnings.contains(&w) {
                        warnings.push(w);
                    }
                }
            }
            used
        }
    };
    Ok(HeatKernelEval {
        t,
        method,
        truncation,
        values,
        warnings,
    })
}

/// Number of modes the eigen sum needs at time `t` (first `e^{-λt}` below tolerance).
pub fn eigen_modes_needed(t: f64) -> usize {
    let lambda_cut = 2.0 + (1.0 / SERIES_TOL).ln() / t;
    // lattice points with p, q ≥ 1 inside the disc p² + q² ≤ Λ
    let r = lambda_cut.sqrt();
    let mut count = 0usize;
    let mut p = 1.0;
    while p <= r {
        count += (lambda_cut - p * p).max(0.0).sqrt().floor() as usize;
        p += 1.0;
    }
    count + 1
}

/// `sup_{|x-y| ≤ d(x)/10} |(∇ₓ + ∇ᵧ)H(x, y, t)|` over a polar sample of the disc,
/// for `0 < t ≤ d(x)²`.
pub fn cancellation_profile(x: [f64; 2], t: f64) -> Result<f64> {
    let d = boundary_distance(x[0], x[1]);
    if d <= 0.0 {
        return Err(Error::NotInterior { x: x[0], y: x[1] });
    }
    if !(t > 0.0 && t <= d * d) {
        return Err(Error::OutsideCancellationWindow { t, limit: d * d });
    }
    const RINGS: usize = 8;
    const RAYS: usize = 32;
    let radius = d / 10.0;
    let mut sup = defect_norm(translation_defect_images(x, x, t));
    for k in 1..=RINGS {
        let r = radius * k as f64 / RINGS as f64;
        for a in 0..RAYS {
            let phi = 2.0 * PI * a as f64 / RAYS as f64;
            let y = [x[0] + r * phi.cos(), x[1] + r * phi.sin()];
            sup = sup.max(defect_norm(translation_defect_images(x, y, t)));
        }
    }
    Ok(sup)
}

fn defect_norm(v: [f64; 2]) -> f64 {
    (v[0] * v[0] + v[1] * v[1]).sqrt()
}

/// `ln(profile·t^{1/2+d/2}) ≈ a - d(x)²/(Ĉ t)` fitted by least squares over
/// the supplied `(t, profile)` samples; returns `Ĉ` and the rescaled products
/// `profile·t^{1/2+d/2}·e^{d(x)²/(Ĉt)}`.
pub fn fit_cancellation_constant(d: f64, samples: &[(f64, f64)]) -> (f64, Vec<f64>) {
    let expo = 0.5 + 0.5 * DIM as f64;
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|&(t, p)| (d * d / t, (p * t.powf(expo)).ln()))
        .collect();
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in &pts {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let c_hat = -1.0 / slope;
    let products = samples
        .iter()
        .map(|&(t, p)| p * t.powf(expo) * (d * d / (c_hat * t)).exp())
        .collect();
    (c_hat, products)
}

/// One row of a bound-measurement report.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub quantity: &'static str,
    pub x: [f64; 2],
    pub t: f64,
    pub measured: f64,
    pub bound_form: &'static str,
}

/// Measured envelopes of the Gaussian kernel bounds over a sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBoundReport {
    pub k_upper: f64,
    pub k_lower: f64,
    pub k_gradient: f64,
    /// `sup H t^{d/2} e^{|x-y|²/(K t)}`: the measured upper constant `C`.
    pub upper: f64,
    /// `inf H t^{d/2} e^{|x-y|²/(k t)}`: the measured lower constant `c`.
    pub lower: f64,
    /// `sup |∇ₓH| t^{1/2+d/2} e^{|x-y|²/(K t)}`.
    pub gradient: f64,
    pub rows: Vec<BoundRow>,
}

pub const UPPER_FORM: &str = "H*t^(d/2)*exp(|x-y|^2/(K*t))";
pub const LOWER_FORM: &str = "H*t^(d/2)*exp(|x-y|^2/(k*t))";
pub const GRADIENT_FORM: &str = "|grad_x H|*t^(1/2+d/2)*exp(|x-y|^2/(K*t))";

/// Envelope ratios over all `(x, y)` in `points × points` and all `times`,
/// with one row per `(x, t)` holding the sup (or inf) over `y`. Pairs whose
/// kernel value is subnormal are skipped.
pub fn measure_kernel_bounds(
    points: &[[f64; 2]],
    times: &[f64],
    k_upper: f64,
    k_lower: f64,
    k_gradient: f64,
) -> KernelBoundReport {
    let half_d = 0.5 * DIM as f64;
    let mut report = KernelBoundReport {
        k_upper,
        k_lower,
        k_gradient,
        upper: 0.0,
        lower: f64::INFINITY,
        gradient: 0.0,
        rows: Vec::new(),
    };
    for &t in times {
        for &x in points {
            let (mut up, mut lo, mut gr) = (0.0f64, f64::INFINITY, 0.0f64);
            for &y in points {
                let r2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
                let kv = kernel_images(x, y, t);
                // products formed in log space; subnormal kernel values carry too few digits
                if kv.value >= f64::MIN_POSITIVE {
                    let ln_h = kv.value.ln() + half_d * t.ln();
                    up = up.max((ln_h + r2 / (k_upper * t)).exp());
                    lo = lo.min((ln_h + r2 / (k_lower * t)).exp());
                }
                let g = defect_norm(kv.grad_x);
                if g >= f64::MIN_POSITIVE {
                    gr = gr.max((g.ln() + (0.5 + half_d) * t.ln() + r2 / (k_gradient * t)).exp());
                }
            }
            report.upper = report.upper.max(up);
            report.lower = report.lower.min(lo);
            report.gradient = report.gradient.max(gr);
            report.rows.push(BoundRow {
                quantity: "kernel_upper",
                x,
                t,
                measured: up,
                bound_form: UPPER_FORM,
            });
            report.rows.push(BoundRow {
                quantity: "kernel_lower",
                x,
                t,
                measured: lo,
                bound_form: LOWER_FORM,
            });
            report.rows.push(BoundRow {
                quantity: "kernel_gradient",
                x,
                t,
                measured: gr,
                bound_form: GRADIENT_FORM,
            });
        }
    }
    report
}

/// `∫₀^∞ t^{-1-m/2} e^{-p²/(Kt)} dt` on the subordination time rule, with the
/// part beyond `t_max` summed from its series in `1/t`. The exact value is
/// `Γ(m/2)(K/p²)^{m/2}`.
pub fn gaussian_time_integral(rule: &TimeRule, m: f64, p: f64, k: f64) -> f64 {
    let a = 0.5 * m;
    let c = p * p / k;
    let window = rule.integrate_window(|t| t.powf(-1.0 - a) * (-c / t).exp());
    // ∫_T^∞ t^{-1-a} e^{-c/t} dt = ∫_0^{1/T} v^{a-1} e^{-cv} dv
    let v = 1.0 / rule.t_max();
    let mut term = 1.0;
    let mut tail = 0.0;
    for j in 0..200 {
        let contrib = term * v.powf(a + j as f64) / (a + j as f64);
        tail += contrib;
        if contrib.abs() < 1e-18 * tail.abs() {
            break;
        }
        term *= -c / (j as f64 + 1.0);
    }
    window + tail
}

/// Kernel cross-validation sample: eigen sum against image series at one `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelAgreement {
    pub t: f64,
    pub max_relative: f64,
    pub modes: usize,
    pub warnings: Vec<Warning>,
}

pub fn kernel_agreement(basis: &Arc<EigenBasis>, pairs: &[([f64; 2], [f64; 2])], t: f64) -> Result<KernelAgreement> {
    let images = kernel_eval(pairs, t, KernelMethod::ImageSeries, None)?;
    let eigen = kernel_eval(pairs, t, KernelMethod::EigenSum, Some(basis))?;
    let max_relative = images
        .values
        .iter()
        .zip(&eigen.values)
        .map(|(a, b)| (a.value - b.value).abs() / a.value.abs())
        .fold(0.0, f64::max);
    Ok(KernelAgreement {
        t,
        max_relative,
        modes: eigen.truncation,
        warnings: eigen.warnings,
    })
}

/// `∫_Ω H(x, y, t) dy` by tensor Gauss–Legendre with `nodes` per axis.
pub fn kernel_mass(x: [f64; 2], t: f64, nodes: usize) -> f64 {
    let rule = crate::quadrature::AxisRule::with_nodes(nodes);
    let h1: Vec<f64> = rule.nodes().iter().map(|&y| interval_kernel_images(x[0], y, t).h).collect();
    let h2: Vec<f64> = rule.nodes().iter().map(|&y| interval_kernel_images(x[1], y, t).h).collect();
    let w = rule.weights();
    let mut total = 0.0;
    for a in 0..rule.len() {
        let mut inner = 0.0;
        for b in 0..rule.len() {
            inner += w[b] * h2[b];
        }
        total += w[a] * h1[a] * inner;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn order_outside_open_interval_rejected() {
        for s in [0.0, 2.0, -0.5, 2.5] {
            assert_eq!(compute_cs(s), Err(Error::OrderOutOfRange(s)));
        }
    }

    #[test]
    fn gaussian_time_integral_matches_gamma() {
        let rule = TimeRule::standard();
        let sqrt_pi = PI.sqrt();
        let gamma_half = [sqrt_pi, 1.0, 0.5 * sqrt_pi, 1.0];
        for (i, g) in gamma_half.iter().enumerate() {
            let m = (i + 1) as f64;
            for p in [0.05, 0.25, 1.0, 3.0] {
                for k in [1.0, 4.0, 16.0] {
                    let exact = g * (k / (p * p)).powf(0.5 * m);
                    let q = gaussian_time_integral(&rule, m, p, k);
                    assert!((q - exact).abs() < 1e-12 * exact, "m={m} p={p} K={k}: {q} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn normalization_identity_holds() {
        for s in [0.5, 1.0, 1.5] {
            let rule = SubordinationRule::new(s).unwrap();
            assert!(rule.normalization_residual() < 1e-8);
        }
    }

    #[test]
    fn cs_matches_high_precision_values() {
        for (s, exact) in [(0.5, 0.20401223477456574527), (1.0, 0.28209479177387814347), (1.5, 0.20686174712265698577)] {
            let cs = compute_cs(s).unwrap();
            assert!((cs - exact).abs() < 4.0 * f64::EPSILON * exact, "s={s}: {cs} vs {exact}");
        }
    }

    #[test]
    fn lambda_two_gives_sqrt_two() {
        let rule = SubordinationRule::new(1.0).unwrap();
        assert_abs_diff_eq!(rule.lambda_power(2.0), 2f64.sqrt(), epsilon = 1e-8);
    }

    #[test]
    fn heat_semigroup_examples() {
        let basis = Arc::new(EigenBasis::new(10));
        let e11 = SpectralField::mode(basis.clone(), 1, 1).unwrap();
        assert_abs_diff_eq!(heat_apply(&e11, 1.0).coeffs()[0], (-2.0f64).exp(), epsilon = 1e-17);
        assert!(heat_apply(&e11, 500.0).coeffs().iter().all(|&c| c == 0.0));
        assert_eq!(heat_apply(&e11, 0.0), e11);
        let f = SpectralField::new(basis.clone(), (0..10).map(|j| 1.0 / (j + 1) as f64).collect()).unwrap();
        let two = heat_apply(&heat_apply(&f, 0.3), 0.45);
        let one = heat_apply(&f, 0.75);
        for (a, b) in two.coeffs().iter().zip(one.coeffs()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15 * b.abs());
        }
    }

    #[test]
    fn subordination_of_zero_is_zero() {
        let basis = Arc::new(EigenBasis::new(5));
        let zero = SpectralField::zeros(basis, 5);
        let rule = SubordinationRule::new(1.0).unwrap();
        assert!(frac_via_subordination(&zero, &rule).field.coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn image_and_eigen_interval_kernels_agree() {
        for &t in &[0.01, 0.1, 1.0, 5.0] {
            for &(x, y) in &[(0.4, 0.5), (1.5, 1.7), (3.0, 2.9), (1.0, 1.0)] {
                let a = interval_kernel_images(x, y, t);
                let b = interval_kernel_eigen(x, y, t);
                let scale = a.h.abs().max(1e-3);
                assert!((a.h - b.h).abs() < 1e-12 * scale.max(1.0), "t={t} x={x} y={y}");
                assert!((a.dx - b.dx).abs() < 1e-11 * (1.0 + a.dx.abs()));
                assert!((a.dy - b.dy).abs() < 1e-11 * (1.0 + a.dy.abs()));
                assert!((a.translation_defect - b.translation_defect).abs() < 1e-10 * (1.0 + a.dx.abs()));
            }
        }
    }

    #[test]
    fn kernel_is_symmetric_and_positive() {
        for &t in &[0.05, 0.5] {
            for &(x, y) in &[([0.3, 1.1], [2.0, 0.7]), ([1.5, 1.5], [1.4, 1.6])] {
                let a = kernel_images(x, y, t).value;
                let b = kernel_images(y, x, t).value;
                assert!(a > 0.0);
                assert_abs_diff_eq!(a, b, epsilon = 1e-15 * a.abs());
            }
        }
    }

    #[test]
    fn free_space_defect_vanishes_identically() {
        let d = free_space_translation_defect([1.0, 2.0], [1.3, 1.7], 0.04);
        assert_eq!(d, [0.0, 0.0]);
    }

    #[test]
    fn cancellation_profile_validates_inputs() {
        assert!(matches!(cancellation_profile([0.0, 1.0], 0.1), Err(Error::NotInterior { .. })));
        assert!(matches!(
            cancellation_profile([0.2, 1.5], 0.05),
            Err(Error::OutsideCancellationWindow { .. })
        ));
        assert!(cancellation_profile([0.2, 1.5], 0.03).unwrap() >= 0.0);
    }

    #[test]
    fn left_tail_series_matches_extended_precision() {
        // ∫_0^{1e-3} t^{-1.6}(1 - e^{-3t}) dt at 40 digits
        let want = 0.473_015_318_884_175_6;
        assert_abs_diff_eq!(left_tail(3.0, 1.2, 1e-3), want, epsilon = 1e-15);
    }
}
