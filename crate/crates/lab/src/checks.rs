//! One function per asserted invariant. The subcommands assemble these into
//! their summaries; the acceptance suite calls them with its own parameters.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use sqg_core::bump::TestFunction;
use sqg_core::commutator::{
    commutator_frac_grad, commutator_identity_residual, commutator_lambda_chi, diagonal_ladder, frac_grad_kernel,
    frac_grad_spectral, CommutatorTag, FracGradRow,
};
use sqg_core::convergence::{
    cauchy_diagnostic, dyadic_envelope, envelope_peaks_inside, hamiltonian_constancy, projection_decay,
    projection_gap, psi_difference, test_function_coefficients, weak_residual, ConvergenceStudy, DecayTable,
    EnvelopeWindow, ProjectionGap, WeakResidual,
};
use sqg_core::eigenbasis::EigenBasis;
use sqg_core::galerkin::{
    random_spectrum, rhs_quadrature, CouplingTensor, Galerkin, Integrator, SolverSettings, TrajectoryRecord, TriadOrder,
};
use sqg_core::grid::QuadGrid;
use sqg_core::heat::{
    frac_via_subordination, gaussian_time_integral, kernel_eval, kernel_mass, measure_kernel_bounds, KernelBoundReport,
    KernelMethod, SubordinationRule,
};
use sqg_core::quadrature::TimeRule;
use sqg_core::spectral::{velocity_divergence, SpectralField};
use sqg_core::Result;

use crate::artifacts::{BoundRecord, ReportRow};
use crate::summary::Check;

fn e(x: f64) -> String {
    format!("{x:.3e}")
}

fn l2(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().map(|x| x * x).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------- eigenbasis

pub fn eigen_exact(basis: &EigenBasis) -> Check {
    let bad = basis
        .modes()
        .iter()
        .enumerate()
        .filter(|(i, m)| {
            let want = u64::from(m.p).pow(2) + u64::from(m.q).pow(2);
            m.eigenvalue_int() != want || basis.eigenvalue(*i) != want as f64
        })
        .count();
    Check::assert(
        "eigenbasis.exact_eigenvalues",
        bad == 0,
        format!("{} modes, {bad} with λ ≠ p² + q²", basis.len()),
    )
}

/// Gram matrix of the first `count` modes on a Gauss–Legendre grid.
pub fn eigen_orthonormal(basis: &EigenBasis, count: usize) -> Check {
    let bandwidth = 2 * basis.max_frequency_of(count) + 2;
    let grid = QuadGrid::for_bandwidth(bandwidth);
    let modes = &basis.modes()[..count];
    let samples: Vec<_> = modes.par_iter().map(|w| grid.sample(|x, y| w.value(x, y))).collect();
    let worst = (0..count)
        .into_par_iter()
        .map(|i| {
            (i..count)
                .map(|j| (grid.inner(&samples[i], &samples[j]) - if i == j { 1.0 } else { 0.0 }).abs())
                .fold(0.0, f64::max)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max);
    Check::assert(
        "eigenbasis.orthonormality",
        worst < 1e-10,
        format!("max |<w_i,w_j> - δ_ij| = {} over {count} modes, {} nodes per axis", e(worst), grid.xs().len()),
    )
}

pub fn eigen_laplacian(basis: &EigenBasis, count: usize) -> Check {
    let pts: Vec<f64> = (1..8).map(|i| PI * i as f64 / 8.0 + 0.01 * i as f64).collect();
    let mut worst = 0.0f64;
    for w in &basis.modes()[..count] {
        let lambda = w.eigenvalue();
        for &x in &pts {
            for &y in &pts {
                worst = worst.max((w.neg_laplacian(x, y) - lambda * w.value(x, y)).abs() / lambda);
            }
        }
    }
    Check::assert(
        "eigenbasis.eigenfunction_identity",
        worst <= 1e-14,
        format!("max |(-Δw - λw)/λ| = {} over {count} modes", e(worst)),
    )
}

pub fn eigen_ordering(len: usize) -> Check {
    let a = EigenBasis::new(len);
    let b = EigenBasis::new(len);
    let key = |m: &sqg_core::eigenbasis::EigenMode| (m.eigenvalue_int(), m.p, m.q);
    let ordered = a.modes().windows(2).all(|w| key(&w[0]) < key(&w[1]));
    let identical = a.modes() == b.modes();
    Check::assert(
        "eigenbasis.deterministic_order",
        ordered && identical,
        format!("strict (λ, p, q) order: {ordered}; rebuild identical: {identical}"),
    )
}

// ------------------------------------------------------------------ spectral

pub fn parseval(f: &SpectralField) -> Check {
    let sum: f64 = f.coeffs().iter().map(|c| c * c).sum();
    let d = (f.sobolev_norm(0.0).powi(2) - sum).abs();
    Check::assert(
        "spectral.parseval",
        d < 1e-14 * sum,
        format!("|‖f‖₀² - Σf_j²| = {} (Σf_j² = {})", e(d), e(sum)),
    )
}

pub fn duality(f: &SpectralField, g: &SpectralField) -> Check {
    let mut worst = 0.0f64;
    for s in [0.5, 1.0, 1.5] {
        let lhs = f.frac_apply(s).dot(g);
        let rhs = f.dot(&g.frac_apply(s));
        let scale = f.frac_apply(s).l2_norm() * g.l2_norm();
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    Check::assert(
        "spectral.duality",
        worst <= 1e-14,
        format!("max |<Λ^s f,g> - <f,Λ^s g>| / (‖Λ^s f‖‖g‖) = {} for s ∈ {{0.5, 1, 1.5}}", e(worst)),
    )
}

/// Coefficient-wise `Λ^a Λ^b f = Λ^{a+b} f`, to the rounding of the power evaluations.
pub fn composition(f: &SpectralField) -> Check {
    let mut worst = 0.0f64;
    for (a, b) in [(0.5, 1.0), (1.0, -0.5), (0.5, 0.5), (-1.0, 1.5), (1.0, 1.0)] {
        let lhs = f.frac_apply(a).frac_apply(b);
        let rhs = f.frac_apply(a + b);
        for (x, y) in lhs.coeffs().iter().zip(rhs.coeffs()) {
            if *y != 0.0 {
                worst = worst.max((x - y).abs() / y.abs());
            }
        }
    }
    Check::assert(
        "spectral.composition",
        worst <= 8.0 * f64::EPSILON,
        format!("max coefficient relative defect {} (≤ 8 ulp)", e(worst)),
    )
}

pub fn divergence_free(theta: &SpectralField) -> Check {
    let unit = theta.scaled(1.0 / theta.l2_norm());
    let grid = QuadGrid::for_bandwidth(2 * unit.basis().max_frequency_of(unit.len()));
    let div = velocity_divergence(&unit, &grid);
    let worst = div.coeffs().iter().fold(0.0f64, |a, c| a.max(c.abs()));
    Check::assert(
        "spectral.divergence_free",
        worst < 1e-12,
        format!("max |(∇·u)_j| = {} for unit-norm θ on {} modes", e(worst), unit.len()),
    )
}

pub fn isometry(f: &SpectralField) -> Check {
    let grid = QuadGrid::for_bandwidth(2 * f.basis().max_frequency_of(f.len()));
    let [gx, gy] = f.gradient_on(grid.xs(), grid.ys());
    let quad = grid.inner(&gx, &gx) + grid.inner(&gy, &gy);
    let spectral = f.sobolev_norm(1.0).powi(2);
    let rel = (quad - spectral).abs() / spectral;
    Check::assert(
        "spectral.isometry",
        rel < 1e-12,
        format!("‖f‖²_(1,D) = {spectral:.15e}, ∫|∇f|² = {quad:.15e}, relative gap {}", e(rel)),
    )
}

// ---------------------------------------------------------------------- heat

pub const ORDERS: [f64; 3] = [0.5, 1.0, 1.5];

pub fn subordination(f: &SpectralField) -> Result<Check> {
    let mut parts = Vec::new();
    let mut ok = true;
    for s in ORDERS {
        let rule = SubordinationRule::new(s)?;
        let sub = frac_via_subordination(f, &rule).field;
        let exact = f.frac_apply(s);
        let err = l2(sub.coeffs().iter().zip(exact.coeffs()).map(|(a, b)| a - b));
        let rel = err / f.sobolev_norm(s);
        ok &= rel < 1e-6;
        parts.push(format!("s={s}: {}", e(rel)));
    }
    Ok(Check::assert(
        "heat.subordination",
        ok,
        format!("‖Λ^s_sub f - Λ^s f‖₀ / ‖f‖_(s,D) on {} modes: {}", f.len(), parts.join(", ")),
    ))
}

pub fn cs_normalization() -> Result<Check> {
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for s in ORDERS {
        let rule = SubordinationRule::new(s)?;
        let r = rule.normalization_residual();
        worst = worst.max(r);
        parts.push(format!("c_{s} = {:.15e}", rule.cs()));
    }
    Ok(Check::assert(
        "heat.cs_normalization",
        worst < 1e-8,
        format!("max residual {}; {}", e(worst), parts.join(", ")),
    ))
}

/// Five base points (two near the boundary, one near a corner) each paired
/// with five offsets of length at most 0.5, so that `H(x,y,0.01)` stays
/// above the eigen sum's cancellation floor.
pub fn kernel_pairs() -> Vec<([f64; 2], [f64; 2])> {
    let base = [[0.3, 0.5], [1.0, 2.0], [PI / 2.0, PI / 2.0], [2.5, 0.7], [2.9, 2.8]];
    let offsets = [[0.0, 0.0], [0.1, 0.0], [0.0, -0.2], [-0.25, 0.25], [0.3, -0.4]];
    base.iter()
        .flat_map(|&x| {
            offsets.iter().map(move |&d| {
                let y = [(x[0] + d[0]).clamp(0.05, PI - 0.05), (x[1] + d[1]).clamp(0.05, PI - 0.05)];
                (x, y)
            })
        })
        .collect()
}

fn eigen_basis_for(times: &[f64]) -> Arc<EigenBasis> {
    let t_min = times.iter().copied().fold(f64::INFINITY, f64::min);
    Arc::new(EigenBasis::new(sqg_core::heat::eigen_modes_needed(t_min)))
}

pub fn kernel_symmetry(pairs: &[([f64; 2], [f64; 2])], times: &[f64]) -> Result<Check> {
    let basis = eigen_basis_for(times);
    let swapped: Vec<_> = pairs.iter().map(|&(x, y)| (y, x)).collect();
    let mut worst = 0.0f64;
    for &t in times {
        for method in [KernelMethod::ImageSeries, KernelMethod::EigenSum] {
            let a = kernel_eval(pairs, t, method, Some(&basis))?;
            let b = kernel_eval(&swapped, t, method, Some(&basis))?;
            for (u, v) in a.values.iter().zip(&b.values) {
                worst = worst.max((u.value - v.value).abs() / u.value.abs());
            }
        }
    }
    Ok(Check::assert(
        "heat.kernel_symmetry",
        worst <= 1e-13,
        format!("max |H(x,y) - H(y,x)| / H = {} over both methods", e(worst)),
    ))
}

/// Eigen sum against image series; returns the check and one row per pair and time.
pub fn kernel_agreement(pairs: &[([f64; 2], [f64; 2])], times: &[f64]) -> Result<(Check, Vec<BoundRecord>)> {
    let basis = eigen_basis_for(times);
    let per_time: Vec<Result<(Vec<f64>, usize, usize)>> = times
        .par_iter()
        .map(|&t| {
            let images = kernel_eval(pairs, t, KernelMethod::ImageSeries, None)?;
            let eigen = kernel_eval(pairs, t, KernelMethod::EigenSum, Some(&basis))?;
            let rel = images
                .values
                .iter()
                .zip(&eigen.values)
                .map(|(a, b)| (a.value - b.value).abs() / a.value.abs())
                .collect();
            Ok((rel, eigen.truncation, eigen.warnings.len()))
        })
        .collect();
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    let mut warnings = 0;
    let mut parts = Vec::new();
    for (&t, res) in times.iter().zip(per_time) {
        let (rel, modes, w) = res?;
        warnings += w;
        let m = rel.iter().copied().fold(0.0, f64::max);
        worst = worst.max(m);
        parts.push(format!("t={t}: {} ({modes} modes)", e(m)));
        for ((x, _), r) in pairs.iter().zip(rel) {
            rows.push(BoundRecord {
                quantity: "eigen_vs_images".into(),
                x: *x,
                t,
                measured: r,
                bound_form: "|H_eigen-H_images|/H_images".into(),
            });
        }
    }
    let check = Check::assert(
        "heat.kernel_agreement",
        worst < 1e-10 && warnings == 0,
        format!("{} pairs; {}; truncation warnings: {warnings}", pairs.len(), parts.join(", ")),
    );
    Ok((check, rows))
}

pub fn sub_markov(points: &[[f64; 2]], times: &[f64]) -> Check {
    let masses: Vec<f64> = times
        .par_iter()
        .flat_map_iter(|&t| {
            let nodes = 64 + (40.0 / t.sqrt()).ceil() as usize;
            points.iter().map(move |&x| kernel_mass(x, t, nodes))
        })
        .collect();
    let worst = masses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Check::assert(
        "heat.sub_markov",
        worst <= 1.0 + 1e-10,
        format!("max ∫H(x,y,t)dy = {worst:.15} over {} points × {} times", points.len(), times.len()),
    )
}

/// Interior sample points `(iπ/n, jπ/n)`, `0 < i, j < n`.
pub fn lattice(n: usize) -> Vec<[f64; 2]> {
    (1..n)
        .flat_map(|i| (1..n).map(move |j| [PI * i as f64 / n as f64, PI * j as f64 / n as f64]))
        .collect()
}

pub const BOUND_K: [f64; 3] = [4.0, 1.0, 8.0];

/// Relative growth of the measured gradient constant allowed under one lattice refinement.
pub const GRADIENT_STABILITY: f64 = 0.2;

/// Gradient envelope on a 12-lattice and its 24-refinement (nested), 13 dyadic times from 1e-3.
pub fn gradient_bound() -> (Check, Vec<Check>, KernelBoundReport) {
    let times: Vec<f64> = (0..13).map(|k| 1e-3 * 2f64.powi(k)).collect();
    let [ku, kl, kg] = BOUND_K;
    let (coarse, fine) = rayon::join(
        || measure_kernel_bounds(&lattice(12), &times, ku, kl, kg),
        || measure_kernel_bounds(&lattice(24), &times, ku, kl, kg),
    );
    let growth = fine.gradient / coarse.gradient - 1.0;
    let ok = fine.gradient.is_finite() && coarse.gradient > 0.0 && growth <= GRADIENT_STABILITY;
    let check = Check::assert(
        "heat.gradient_bound_stable",
        ok,
        format!(
            "C(K={kg}) = {:.6} on 12-lattice, {:.6} on 24-lattice (growth {:.1}%)",
            coarse.gradient,
            fine.gradient,
            100.0 * growth
        ),
    );
    let infos = vec![
        Check::info("heat.upper_constant", format!("C(K={ku}) = {:.6}", fine.upper)),
        Check::info("heat.lower_constant", format!("c(k={kl}) = {}", e(fine.lower))),
    ];
    (check, infos, fine)
}

/// `∫₀^∞ t^{-1-m/2}e^{-p²/(Kt)}dt` against `Γ(m/2)(K/p²)^{m/2}` on a small `(m, p, K)` grid.
pub fn time_integral() -> (Check, Vec<Vec<String>>) {
    let rule = TimeRule::standard();
    let gamma_half = [PI.sqrt(), 1.0, 0.5 * PI.sqrt(), 1.0];
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for (i, g) in gamma_half.iter().enumerate() {
        let m = (i + 1) as f64;
        for p in [0.25, 1.0, 3.0] {
            for k in [1.0, 4.0] {
                let q = gaussian_time_integral(&rule, m, p, k);
                let constant = g * k.powf(0.5 * m);
                let exact = constant * p.powf(-m);
                worst = worst.max((q - exact).abs() / exact);
                rows.push(vec![m.to_string(), p.to_string(), k.to_string(), format!("{q:?}"), format!("{constant:?}")]);
            }
        }
    }
    let check = Check::assert(
        "heat.time_integral",
        worst < 1e-12,
        format!("quadrature vs C_(K,m) p^(-m) over m ≤ 4, 3 p, 2 K: max relative {}", e(worst)),
    );
    (check, rows)
}

// ---------------------------------------------------------------- commutator

/// Relative identity residuals at or below this are converged to round-off
/// and no longer required to decrease.
pub const IDENTITY_FLOOR: f64 = 1e-14;

pub struct IdentityStudy {
    /// Per seed: relative residual at `2m, 4m, 8m`.
    pub relative: Vec<[f64; 3]>,
    pub rows: Vec<ReportRow>,
}

pub fn identity_study(m: usize, seeds: usize, seed0: u64, beta: f64, phi: &TestFunction) -> Result<IdentityStudy> {
    let levels = [2 * m, 4 * m, 8 * m];
    let basis = Arc::new(EigenBasis::new(8 * m));
    let per_seed: Vec<Result<Vec<_>>> = (0..seeds as u64)
        .into_par_iter()
        .map(|i| {
            let psi = random_spectrum(&basis, m, seed0.wrapping_add(i), beta);
            levels.iter().map(|&big| commutator_identity_residual(&psi, phi, big)).collect()
        })
        .collect();
    let mut relative = Vec::new();
    let mut rows = Vec::new();
    for (i, res) in per_seed.into_iter().enumerate() {
        let res = res?;
        relative.push([res[0].relative(), res[1].relative(), res[2].relative()]);
        for (r, &big) in res.iter().zip(&levels) {
            rows.push(ReportRow {
                tag: CommutatorTag::NonlinearityIdentity.name(),
                input_id: format!("seed={}", seed0.wrapping_add(i as u64)),
                oversampling: big,
                measured: r.residual,
                normalizer: r.scale,
                ratio: r.relative(),
            });
        }
    }
    Ok(IdentityStudy { relative, rows })
}

impl IdentityStudy {
    pub fn decreasing(&self) -> Check {
        let step = |a: f64, b: f64| b < a || b <= IDENTITY_FLOOR;
        let ok = self.relative.iter().all(|r| step(r[0], r[1]) && step(r[1], r[2]));
        let floored = self.relative.iter().filter(|r| r[1] <= IDENTITY_FLOOR).count();
        let worst = |k: usize| self.relative.iter().map(|r| r[k]).fold(0.0, f64::max);
        Check::assert(
            "commutator.identity_decreasing",
            ok,
            format!(
                "{} seeds; worst relative residual at 2m/4m/8m: {} / {} / {}; {floored} at the {} round-off floor from 4m",
                self.relative.len(),
                e(worst(0)),
                e(worst(1)),
                e(worst(2)),
                e(IDENTITY_FLOOR)
            ),
        )
    }

    pub fn tolerance(&self) -> Check {
        let worst = self.relative.iter().map(|r| r[2]).fold(0.0, f64::max);
        Check::assert(
            "commutator.identity_tolerance",
            worst < 1e-6,
            format!("max relative residual at M = 8m: {}", e(worst)),
        )
    }
}

pub struct BoundRatio {
    pub ratio_4m: f64,
    pub ratio_8m: f64,
    pub scaled_psi: f64,
    pub scaled_chi: f64,
    pub warnings: usize,
    pub rows: Vec<ReportRow>,
}

/// `[Λ, χ]ψ` ratios at `M = 4m, 8m`, plus `2ψ` and `2χ` at `8m`; `psi` lives on at least `8m` modes.
pub fn bound_ratio(psi: &SpectralField, chi: &TestFunction, m: usize, p: f64) -> Result<BoundRatio> {
    let cases: Vec<(&str, SpectralField, TestFunction, usize)> = vec![
        ("psi", psi.clone(), *chi, 4 * m),
        ("psi", psi.clone(), *chi, 8 * m),
        ("2psi", psi.scaled(2.0), *chi, 8 * m),
        ("2chi", psi.clone(), chi.scaled(2.0), 8 * m),
    ];
    let reports: Vec<Result<_>> = cases
        .par_iter()
        .map(|(_, f, c, big)| commutator_lambda_chi(c, f, *big, p).map(|(_, r)| r))
        .collect();
    let mut rows = Vec::new();
    let mut ratios = Vec::new();
    let mut warnings = 0;
    for ((id, _, _, big), r) in cases.iter().zip(reports) {
        let r = r?;
        warnings += r.warnings.len();
        ratios.push(r.ratio);
        rows.push(ReportRow {
            tag: r.tag.name(),
            input_id: id.to_string(),
            oversampling: *big,
            measured: r.measured,
            normalizer: r.normalizer,
            ratio: r.ratio,
        });
    }
    Ok(BoundRatio {
        ratio_4m: ratios[0],
        ratio_8m: ratios[1],
        scaled_psi: ratios[2],
        scaled_chi: ratios[3],
        warnings,
        rows,
    })
}

impl BoundRatio {
    pub fn homogeneity(&self) -> Check {
        let r = self.ratio_8m;
        let d = (self.scaled_psi - r).abs().max((self.scaled_chi - r).abs()) / r;
        Check::assert(
            "commutator.bound_ratio_homogeneity",
            d <= 1e-12,
            format!("ratio {r:.12e}; max relative change under ψ→2ψ, χ→2χ: {}", e(d)),
        )
    }

    pub fn stability(&self) -> Check {
        let change = (self.ratio_8m - self.ratio_4m).abs() / self.ratio_8m;
        Check::assert(
            "commutator.bound_ratio_stability",
            change < 0.05,
            format!(
                "ratio {:.6} at M=4m, {:.6} at M=8m: change {:.2}% (tail warnings: {})",
                self.ratio_4m,
                self.ratio_8m,
                100.0 * change,
                self.warnings
            ),
        )
    }
}

pub struct DistanceLadder {
    pub rows: Vec<FracGradRow>,
}

pub fn distance_ladder(psi: &SpectralField, s: f64, p: f64, rungs: usize) -> Result<DistanceLadder> {
    let points = diagonal_ladder(rungs);
    let per_point: Vec<Result<Vec<FracGradRow>>> =
        points.par_iter().map(|x| commutator_frac_grad(psi, s, &[*x], p)).collect();
    let mut rows = Vec::new();
    for r in per_point {
        rows.extend(r?);
    }
    Ok(DistanceLadder { rows })
}

impl DistanceLadder {
    pub fn spread(&self) -> f64 {
        let (lo, hi) = self
            .rows
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.normalized), hi.max(r.normalized)));
        hi / lo
    }

    /// Largest normalized value relative to the first rung.
    pub fn growth(&self) -> f64 {
        let hi = self.rows.iter().map(|r| r.normalized).fold(0.0, f64::max);
        hi / self.rows[0].normalized
    }

    pub fn bounded(&self) -> Check {
        let values: Vec<String> = self.rows.iter().map(|r| format!("{:.4e}", r.normalized)).collect();
        let spread = self.spread();
        Check::assert(
            "commutator.distance_ladder_bounded",
            spread.is_finite() && spread < 10.0,
            format!("normalized values [{}]; max/min = {:.3e}", values.join(", "), spread),
        )
    }

    pub fn report_rows(&self) -> Vec<ReportRow> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| ReportRow {
                tag: CommutatorTag::FracsGrad.name(),
                input_id: format!("rung={i}"),
                oversampling: 0,
                measured: r.magnitude,
                normalizer: if r.normalized > 0.0 { r.magnitude / r.normalized } else { 0.0 },
                ratio: r.normalized,
            })
            .collect()
    }
}

/// Deep-interior points for the kernel/spectral comparison.
pub const CROSS_POINTS: [[f64; 2]; 3] = [[1.2, 1.4], [1.0, 1.7], [1.5, 1.1]];
pub const SPECTRAL_DELTA: f64 = 1e-4;

/// Regularization time for the spectral route: the extrapolated error scales
/// like `(δλ)³` over the modes of `ψ`, so `δ` shrinks with its top eigenvalue.
pub fn spectral_delta(psi: &SpectralField) -> f64 {
    let top = psi.coeffs().iter().rposition(|&c| c != 0.0).unwrap_or(0);
    SPECTRAL_DELTA.min(5e-3 / psi.basis().eigenvalue(top))
}

pub fn cross_route(psi: &SpectralField, s: f64) -> Result<Check> {
    let rule = SubordinationRule::new(s)?;
    let delta = spectral_delta(psi);
    let results: Vec<Result<f64>> = CROSS_POINTS
        .par_iter()
        .map(|&x| {
            let kernel = frac_grad_kernel(psi, &rule, x)?.value;
            let spectral = frac_grad_spectral(psi, s, x, delta);
            let scale = spectral[0].hypot(spectral[1]);
            Ok((kernel[0] - spectral[0]).hypot(kernel[1] - spectral[1]) / scale)
        })
        .collect();
    let mut worst = 0.0f64;
    for r in results {
        worst = worst.max(r?);
    }
    Ok(Check::assert(
        "commutator.cross_route",
        worst < 1e-4,
        format!(
            "kernel vs regularized spectral [Λ^s,∇]ψ (δ = {}) at {} interior points: max relative {}",
            e(delta),
            CROSS_POINTS.len(),
            e(worst)
        ),
    ))
}

// ------------------------------------------------------------------ galerkin

pub fn tensor_structure(tensor: &CouplingTensor, label: &str, tol: f64) -> Check {
    let d = tensor.structure_defects();
    let ok = if tol == 0.0 { d.max() == 0.0 } else { d.max() <= tol };
    let bound = if tol == 0.0 { "exact".to_string() } else { format!("≤ {}", e(tol)) };
    Check::assert(
        format!("galerkin.tensor_structure.{label}"),
        ok,
        format!(
            "m = {}, {} entries: antisymmetry {}, diagonal {}, total antisymmetry {} ({bound})",
            tensor.dim(),
            tensor.nonzeros(),
            e(d.antisymmetry),
            e(d.diagonal),
            e(d.total_antisymmetry)
        ),
    )
}

pub fn cross_method(closed: &CouplingTensor, quadrature: &CouplingTensor) -> Check {
    let d = closed.max_abs_difference(quadrature);
    Check::assert(
        "galerkin.cross_method",
        d <= 1e-12,
        format!("max |γ_closed - γ_quadrature| = {} at m = {}", e(d), closed.dim()),
    )
}

pub fn permutation_determinism(basis: &Arc<EigenBasis>, m: usize) -> Check {
    let a = CouplingTensor::closed_form_ordered(basis.clone(), m, TriadOrder::Forward);
    let b = CouplingTensor::closed_form_ordered(basis.clone(), m, TriadOrder::Reverse);
    Check::assert(
        "galerkin.permutation_determinism",
        a == b,
        format!("forward and reverse triad enumeration at m = {m} give identical tensors: {}", a == b),
    )
}

pub fn rhs_cross_check(tensor: &CouplingTensor, seed: u64, states: u64) -> Check {
    let basis = tensor.basis().clone();
    let m = tensor.dim();
    let worst = (0..states)
        .into_par_iter()
        .map(|i| {
            let theta = random_spectrum(&basis, m, seed.wrapping_add(i), 1.0);
            let a = tensor.rhs(theta.coeffs());
            let b = rhs_quadrature(&theta);
            l2(a.iter().zip(b.coeffs()).map(|(x, y)| x - y)) / l2(b.coeffs().iter().copied())
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max);
    Check::assert(
        "galerkin.rhs_cross_check",
        worst < 1e-10,
        format!("tensor vs quadrature rhs, {states} random states at m = {m}: max relative {}", e(worst)),
    )
}

pub fn conservation(record: &TrajectoryRecord, integrator: Integrator) -> Check {
    let (de, dh) = (record.energy_drift(), record.hamiltonian_drift());
    Check::assert(
        "galerkin.conservation",
        de < 1e-10 && dh < 1e-10,
        format!(
            "{} m = {}, T = {}: relative drift E {}, H {}",
            integrator.name(),
            record.m,
            record.times.last().copied().unwrap_or(0.0),
            e(de),
            e(dh)
        ),
    )
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub struct Rk4Order {
    /// `(dt, energy drift, hamiltonian drift)`.
    pub rows: Vec<(f64, f64, f64)>,
    pub slope: f64,
}

pub fn rk4_order(theta0: &SpectralField, m: usize, horizon: f64, dts: &[f64]) -> Result<Rk4Order> {
    let solver = Galerkin::new(CouplingTensor::closed_form(theta0.basis().clone(), m), Integrator::Rk4);
    let runs: Vec<Result<TrajectoryRecord>> = dts
        .par_iter()
        .map(|&dt| solver.run(theta0, horizon, dt, 1, false))
        .collect();
    let mut rows = Vec::new();
    for (&dt, r) in dts.iter().zip(runs) {
        let r = r?;
        rows.push((dt, r.energy_drift(), r.hamiltonian_drift()));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = rows.iter().map(|r| (r.0, r.1)).unzip();
    Ok(Rk4Order {
        slope: loglog_slope(&x, &y),
        rows,
    })
}

impl Rk4Order {
    pub fn check(&self) -> Check {
        let drifts: Vec<String> = self.rows.iter().map(|r| format!("dt={}: {}", r.0, e(r.1))).collect();
        Check::assert(
            "galerkin.rk4_order",
            (self.slope - 4.0).abs() <= 0.3,
            format!("energy drift {}; log-log slope {:.3}", drifts.join(", "), self.slope),
        )
    }
}

// --------------------------------------------------------------- convergence

pub struct Decay {
    pub tables: Vec<DecayTable>,
    pub envelope: Vec<EnvelopeWindow>,
    pub envelope_modes: usize,
}

pub fn decay(phi: &TestFunction, ladder: &[usize], envelope_modes: usize) -> Result<Decay> {
    let basis = Arc::new(EigenBasis::new(envelope_modes.max(*ladder.last().expect("nonempty ladder"))));
    let tables = (0..=2u32)
        .into_par_iter()
        .map(|k| projection_decay(phi, k, ladder, &basis, 3))
        .collect::<Result<Vec<_>>>()?;
    let coeffs = test_function_coefficients(phi, &basis, envelope_modes);
    Ok(Decay {
        tables,
        envelope: dyadic_envelope(&coeffs, 3),
        envelope_modes,
    })
}

impl Decay {
    pub fn strictly_decreasing(&self) -> Check {
        let t = &self.tables[0];
        let errors: Vec<String> = t.rows.iter().map(|r| format!("m={}: {}", r.m, e(r.error))).collect();
        Check::assert(
            "convergence.projection_decay",
            t.strictly_decreasing(),
            format!("k = 0 errors {}", errors.join(", ")),
        )
    }

    pub fn coefficient_decay(&self) -> Check {
        let peak = self
            .envelope
            .iter()
            .fold((0.0, 0.0f64), |best, w| if w.max > best.1 { (w.lambda_lo, w.max) } else { best });
        let last = self.envelope.last().map_or(0.0, |w| w.max);
        Check::assert(
            "convergence.coefficient_decay",
            envelope_peaks_inside(&self.envelope),
            format!(
                "max_j |φ_j| λ_j³ over dyadic λ-windows ({} modes): peak {:.4e} in window λ ≥ {}, last window {:.4e}",
                self.envelope_modes, peak.1, peak.0, last
            ),
        )
    }

    pub fn infos(&self) -> Vec<Check> {
        let mut out = Vec::new();
        for t in &self.tables[1..] {
            let errors: Vec<String> = t.rows.iter().map(|r| format!("m={}: {}", r.m, e(r.error))).collect();
            out.push(Check::info(
                format!("convergence.projection_decay_k{}", t.k),
                format!("{} (strictly decreasing: {})", errors.join(", "), t.strictly_decreasing()),
            ));
        }
        for t in &self.tables {
            out.push(Check::info(
                format!("convergence.superalgebraic_k{}", t.k),
                format!("error·m^α decreasing for α = 1..4: {:?}", t.superalgebraic()),
            ));
            for w in &t.warnings {
                out.push(Check::info(format!("convergence.warning_k{}", t.k), w.to_string()));
            }
        }
        out
    }
}

pub struct WeakStudy {
    /// `(dt, residual)` for `dt` and `dt/2` at fixed stride.
    pub residuals: [(f64, f64); 2],
    /// Terms of the finer run for `φ` and for `3φ`.
    pub terms: [WeakResidual; 2],
    pub gap: ProjectionGap,
}

pub fn weak_study(
    theta0: &SpectralField,
    m: usize,
    horizon: f64,
    dt: f64,
    stride: usize,
    solver: SolverSettings,
    phi: &TestFunction,
) -> Result<WeakStudy> {
    let basis = theta0.basis().clone();
    let galerkin = Galerkin::new(CouplingTensor::closed_form(basis.clone(), m), Integrator::ImplicitMidpoint).with_solver(solver);
    let theta0 = theta0.project(m);
    let runs: Vec<Result<TrajectoryRecord>> = [dt, 0.5 * dt]
        .par_iter()
        .map(|&h| galerkin.run(&theta0, horizon, h, stride, true))
        .collect();
    let mut recs = Vec::new();
    for r in runs {
        recs.push(r?);
    }
    let r0 = weak_residual(&basis, &recs[0], phi, horizon)?.residual;
    let fine = weak_residual(&basis, &recs[1], phi, horizon)?;
    let scaled = weak_residual(&basis, &recs[1], &phi.scaled(3.0), horizon)?;
    let r1 = fine.residual;
    let gap = projection_gap(&basis, &recs[1], phi, horizon)?;
    Ok(WeakStudy {
        residuals: [(dt, r0), (0.5 * dt, r1)],
        terms: [fine, scaled],
        gap,
    })
}

impl WeakStudy {
    pub fn refines(&self) -> Check {
        let [(d0, r0), (d1, r1)] = self.residuals;
        Check::assert(
            "convergence.weak_residual_refines",
            r1 < r0,
            format!("residual {} at dt={d0}, {} at dt={d1} (snapshot density doubled)", e(r0), e(r1)),
        )
    }

    pub fn linear(&self) -> Check {
        // the residual is a near-cancellation, so round-off is measured on the terms
        let [one, three] = &self.terms;
        let signed = |w: &WeakResidual| w.time_term + w.transport_term;
        let scale = 3.0 * (one.time_term.abs() + one.transport_term.abs());
        let d = (signed(three) - 3.0 * signed(one)).abs();
        Check::assert(
            "convergence.weak_residual_linear",
            d <= 1e-12 * scale.max(f64::MIN_POSITIVE),
            format!(
                "residual(3φ) = {:.15e}, 3·residual(φ) = {:.15e}; defect {} relative to term scale {}",
                three.residual,
                3.0 * one.residual,
                e(d / scale),
                e(scale)
            ),
        )
    }

    pub fn gap_info(&self) -> Check {
        let g = &self.gap;
        Check::info(
            "convergence.projection_gap",
            format!(
                "|transport(P_mφ) - transport(φ)| = {} ≤ ‖∇(I-P_m)φ‖_∞·∫‖θu‖_L¹ = {}: {}",
                e(g.difference),
                e(g.bound),
                g.within_bound()
            ),
        )
    }
}

pub fn hamiltonian_check(study: &ConvergenceStudy) -> Check {
    let rows = hamiltonian_constancy(study);
    let worst = rows.iter().map(|r| r.drift).fold(0.0, f64::max);
    let detail = format!(
        "{} ladder {:?}: max_t |H_m(t)-H_m(0)|/H_m(0) ≤ {}",
        study.config.integrator.name(),
        study.config.ladder,
        e(worst)
    );
    if study.config.integrator == Integrator::ImplicitMidpoint {
        Check::assert("convergence.hamiltonian_constancy", worst < 1e-10, detail)
    } else {
        Check::info("convergence.hamiltonian_constancy", detail)
    }
}

/// Padded-space differences against differences of merged `(index → coefficient)` maps.
pub fn padding_consistency(study: &ConvergenceStudy) -> Check {
    let eps = 1.0;
    let modes = study.basis.modes();
    let mut pairs = 0;
    let mut identical = true;
    for w in study.runs.windows(2) {
        let (a, b) = (w[0].final_state(), w[1].final_state());
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        for (j, c) in a.iter().enumerate() {
            *merged.entry(j).or_insert(0.0) += c;
        }
        for (j, c) in b.iter().enumerate() {
            *merged.entry(j).or_insert(0.0) -= c;
        }
        let from_map = merged
            .iter()
            .map(|(&j, d)| modes[j].eigenvalue().powf(-eps) * d * d)
            .sum::<f64>()
            .sqrt();
        identical &= from_map.to_bits() == psi_difference(&study.basis, a, b, eps).to_bits();
        pairs += 1;
    }
    Check::assert(
        "convergence.padding_consistency",
        identical,
        format!("{pairs} consecutive ladder pairs: padded and merged-map norms bit-identical: {identical}"),
    )
}

/// Rerun of the smallest ladder entry and recomputation of the tables.
pub fn diagnostics_deterministic(study: &ConvergenceStudy) -> Result<Check> {
    let rerun = study.config.run(&study.basis, study.runs[0].m)?;
    let same_run = rerun == study.runs[0];
    let cauchy = cauchy_diagnostic(study, 1.0)?;
    let same_tables = cauchy == cauchy_diagnostic(study, 1.0)? && hamiltonian_constancy(study) == hamiltonian_constancy(study);
    Ok(Check::assert(
        "convergence.deterministic",
        same_run && same_tables,
        format!("rerun of m = {} identical: {same_run}; recomputed tables identical: {same_tables}", study.runs[0].m),
    ))
}
