//! Finite-`m` diagnostics: projection error decay of test functions, weak-form
//! residuals of Galerkin trajectories, Cauchy tables across an `m` ladder and
//! Hamiltonian monitoring.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::bump::{time_bump, TestFunction};
use crate::eigenbasis::EigenBasis;
use crate::error::{Error, Result, Warning};
use crate::galerkin::{
    hamiltonian, random_spectrum, CouplingTensor, Galerkin, Integrator, SolverSettings, TrajectoryRecord,
};
use crate::grid::QuadGrid;
use crate::spectral::{analyze_fn, SpectralField};

/// Relative projection errors below this are dominated by the cancellation in
/// `‖φ‖² - ‖P_mφ‖²`.
pub const PROJECTION_FLOOR: f64 = 1e-7;

/// Coefficients of a test function on the first `count` modes.
pub fn test_function_coefficients(phi: &TestFunction, basis: &Arc<EigenBasis>, count: usize) -> SpectralField {
    let grid = phi.support_grid_for(2 * basis.max_frequency_of(count));
    analyze_fn(&grid, basis.clone(), count, |x, y| phi.value(x, y)).field
}

/// `‖φ‖²_{k,D} = Σ λ_j^k φ_j²` from quadrature of `φ`, `∇φ` or `Δφ`.
pub fn sobolev_norm_squared(phi: &TestFunction, k: u32) -> Result<f64> {
    let grid = phi.support_grid_for(0);
    let density = |x: f64, y: f64| match k {
        0 => phi.value(x, y).powi(2),
        1 => {
            let g = phi.gradient(x, y);
            g[0] * g[0] + g[1] * g[1]
        }
        _ => {
            let h = phi.hessian(x, y);
            (h[0] + h[2]).powi(2)
        }
    };
    if k > 2 {
        return Err(Error::InvalidArgument("Sobolev order must be 0, 1 or 2"));
    }
    Ok(grid.integrate(&grid.sample(density)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRow {
    pub m: usize,
    /// `‖(I - P_m)φ‖_{k,D}`.
    pub error: f64,
    pub relative: f64,
    /// `max_{j<m} |φ_j| λ_j^N`.
    pub weighted_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayTable {
    pub k: u32,
    pub weight_power: u32,
    pub rows: Vec<DecayRow>,
    pub warnings: Vec<Warning>,
}

impl DecayTable {
    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].error < w[0].error)
    }

    /// Whether `error·m^α` decreases between consecutive rungs, for `α = 1..=4`.
    pub fn superalgebraic(&self) -> [bool; 4] {
        core::array::from_fn(|i| {
            let alpha = (i + 1) as f64;
            self.rows
                .windows(2)
                .all(|w| w[1].error * (w[1].m as f64).powf(alpha) < w[0].error * (w[0].m as f64).powf(alpha))
        })
    }

    /// Position of the largest `|φ_j| λ_j^N` among the first `m_max` modes.
    pub fn weighted_argmax(&self, coeffs: &SpectralField) -> usize {
        weighted_profile(coeffs, self.weight_power)
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
            .0
    }
}

/// `|φ_j| λ_j^N` for every analyzed mode.
pub fn weighted_profile(coeffs: &SpectralField, power: u32) -> Vec<f64> {
    let modes = coeffs.basis().modes();
    coeffs
        .coeffs()
        .iter()
        .zip(modes)
        .map(|(c, m)| c.abs() * m.eigenvalue().powi(power as i32))
        .collect()
}

/// One dyadic eigenvalue window `[λ_lo, 2λ_lo)` of a weighted profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeWindow {
    pub lambda_lo: f64,
    pub max: f64,
}

/// Window maxima of `|φ_j| λ_j^N` over dyadic eigenvalue windows, starting at
/// `λ = 2`. Windows not fully covered by the analyzed modes are dropped.
pub fn dyadic_envelope(coeffs: &SpectralField, power: u32) -> Vec<EnvelopeWindow> {
    let profile = weighted_profile(coeffs, power);
    let modes = coeffs.basis().modes();
    let Some(last) = modes[..profile.len()].last() else {
        return Vec::new();
    };
    // every mode below the first eigenvalue not analyzed is present
    let covered = match modes.get(profile.len()) {
        Some(next) => next.eigenvalue(),
        None => last.eigenvalue(),
    };
    let mut windows = Vec::new();
    let mut lo = 2.0;
    while 2.0 * lo <= covered {
        let max = profile
            .iter()
            .zip(modes)
            .filter(|(_, w)| w.eigenvalue() >= lo && w.eigenvalue() < 2.0 * lo)
            .fold(0.0f64, |a, (&v, _)| a.max(v));
        windows.push(EnvelopeWindow { lambda_lo: lo, max });
        lo *= 2.0;
    }
    windows
}

/// The envelope turns over: its largest window lies strictly before the last.
pub fn envelope_peaks_inside(windows: &[EnvelopeWindow]) -> bool {
    let peak = windows
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, w)| if w.max > bv { (i, w.max) } else { (bi, bv) })
        .0;
    windows.len() >= 2 && peak + 1 < windows.len()
}

/// `‖(I - P_m)φ‖_{k,D}` along a ladder of `m`.
///
/// The error is `(‖φ‖²_{k,D} - Σ_{j<m} λ_j^k φ_j²)^{1/2}` with the full norm
/// from quadrature of `φ`, `∇φ` (`k = 1`) or `Δφ` (`k = 2`, the `D(Λ²)` norm,
/// which coincides with `H²` for compactly supported `φ`), so no oversampled
/// tail is involved.
pub fn projection_decay(
    phi: &TestFunction,
    k: u32,
    ladder: &[usize],
    basis: &Arc<EigenBasis>,
    weight_power: u32,
) -> Result<DecayTable> {
    if ladder.is_empty() || ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("ladder must be nonempty and strictly increasing"));
    }
    let top = *ladder.last().expect("nonempty");
    if top > basis.len() {
        return Err(Error::DimensionMismatch {
            expected: top,
            got: basis.len(),
        });
    }
    let total = sobolev_norm_squared(phi, k)?;
    let coeffs = test_function_coefficients(phi, basis, top);
    let modes = basis.modes();
    let weighted = weighted_profile(&coeffs, weight_power);
    let mut rows = Vec::with_capacity(ladder.len());
    let mut warnings = Vec::new();
    for &m in ladder {
        let kept: f64 = coeffs.coeffs()[..m]
            .iter()
            .zip(modes)
            .map(|(c, w)| w.eigenvalue().powi(k as i32) * c * c)
            .sum();
        let error = (total - kept).max(0.0).sqrt();
        let relative = if total > 0.0 { error / total.sqrt() } else { 0.0 };
        if total > 0.0 && relative < PROJECTION_FLOOR {
            warnings.push(Warning::PrecisionFloor { m, relative });
        }
        let weighted_max = weighted[..m].iter().fold(0.0f64, |a, &b| a.max(b));
        rows.push(DecayRow {
            m,
            error,
            relative,
            weighted_max,
        });
    }
    Ok(DecayTable {
        k,
        weight_power,
        rows,
        warnings,
    })
}

/// Composite Simpson rule on uniformly spaced samples; the last three
/// intervals use the 3/8 rule when the interval count is odd.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len().saturating_sub(1);
    match n {
        0 => 0.0,
        1 => 0.5 * h * (values[0] + values[1]),
        2 => h / 3.0 * (values[0] + 4.0 * values[1] + values[2]),
        _ => {
            let even = if n % 2 == 0 { n } else { n - 3 };
            let mut total = 0.0;
            for i in (0..even).step_by(2) {
                total += values[i] + 4.0 * values[i + 1] + values[i + 2];
            }
            total *= h / 3.0;
            if n % 2 == 1 {
                let v = &values[even..];
                total += 3.0 * h / 8.0 * (v[0] + 3.0 * v[1] + 3.0 * v[2] + v[3]);
            }
            total
        }
    }
}

fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::InvalidArgument("need at least two snapshots"));
    }
    let h = times[1] - times[0];
    if times.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h) {
        return Err(Error::InvalidArgument("snapshots must be uniformly spaced"));
    }
    Ok(h)
}

fn snapshot_fields(basis: &Arc<EigenBasis>, record: &TrajectoryRecord) -> Result<Vec<SpectralField>> {
    if record.snapshots.len() != record.times.len() {
        return Err(Error::InvalidArgument("trajectory was recorded without snapshots"));
    }
    record
        .snapshots
        .iter()
        .map(|c| SpectralField::new(basis.clone(), c.clone()))
        .collect()
}

/// Space–time weak-form residual of a Galerkin trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakResidual {
    /// `∫₀ᵀ σ'(t) ∫_Ω θ_m φ dx dt`.
    pub time_term: f64,
    /// `∫₀ᵀ σ(t) ∫_Ω θ_m u_m·∇(P_mφ) dx dt`.
    pub transport_term: f64,
    pub residual: f64,
}

/// `|∫∫ θ_m ∂ₜ(σφ) + ∫∫ θ_m u_m·∇P_m(σφ)|` for `σ` the time bump on `(0, T)`.
///
/// Each snapshot is paired with `φ` through its coefficients and with
/// `∇P_mφ` on a grid exact for triple products; the time integrals use
/// Simpson's rule over the snapshots.
pub fn weak_residual(
    basis: &Arc<EigenBasis>,
    record: &TrajectoryRecord,
    phi: &TestFunction,
    horizon: f64,
) -> Result<WeakResidual> {
    let h = uniform_step(&record.times)?;
    let fields = snapshot_fields(basis, record)?;
    let m = record.m;
    let phi_m = test_function_coefficients(phi, basis, m);
    let grid = QuadGrid::for_bandwidth(3 * basis.max_frequency_of(m));
    let (xs, ys) = (grid.xs(), grid.ys());
    let [gx, gy] = phi_m.gradient_on(xs, ys);
    let mut time_samples = Vec::with_capacity(fields.len());
    let mut transport_samples = Vec::with_capacity(fields.len());
    for (theta, &t) in fields.iter().zip(&record.times) {
        let (sigma, dsigma) = time_bump(t, horizon);
        time_samples.push(dsigma * theta.dot(&phi_m));
        let th = theta.synthesize(xs, ys);
        let u = theta.velocity_on(xs, ys);
        let values: Vec<f64> = (0..th.values().len())
            .map(|i| th.values()[i] * (u.ux.values()[i] * gx.values()[i] + u.uy.values()[i] * gy.values()[i]))
            .collect();
        transport_samples.push(sigma * grid.integrate_values(&values));
    }
    let time_term = simpson(&time_samples, h);
    let transport_term = simpson(&transport_samples, h);
    Ok(WeakResidual {
        time_term,
        transport_term,
        residual: (time_term + transport_term).abs(),
    })
}

/// Effect of replacing `P_mφ` by `φ` in the transport term, with its bound
/// `‖∇(I - P_m)φ‖_∞ ∫₀ᵀ ‖θ_m u_m‖_{L¹} dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionGap {
    pub projected: f64,
    pub unprojected: f64,
    pub difference: f64,
    pub gradient_gap: f64,
    pub flux_l1: f64,
    pub bound: f64,
}

impl ProjectionGap {
    pub fn within_bound(&self) -> bool {
        self.difference <= self.bound
    }
}

/// Samples per axis for the sup norm of `∇(I - P_m)φ`.
pub const SUP_SAMPLES: usize = 401;

pub fn projection_gap(
    basis: &Arc<EigenBasis>,
    record: &TrajectoryRecord,
    phi: &TestFunction,
    horizon: f64,
) -> Result<ProjectionGap> {
    let h = uniform_step(&record.times)?;
    let fields = snapshot_fields(basis, record)?;
    let m = record.m;
    let projected = weak_residual(basis, record, phi, horizon)?.transport_term;

    let support = phi.support_grid_for(2 * basis.max_frequency_of(m));
    let mut unprojected_samples = Vec::with_capacity(fields.len());
    let mut flux_samples = Vec::with_capacity(fields.len());
    let l1_grid = QuadGrid::for_bandwidth(6 * basis.max_frequency_of(m) + 32);
    let (xs, ys) = (l1_grid.xs(), l1_grid.ys());
    for (theta, &t) in fields.iter().zip(&record.times) {
        let (sigma, _) = time_bump(t, horizon);
        unprojected_samples.push(sigma * crate::commutator::nonlinearity_weak_form_on(theta, phi, &support));
        let th = theta.synthesize(xs, ys);
        let u = theta.velocity_on(xs, ys);
        let flux = th.values().iter().enumerate().map(|(i, v)| (v * u.ux.values()[i]).hypot(v * u.uy.values()[i]));
        let flux: Vec<f64> = flux.collect();
        flux_samples.push(l1_grid.integrate_values(&flux));
    }
    let unprojected = simpson(&unprojected_samples, h);
    let flux_l1 = simpson(&flux_samples, h);

    let phi_m = test_function_coefficients(phi, basis, m);
    let pts: Vec<f64> = (0..SUP_SAMPLES).map(|i| PI * i as f64 / (SUP_SAMPLES - 1) as f64).collect();
    let [gx, gy] = phi_m.gradient_on(&pts, &pts);
    let mut gradient_gap = 0.0f64;
    for (i, (x, y, _)) in gx.points().enumerate() {
        let g = phi.gradient(x, y);
        gradient_gap = gradient_gap.max((g[0] - gx.values()[i]).hypot(g[1] - gy.values()[i]));
    }
    Ok(ProjectionGap {
        projected,
        unprojected,
        difference: (projected - unprojected).abs(),
        gradient_gap,
        flux_l1,
        bound: gradient_gap * flux_l1,
    })
}

/// Shared recipe for a family of Galerkin runs.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub ladder: Vec<usize>,
    pub seed: u64,
    pub beta: f64,
    pub horizon: f64,
    pub dt: f64,
    pub stride: usize,
    pub integrator: Integrator,
    pub solver: SolverSettings,
    /// Number of modes carrying the common initial datum `θ₀`.
    pub reference: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            ladder: alloc::vec![8, 16, 32, 64],
            seed: 42,
            beta: 1.0,
            horizon: 1.0,
            dt: 1e-2,
            stride: 10,
            integrator: Integrator::ImplicitMidpoint,
            solver: SolverSettings::default(),
            reference: 128,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ladder.len() < 2 || self.ladder.windows(2).any(|w| w[1] <= w[0]) || self.ladder[0] == 0 {
            return Err(Error::InvalidArgument("ladder must hold at least two strictly increasing sizes"));
        }
        if self.reference < *self.ladder.last().expect("nonempty") {
            return Err(Error::InvalidArgument("reference size must cover the ladder"));
        }
        Ok(())
    }

    pub fn basis(&self) -> Arc<EigenBasis> {
        Arc::new(EigenBasis::new(self.reference))
    }

    /// The common initial datum on `reference` modes.
    pub fn initial(&self, basis: &Arc<EigenBasis>) -> SpectralField {
        random_spectrum(basis, self.reference, self.seed, self.beta)
    }

    /// One run of the ladder, with snapshots.
    pub fn run(&self, basis: &Arc<EigenBasis>, m: usize) -> Result<TrajectoryRecord> {
        let tensor = CouplingTensor::closed_form(basis.clone(), m);
        let solver = Galerkin::new(tensor, self.integrator).with_solver(self.solver);
        solver.run(&self.initial(basis), self.horizon, self.dt, self.stride, true)
    }
}

/// A family of trajectories sharing `θ₀`, `T`, integrator and time step.
#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub config: StudyConfig,
    pub basis: Arc<EigenBasis>,
    pub theta0: SpectralField,
    pub runs: Vec<TrajectoryRecord>,
}

impl ConvergenceStudy {
    /// Runs every ladder entry in sequence.
    pub fn run(config: StudyConfig) -> Result<Self> {
        config.validate()?;
        let basis = config.basis();
        let runs = config
            .ladder
            .iter()
            .map(|&m| config.run(&basis, m))
            .collect::<Result<Vec<_>>>()?;
        Self::from_runs(config, basis, runs)
    }

    /// Assembles a study from runs produced elsewhere (e.g. in parallel).
    pub fn from_runs(config: StudyConfig, basis: Arc<EigenBasis>, runs: Vec<TrajectoryRecord>) -> Result<Self> {
        config.validate()?;
        if runs.len() != config.ladder.len() || runs.iter().zip(&config.ladder).any(|(r, &m)| r.m != m) {
            return Err(Error::InvalidArgument("runs do not match the ladder"));
        }
        if runs.iter().any(|r| r.times != runs[0].times) {
            return Err(Error::InvalidArgument("runs must share their sample times"));
        }
        let theta0 = config.initial(&basis);
        Ok(Self {
            config,
            basis,
            theta0,
            runs,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyRow {
    pub m_low: usize,
    pub m_high: usize,
    /// `sup_t ‖ψ_high - ψ_low‖_{1-ε,D}`.
    pub difference: f64,
}

/// `‖Λ^{-1}(a - b)‖_{1-ε,D}` in the larger coefficient space.
pub fn psi_difference(basis: &EigenBasis, a: &[f64], b: &[f64], epsilon: f64) -> f64 {
    let n = a.len().max(b.len());
    let modes = basis.modes();
    let mut total = 0.0;
    for j in 0..n {
        let d = a.get(j).copied().unwrap_or(0.0) - b.get(j).copied().unwrap_or(0.0);
        total += modes[j].eigenvalue().powf(-epsilon) * d * d;
    }
    total.sqrt()
}

pub fn cauchy_diagnostic(study: &ConvergenceStudy, epsilon: f64) -> Result<Vec<CauchyRow>> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidArgument("ε must lie in (0, 1]"));
    }
    if study.runs.len() < 3 {
        return Err(Error::InvalidArgument("Cauchy table needs at least three ladder entries"));
    }
    Ok(study
        .runs
        .windows(2)
        .map(|w| {
            let difference = w[0]
                .snapshots
                .iter()
                .zip(&w[1].snapshots)
                .map(|(a, b)| psi_difference(&study.basis, a, b, epsilon))
                .fold(0.0f64, f64::max);
            CauchyRow {
                m_low: w[0].m,
                m_high: w[1].m,
                difference,
            }
        })
        .collect())
}

pub fn decreasing(values: impl IntoIterator<Item = f64>) -> bool {
    let v: Vec<f64> = values.into_iter().collect();
    v.windows(2).all(|w| w[1] < w[0])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianRow {
    pub m: usize,
    /// `H_m(0)`.
    pub initial: f64,
    /// `|H_m(0) - H(0)|` with `H(0)` from the full `θ₀`.
    pub initial_gap: f64,
    /// `max_t |H_m(t) - H_m(0)| / |H_m(0)|`.
    pub drift: f64,
}

pub fn hamiltonian_constancy(study: &ConvergenceStudy) -> Vec<HamiltonianRow> {
    let full = hamiltonian(&study.basis, study.theta0.coeffs());
    study
        .runs
        .iter()
        .map(|r| HamiltonianRow {
            m: r.m,
            initial: r.hamiltonian[0],
            initial_gap: (r.hamiltonian[0] - full).abs(),
            drift: r.hamiltonian_drift(),
        })
        .collect()
}

/// `max_t |⟨∂ₜψ_m, P_mφ⟩| / ‖θ₀‖²` with `∂ₜψ_m = Λ^{-1}∂ₜθ_m`.
pub fn dt_psi_pairing(study: &ConvergenceStudy, phi: &TestFunction) -> Vec<(usize, f64)> {
    let norm0 = study.theta0.l2_norm().powi(2);
    study
        .runs
        .iter()
        .map(|r| {
            let tensor = CouplingTensor::closed_form(study.basis.clone(), r.m);
            let phi_m = test_function_coefficients(phi, &study.basis, r.m);
            let modes = study.basis.modes();
            let worst = r
                .snapshots
                .iter()
                .map(|theta| {
                    let rate = tensor.rhs(theta);
                    rate.iter()
                        .zip(phi_m.coeffs())
                        .zip(modes)
                        .map(|((f, p), w)| f * p / w.eigenvalue().sqrt())
                        .sum::<f64>()
                        .abs()
                })
                .fold(0.0f64, f64::max);
            (r.m, if norm0 > 0.0 { worst / norm0 } else { worst })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn simpson_is_exact_for_cubics() {
        for n in [2usize, 3, 4, 5, 8, 9] {
            let h = 1.0 / n as f64;
            let v: Vec<f64> = (0..=n).map(|i| (i as f64 * h).powi(3) - 2.0 * (i as f64 * h)).collect();
            assert_abs_diff_eq!(simpson(&v, h), 0.25 - 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn band_limited_function_has_no_projection_error() {
        // a sum of two modes is captured exactly once both are kept
        let basis = Arc::new(EigenBasis::new(32));
        let field = SpectralField::mode(basis.clone(), 2, 1).unwrap();
        let other = SpectralField::mode(basis.clone(), 1, 1).unwrap();
        let sum: Vec<f64> = field.coeffs().iter().zip(other.coeffs()).map(|(a, b)| a + b).collect();
        let d = psi_difference(&basis, &sum, &sum, 0.5);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn envelope_of_decaying_profile_peaks_early() {
        let basis = Arc::new(EigenBasis::new(400));
        let coeffs: Vec<f64> = basis.modes().iter().map(|m| (-m.eigenvalue() / 8.0).exp()).collect();
        let field = SpectralField::new(basis.clone(), coeffs).unwrap();
        let env = dyadic_envelope(&field, 1);
        assert!(env.len() >= 6);
        assert!(envelope_peaks_inside(&env));
        // a growing profile peaks in the last window
        let grow = SpectralField::new(basis.clone(), alloc::vec![1.0; 400]).unwrap();
        assert!(!envelope_peaks_inside(&dyadic_envelope(&grow, 1)));
    }

    #[test]
    fn bump_projection_errors_decrease() {
        let basis = Arc::new(EigenBasis::new(256));
        let phi = TestFunction::default();
        for k in 0..=2 {
            let table = projection_decay(&phi, k, &[16, 64, 256], &basis, 3).unwrap();
            assert!(table.strictly_decreasing(), "k = {k}: {:?}", table.rows);
        }
    }

    #[test]
    fn sobolev_norms_match_spectral_sums() {
        let basis = Arc::new(EigenBasis::new(2048));
        let phi = TestFunction::default();
        let c = test_function_coefficients(&phi, &basis, 2048);
        for k in 0..=1u32 {
            let spectral: f64 = c
                .coeffs()
                .iter()
                .zip(basis.modes())
                .map(|(v, m)| m.eigenvalue().powi(k as i32) * v * v)
                .sum();
            let total = sobolev_norm_squared(&phi, k).unwrap();
            assert!((total - spectral).abs() < 1e-4 * total, "k = {k}");
        }
    }

    #[test]
    fn zero_trajectory_has_zero_weak_residual() {
        let basis = Arc::new(EigenBasis::new(16));
        let tensor = CouplingTensor::closed_form(basis.clone(), 16);
        let solver = Galerkin::new(tensor, Integrator::ImplicitMidpoint);
        let zero = SpectralField::zeros(basis.clone(), 16);
        let rec = solver.run(&zero, 1.0, 0.05, 2, true).unwrap();
        let r = weak_residual(&basis, &rec, &TestFunction::default(), 1.0).unwrap();
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn weak_residual_is_linear_in_phi() {
        let basis = Arc::new(EigenBasis::new(16));
        let tensor = CouplingTensor::closed_form(basis.clone(), 16);
        let solver = Galerkin::new(tensor, Integrator::ImplicitMidpoint);
        let theta = random_spectrum(&basis, 16, 3, 1.0);
        let rec = solver.run(&theta, 1.0, 0.01, 5, true).unwrap();
        let phi = TestFunction::default();
        let r1 = weak_residual(&basis, &rec, &phi, 1.0).unwrap();
        let r3 = weak_residual(&basis, &rec, &phi.scaled(3.0), 1.0).unwrap();
        assert!(r1.residual > 0.0);
        assert!((r3.residual - 3.0 * r1.residual).abs() < 1e-12 * r3.residual.max(1e-300));
    }

    #[test]
    fn identical_runs_have_zero_cauchy_difference() {
        let config = StudyConfig {
            ladder: alloc::vec![4, 8, 16],
            horizon: 0.2,
            dt: 0.02,
            stride: 5,
            reference: 16,
            ..StudyConfig::default()
        };
        let study = ConvergenceStudy::run(config).unwrap();
        let r = &study.runs[1];
        assert_eq!(psi_difference(&study.basis, &r.snapshots[2], &r.snapshots[2], 1.0), 0.0);
        let table = cauchy_diagnostic(&study, 1.0).unwrap();
        assert_eq!(table.len(), 2);
        // largest entry matches the reference size, so the initial gap vanishes there
        let ham = hamiltonian_constancy(&study);
        assert!(ham[2].initial_gap < 1e-15);
        assert!(ham.iter().all(|h| h.drift < 1e-10));
    }

    #[test]
    fn single_mode_is_steady() {
        let config = StudyConfig {
            ladder: alloc::vec![2, 4, 8],
            horizon: 0.5,
            dt: 0.05,
            stride: 2,
            reference: 8,
            ..StudyConfig::default()
        };
        let basis = config.basis();
        let tensor = CouplingTensor::closed_form(basis.clone(), 8);
        let solver = Galerkin::new(tensor, Integrator::ImplicitMidpoint);
        let e = SpectralField::mode(basis.clone(), 1, 2).unwrap();
        let rec = solver.run(&e, 0.5, 0.05, 2, true).unwrap();
        assert!(rec.hamiltonian_change.iter().all(|&c| c == 0.0));
    }
}
