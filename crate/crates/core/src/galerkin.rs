//! The Galerkin system `θ̇_l + Σ_{j,k} γ_jkl θ_j θ_k = 0` on the first `m`
//! eigenmodes, its coupling tensor, and time integration with monitoring of
//! the two quadratic invariants
//! `E_m = ½ Σ θ_j²` and `H_m = ½ Σ λ_j^{-1/2} θ_j²`.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bump::TestFunction;
use crate::eigenbasis::{EigenBasis, EigenMode};
use crate::error::{Error, Result};
use crate::grid::QuadGrid;
use crate::quadrature::exact_bandwidth;
use crate::spectral::{analyze, analyze_fn, SpectralField};

/// How the triple integrals were evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assembly {
    ClosedForm,
    Quadrature,
}

/// Order in which `(l, j)` pairs are visited during closed-form assembly.
/// The stored tensor must not depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TriadOrder {
    #[default]
    Forward,
    Reverse,
}

/// One stored coefficient of the slice `l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triad {
    pub j: usize,
    pub k: usize,
    /// `T_jkl = ∫_Ω (∇^⊥w_j·∇w_k) w_l dx`.
    pub triple: f64,
    /// `γ_jkl = λ_j^{-1/2} T_jkl`.
    pub gamma: f64,
}

/// `±1` when one of `a, b, c` is the sum of the other two, with the sign
/// that makes `(π/4)·s(a, b, c) = ∫_0^π sin(a x) cos(b x) sin(c x) dx`.
fn sin_cos_sin(a: u32, b: u32, c: u32) -> i64 {
    (a == b + c) as i64 + (c == a + b) as i64 - (b == a + c) as i64
}

/// Integer numerator `S` of `T_jkl = S / (2π)` for three sine-product modes.
pub fn triad_numerator(wj: EigenMode, wk: EigenMode, wl: EigenMode) -> i64 {
    let (p1, q1) = (wj.p, wj.q);
    let (p2, q2) = (wk.p, wk.q);
    let (p3, q3) = (wl.p, wl.q);
    // ∇^⊥w_j·∇w_k = -∂ᵧw_j ∂ₓw_k + ∂ₓw_j ∂ᵧw_k
    let first = -(q1 as i64) * (p2 as i64) * sin_cos_sin(p1, p2, p3) * sin_cos_sin(q2, q1, q3);
    let second = (p1 as i64) * (q2 as i64) * sin_cos_sin(p2, p1, p3) * sin_cos_sin(q1, q2, q3);
    first + second
}

/// `T_jkl` in closed form.
pub fn triad_integral(wj: EigenMode, wk: EigenMode, wl: EigenMode) -> f64 {
    triad_numerator(wj, wk, wl) as f64 / TAU
}

/// Frequencies `b ≥ 1` for which `(a, b, c)` can satisfy the selection rule.
fn partner_frequencies(a: u32, c: u32) -> [Option<u32>; 2] {
    let diff = a.abs_diff(c);
    [Some(a + c), (diff > 0).then_some(diff)]
}

/// Sparse `γ_jkl`, stored per output index `l` as a list of `(j, k)` sorted
/// lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTensor {
    basis: Arc<EigenBasis>,
    m: usize,
    method: Assembly,
    slices: Vec<Vec<Triad>>,
}

/// Entries of quadrature-assembled tensors below this are treated as zero.
pub const QUADRATURE_FLOOR: f64 = 1e-14;

impl CouplingTensor {
    pub fn closed_form(basis: Arc<EigenBasis>, m: usize) -> Self {
        Self::closed_form_ordered(basis, m, TriadOrder::Forward)
    }

    pub fn closed_form_ordered(basis: Arc<EigenBasis>, m: usize, order: TriadOrder) -> Self {
        assert!(m <= basis.len(), "Galerkin dimension exceeds basis size");
        let modes = &basis.modes()[..m];
        let mut slices: Vec<Vec<Triad>> = alloc::vec![Vec::new(); m];
        let mut visit = |l: usize, j: usize| {
            let (wl, wj) = (modes[l], modes[j]);
            for p2 in partner_frequencies(wj.p, wl.p).into_iter().flatten() {
                for q2 in partner_frequencies(wj.q, wl.q).into_iter().flatten() {
                    let Some(k) = basis.position(p2, q2).filter(|&k| k < m) else {
                        continue;
                    };
                    let s = triad_numerator(wj, modes[k], wl);
                    if s != 0 {
                        let triple = s as f64 / TAU;
                        let gamma = triple / wj.eigenvalue().sqrt();
                        slices[l].push(Triad { j, k, triple, gamma });
                    }
                }
            }
        };
        match order {
            TriadOrder::Forward => (0..m).for_each(|l| (0..m).for_each(|j| visit(l, j))),
            TriadOrder::Reverse => (0..m).rev().for_each(|l| (0..m).rev().for_each(|j| visit(l, j))),
        }
        Self::finish(basis, m, Assembly::ClosedForm, slices)
    }

    /// Assembly by tensor Gauss–Legendre with `nodes` points per axis.
    pub fn quadrature(basis: Arc<EigenBasis>, m: usize, nodes: usize) -> Result<Self> {
        assert!(m <= basis.len(), "Galerkin dimension exceeds basis size");
        let required = 3 * basis.max_frequency_of(m);
        let exact = exact_bandwidth(nodes);
        if exact < required {
            return Err(Error::InsufficientQuadrature { nodes, exact, required });
        }
        let grid = QuadGrid::with_nodes(nodes);
        let xs = grid.xs();
        let fields: Vec<_> = (0..m)
            .map(|i| {
                let e = SpectralField::unit(basis.clone(), m, i);
                (e.perp_gradient_on(xs, xs), e.gradient_on(xs, xs))
            })
            .collect();
        let mut slices: Vec<Vec<Triad>> = alloc::vec![Vec::new(); m];
        for j in 0..m {
            let sqrt_lambda = basis.eigenvalue(j).sqrt();
            let perp = &fields[j].0;
            for k in 0..m {
                let grad = &fields[k].1;
                let a = perp[0].zip_with(&grad[0], |u, v| u * v);
                let b = perp[1].zip_with(&grad[1], |u, v| u * v);
                let dot = a.zip_with(&b, |u, v| u + v);
                let projected = analyze(&grid, &dot, basis.clone(), m).field;
                for (l, &triple) in projected.coeffs().iter().enumerate() {
                    if triple.abs() > QUADRATURE_FLOOR {
                        slices[l].push(Triad {
                            j,
                            k,
                            triple,
                            gamma: triple / sqrt_lambda,
                        });
                    }
                }
            }
        }
        Ok(Self::finish(basis, m, Assembly::Quadrature, slices))
    }

    /// Quadrature assembly with the smallest grid the node policy allows.
    pub fn quadrature_default(basis: Arc<EigenBasis>, m: usize) -> Self {
        let nodes = crate::quadrature::nodes_for_bandwidth(3 * basis.max_frequency_of(m));
        Self::quadrature(basis, m, nodes).expect("node policy covers the triad bandwidth")
    }

    fn finish(basis: Arc<EigenBasis>, m: usize, method: Assembly, mut slices: Vec<Vec<Triad>>) -> Self {
        for slice in &mut slices {
            slice.sort_by_key(|t| (t.j, t.k));
        }
        Self {
            basis,
            m,
            method,
            slices,
        }
    }

    pub fn basis(&self) -> &Arc<EigenBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn method(&self) -> Assembly {
        self.method
    }

    pub fn slice(&self, l: usize) -> &[Triad] {
        &self.slices[l]
    }

    pub fn nonzeros(&self) -> usize {
        self.slices.iter().map(Vec::len).sum()
    }

    fn find(&self, j: usize, k: usize, l: usize) -> Option<&Triad> {
        let slice = &self.slices[l];
        slice.binary_search_by_key(&(j, k), |t| (t.j, t.k)).ok().map(|i| &slice[i])
    }

    /// `γ_jkl` (0-based indices); zero when not stored.
    pub fn gamma(&self, j: usize, k: usize, l: usize) -> f64 {
        self.find(j, k, l).map_or(0.0, |t| t.gamma)
    }

    /// `T_jkl = λ_j^{1/2} γ_jkl`, stored alongside `γ`.
    pub fn triple(&self, j: usize, k: usize, l: usize) -> f64 {
        self.find(j, k, l).map_or(0.0, |t| t.triple)
    }

    /// Stored entries as `(j, k, l, γ)`, ordered by `l`, then `(j, k)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        self.slices
            .iter()
            .enumerate()
            .flat_map(|(l, s)| s.iter().map(move |t| (t.j, t.k, l, t.gamma)))
    }

    /// `max |γ - γ'|` over the union of stored entries.
    pub fn max_abs_difference(&self, other: &Self) -> f64 {
        assert_eq!(self.m, other.m);
        let one_way = |a: &Self, b: &Self| {
            a.entries()
                .map(|(j, k, l, g)| (g - b.gamma(j, k, l)).abs())
                .fold(0.0, f64::max)
        };
        one_way(self, other).max(one_way(other, self))
    }

    /// Largest violation of the structural identities over all stored
    /// triads: `γ_jkl + γ_jlk`, `γ_jjl`, `γ_jkk`, `T_jkl + T_kjl`, `T_jkl + T_jlk`.
    pub fn structure_defects(&self) -> StructureDefects {
        let mut d = StructureDefects::default();
        for (l, slice) in self.slices.iter().enumerate() {
            for t in slice {
                let (j, k) = (t.j, t.k);
                d.antisymmetry = d.antisymmetry.max((t.gamma + self.gamma(j, l, k)).abs());
                if j == k {
                    d.diagonal = d.diagonal.max(t.gamma.abs());
                }
                if k == l {
                    d.diagonal = d.diagonal.max(t.gamma.abs());
                }
                let total = (t.triple + self.triple(k, j, l))
                    .abs()
                    .max((t.triple + self.triple(j, l, k)).abs());
                d.total_antisymmetry = d.total_antisymmetry.max(total);
            }
        }
        d
    }

    /// Count of stored triads violating the 1D frequency selection rules.
    pub fn selection_rule_violations(&self) -> usize {
        let modes = self.basis.modes();
        let allowed = |a: u32, b: u32, c: u32| a == b + c || b == a + c || c == a + b;
        self.entries()
            .filter(|&(j, k, l, _)| {
                let (a, b, c) = (modes[j], modes[k], modes[l]);
                !(allowed(a.p, b.p, c.p) && allowed(a.q, b.q, c.q))
            })
            .count()
    }

    /// `-Σ_{j,k} γ_jkl θ_j θ_k` for each `l`.
    pub fn rhs(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.m];
        self.rhs_into(theta, &mut out);
        out
    }

    pub fn rhs_into(&self, theta: &[f64], out: &mut [f64]) {
        assert_eq!(theta.len(), self.m);
        for (o, slice) in out.iter_mut().zip(&self.slices) {
            let mut acc = 0.0;
            for t in slice {
                acc += t.gamma * theta[t.j] * theta[t.k];
            }
            *o = -acc;
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StructureDefects {
    pub antisymmetry: f64,
    pub diagonal: f64,
    pub total_antisymmetry: f64,
}

impl StructureDefects {
    pub fn max(&self) -> f64 {
        self.antisymmetry.max(self.diagonal).max(self.total_antisymmetry)
    }
}

/// `-P_m(u_m·∇θ_m)` evaluated on a grid, independently of the tensor.
pub fn rhs_quadrature(theta: &SpectralField) -> SpectralField {
    let m = theta.len();
    let basis = theta.basis().clone();
    let grid = QuadGrid::for_bandwidth(3 * basis.max_frequency_of(m));
    let xs = grid.xs();
    let u = theta.velocity_on(xs, xs);
    let [tx, ty] = theta.gradient_on(xs, xs);
    let a = u.ux.zip_with(&tx, |u, g| u * g);
    let b = u.uy.zip_with(&ty, |u, g| u * g);
    let transport = a.zip_with(&b, |p, q| -(p + q));
    analyze(&grid, &transport, basis, m).field
}

pub fn energy(theta: &[f64]) -> f64 {
    0.5 * theta.iter().map(|c| c * c).sum::<f64>()
}

/// `½ ∫ ψ θ dx` with `ψ = Λ⁻¹θ`.
pub fn hamiltonian(basis: &EigenBasis, theta: &[f64]) -> f64 {
    0.5 * theta
        .iter()
        .zip(basis.modes())
        .map(|(c, m)| c * c / m.eigenvalue().sqrt())
        .sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    Rk4,
    #[default]
    ImplicitMidpoint,
}

impl Integrator {
    pub const NAMES: [&'static str; 2] = ["rk4", "implicit_midpoint"];

    pub fn name(self) -> &'static str {
        match self {
            Self::Rk4 => "rk4",
            Self::ImplicitMidpoint => "implicit_midpoint",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "rk4" => Some(Self::Rk4),
            "implicit_midpoint" => Some(Self::ImplicitMidpoint),
            _ => None,
        }
    }
}

/// Fixed-point iteration settings for the implicit midpoint rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Stop once the max-norm update is below `tol · max(1, ‖θ‖_∞)`.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            max_iterations: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinState {
    pub t: f64,
    pub theta: SpectralField,
}

impl GalerkinState {
    pub fn new(theta: SpectralField) -> Self {
        Self { t: 0.0, theta }
    }

    pub fn energy(&self) -> f64 {
        energy(self.theta.coeffs())
    }

    pub fn hamiltonian(&self) -> f64 {
        hamiltonian(self.theta.basis(), self.theta.coeffs())
    }
}

/// The Galerkin ODE paired with a time integrator.
#[derive(Debug, Clone)]
pub struct Galerkin {
    tensor: CouplingTensor,
    integrator: Integrator,
    solver: SolverSettings,
}

impl Galerkin {
    pub fn new(tensor: CouplingTensor, integrator: Integrator) -> Self {
        Self {
            tensor,
            integrator,
            solver: SolverSettings::default(),
        }
    }

    pub fn with_solver(mut self, solver: SolverSettings) -> Self {
        self.solver = solver;
        self
    }

    pub fn tensor(&self) -> &CouplingTensor {
        &self.tensor
    }

    pub fn integrator(&self) -> Integrator {
        self.integrator
    }

    pub fn dim(&self) -> usize {
        self.tensor.dim()
    }

    pub fn step(&self, state: &GalerkinState, dt: f64) -> Result<GalerkinState> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument("time step must be positive"));
        }
        if state.theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: state.theta.len(),
            });
        }
        let y0 = state.theta.coeffs();
        let delta = self.increment(y0, dt)?;
        let y1: Vec<f64> = y0.iter().zip(&delta).map(|(y, d)| y + d).collect();
        let t = state.t + dt;
        check_finite(t, y0, &y1)?;
        Ok(GalerkinState {
            t,
            theta: SpectralField::new(state.theta.basis().clone(), y1)?,
        })
    }

    /// `θ(t + dt) - θ(t)` for one step of the integrator.
    pub fn increment(&self, y: &[f64], dt: f64) -> Result<Vec<f64>> {
        match self.integrator {
            Integrator::Rk4 => Ok(self.rk4(y, dt)),
            Integrator::ImplicitMidpoint => self.midpoint(y, dt),
        }
    }

    fn rk4(&self, y: &[f64], dt: f64) -> Vec<f64> {
        let f = |v: &[f64]| self.tensor.rhs(v);
        let axpy = |a: f64, k: &[f64]| -> Vec<f64> { y.iter().zip(k).map(|(y, k)| y + a * k).collect() };
        let k1 = f(y);
        let k2 = f(&axpy(0.5 * dt, &k1));
        let k3 = f(&axpy(0.5 * dt, &k2));
        let k4 = f(&axpy(dt, &k3));
        (0..y.len())
            .map(|i| dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect()
    }

    fn midpoint(&self, y0: &[f64], dt: f64) -> Result<Vec<f64>> {
        let n = y0.len();
        let mut f = self.tensor.rhs(y0);
        let mut delta: Vec<f64> = f.iter().map(|k| dt * k).collect();
        let mut mid = alloc::vec![0.0; n];
        let mut update = f64::INFINITY;
        for _ in 0..self.solver.max_iterations {
            for i in 0..n {
                mid[i] = y0[i] + 0.5 * delta[i];
            }
            self.tensor.rhs_into(&mid, &mut f);
            let scale = y0.iter().zip(&delta).fold(1.0f64, |m, (y, d)| m.max((y + d).abs()));
            update = 0.0;
            for i in 0..n {
                let next = dt * f[i];
                update = update.max((next - delta[i]).abs());
                delta[i] = next;
            }
            if !update.is_finite() {
                break;
            }
            if update <= self.solver.tol * scale {
                return Ok(delta);
            }
        }
        Err(Error::NoConvergence {
            iterations: self.solver.max_iterations,
            update,
        })
    }

    /// Integrates `P_m θ₀` to time `horizon`, recording invariants every
    /// `stride` steps and at the final time.
    pub fn run(&self, theta0: &SpectralField, horizon: f64, dt: f64, stride: usize, snapshots: bool) -> Result<TrajectoryRecord> {
        if !(horizon > 0.0) || !(dt > 0.0) || stride == 0 {
            return Err(Error::InvalidArgument("run needs T > 0, dt > 0 and stride ≥ 1"));
        }
        let steps = (horizon / dt).round();
        if steps < 1.0 || (steps * dt - horizon).abs() > 1e-9 * horizon {
            return Err(Error::InvalidArgument("T must be an integer multiple of dt"));
        }
        let steps = steps as usize;
        let m = self.dim();
        let start = if theta0.len() >= m {
            theta0.project(m)
        } else {
            theta0.padded(m)
        };
        let weights: Vec<f64> = start.basis().modes()[..m].iter().map(|w| 1.0 / w.eigenvalue().sqrt()).collect();
        let mut record = TrajectoryRecord::new(m, snapshots);
        let mut y = start.into_coeffs();
        record.push(0.0, &y, &weights, [0.0; 2]);
        // y += Δ with Kahan compensation, and the invariants tracked through
        // their exact per-step changes ⟨y, Δ⟩ + ½|Δ|²; both keep the round-off
        // floor far below the integrator's own drift.
        let mut carry = alloc::vec![0.0; m];
        let mut change = [Compensated::default(); 2];
        for n in 1..=steps {
            let t = n as f64 * dt;
            let delta = self.increment(&y, dt)?;
            let (mut de, mut dh) = (0.0, 0.0);
            for ((yi, di), wi) in y.iter().zip(&delta).zip(&weights) {
                let v = yi * di + 0.5 * di * di;
                de += v;
                dh += wi * v;
            }
            change[0].add(de);
            change[1].add(dh);
            let last_good = y.clone();
            for ((yi, ci), di) in y.iter_mut().zip(&mut carry).zip(&delta) {
                let d = di - *ci;
                let sum = *yi + d;
                *ci = (sum - *yi) - d;
                *yi = sum;
            }
            check_finite(t, &last_good, &y)?;
            if n % stride == 0 || n == steps {
                record.push(t, &y, &weights, [change[0].value(), change[1].value()]);
            }
        }
        Ok(record)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}

fn check_finite(t: f64, last_good: &[f64], next: &[f64]) -> Result<()> {
    if next.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            t,
            last_good: last_good.to_vec(),
        })
    }
}

/// Invariant time series of a Galerkin run.
///
/// `energy_change[i]` and `hamiltonian_change[i]` are `E_m(tᵢ) - E_m(0)` and
/// `H_m(tᵢ) - H_m(0)` accumulated from exact per-step increments, so they
/// resolve drifts well below the rounding of `E_m` itself.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub m: usize,
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub hamiltonian: Vec<f64>,
    pub energy_change: Vec<f64>,
    pub hamiltonian_change: Vec<f64>,
    /// Full coefficient vectors at each sample time; empty when not requested.
    pub snapshots: Vec<Vec<f64>>,
    keep_snapshots: bool,
    last: Vec<f64>,
}

impl TrajectoryRecord {
    fn new(m: usize, keep_snapshots: bool) -> Self {
        Self {
            m,
            times: Vec::new(),
            energy: Vec::new(),
            hamiltonian: Vec::new(),
            energy_change: Vec::new(),
            hamiltonian_change: Vec::new(),
            snapshots: Vec::new(),
            keep_snapshots,
            last: Vec::new(),
        }
    }

    fn push(&mut self, t: f64, theta: &[f64], weights: &[f64], change: [f64; 2]) {
        self.times.push(t);
        self.energy.push(energy(theta));
        self.hamiltonian
            .push(0.5 * theta.iter().zip(weights).map(|(c, w)| w * c * c).sum::<f64>());
        self.energy_change.push(change[0]);
        self.hamiltonian_change.push(change[1]);
        if self.keep_snapshots {
            self.snapshots.push(theta.to_vec());
        }
        self.last = theta.to_vec();
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Coefficients at the final time.
    pub fn final_state(&self) -> &[f64] {
        &self.last
    }

    /// `max_t |E_m(t) - E_m(0)| / E_m(0)`.
    pub fn energy_drift(&self) -> f64 {
        relative_change(self.energy[0], &self.energy_change)
    }

    /// `max_t |H_m(t) - H_m(0)| / H_m(0)`.
    pub fn hamiltonian_drift(&self) -> f64 {
        relative_change(self.hamiltonian[0], &self.hamiltonian_change)
    }
}

fn relative_change(q0: f64, change: &[f64]) -> f64 {
    let worst = change.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if q0 == 0.0 {
        worst
    } else {
        worst / q0.abs()
    }
}

/// `max_t |q(t) - q(0)| / |q(0)|`, or the absolute drift when `q(0) = 0`.
pub fn relative_drift(series: &[f64]) -> f64 {
    let Some(&q0) = series.first() else {
        return 0.0;
    };
    let worst = series.iter().fold(0.0f64, |m, q| m.max((q - q0).abs()));
    if q0 == 0.0 {
        worst
    } else {
        worst / q0.abs()
    }
}

/// Recipes for initial data.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// A single eigenmode `(p, q)` with unit amplitude.
    Mode { p: u32, q: u32 },
    /// `θ_j = ζ_j λ_j^{-β}`, `ζ_j` standard normal, normalized to unit L² norm.
    Random { seed: u64, beta: f64 },
    /// A smooth compactly supported bump, analyzed by quadrature.
    Bump(TestFunction),
    /// Explicit coefficients.
    Coefficients(Vec<f64>),
}

impl InitialData {
    /// Coefficients on the first `len` modes.
    pub fn build(&self, basis: &Arc<EigenBasis>, len: usize) -> Result<SpectralField> {
        assert!(len <= basis.len());
        match self {
            Self::Mode { p, q } => {
                let pos = basis
                    .position(*p, *q)
                    .filter(|&i| i < len)
                    .ok_or(Error::InvalidArgument("initial mode lies outside the basis"))?;
                Ok(SpectralField::unit(basis.clone(), len, pos))
            }
            Self::Random { seed, beta } => Ok(random_spectrum(basis, len, *seed, *beta)),
            Self::Bump(phi) => {
                let grid = phi.support_grid_for(2 * basis.max_frequency_of(len));
                Ok(analyze_fn(&grid, basis.clone(), len, |x, y| phi.value(x, y)).field)
            }
            Self::Coefficients(c) => {
                let mut c = c.clone();
                c.resize(len, 0.0);
                SpectralField::new(basis.clone(), c)
            }
        }
    }
}

/// Seeded random spectrum `θ_j ∝ ζ_j λ_j^{-β}` with `‖θ‖ = 1`.
pub fn random_spectrum(basis: &Arc<EigenBasis>, len: usize, seed: u64, beta: f64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs: Vec<f64> = basis.modes()[..len]
        .iter()
        .map(|m| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * m.eigenvalue().powf(-beta)
        })
        .collect();
    let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm > 0.0 {
        coeffs.iter_mut().for_each(|c| *c /= norm);
    }
    SpectralField::new(basis.clone(), coeffs).expect("finite random spectrum")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn basis(n: usize) -> Arc<EigenBasis> {
        Arc::new(EigenBasis::new(n))
    }

    fn mode(p: u32, q: u32) -> EigenMode {
        EigenMode { index: 0, p, q }
    }

    /// Brute-force `∫_Ω (∇^⊥w_j·∇w_k) w_l` with a fine midpoint rule.
    fn brute_triple(a: EigenMode, b: EigenMode, c: EigenMode) -> f64 {
        let n = 400;
        let h = PI / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            for k in 0..n {
                let (x, y) = ((i as f64 + 0.5) * h, (k as f64 + 0.5) * h);
                let ga = a.gradient(x, y);
                let gb = b.gradient(x, y);
                total += (-ga[1] * gb[0] + ga[0] * gb[1]) * c.value(x, y);
            }
        }
        total * h * h
    }

    #[test]
    fn closed_form_matches_brute_force_integral() {
        // (1,1),(1,2),(2,1): x-frequencies 1+1=2, y-frequencies 1+1=2
        for (a, b, c) in [
            (mode(1, 1), mode(1, 2), mode(2, 1)),
            (mode(2, 1), mode(1, 3), mode(1, 2)),
            (mode(1, 2), mode(3, 1), mode(2, 3)),
        ] {
            let brute = brute_triple(a, b, c);
            assert_abs_diff_eq!(triad_integral(a, b, c), brute, epsilon = 1e-4);
            assert!(triad_integral(a, b, c) != 0.0);
        }
    }

    #[test]
    fn selection_rules_kill_unmatched_triads() {
        assert_eq!(triad_numerator(mode(1, 1), mode(1, 1), mode(1, 1)), 0);
        assert_eq!(triad_numerator(mode(1, 1), mode(2, 2), mode(5, 1)), 0);
    }

    #[test]
    fn small_tensor_structure_is_exact() {
        let t = CouplingTensor::closed_form(basis(20), 20);
        let d = t.structure_defects();
        assert_eq!(d.max(), 0.0);
        assert_eq!(t.selection_rule_violations(), 0);
        assert!(t.nonzeros() > 0);
        for j in 0..20 {
            for l in 0..20 {
                assert_eq!(t.gamma(j, j, l), 0.0);
                assert_eq!(t.gamma(l, j, j), 0.0);
            }
        }
    }

    #[test]
    fn quadrature_assembly_matches_closed_form() {
        let b = basis(10);
        let closed = CouplingTensor::closed_form(b.clone(), 10);
        let quad = CouplingTensor::quadrature_default(b, 10);
        assert!(closed.max_abs_difference(&quad) < 1e-12);
    }

    #[test]
    fn quadrature_assembly_rejects_coarse_grid() {
        let err = CouplingTensor::quadrature(basis(10), 10, 12).unwrap_err();
        assert!(matches!(err, Error::InsufficientQuadrature { .. }));
    }

    #[test]
    fn enumeration_order_does_not_matter() {
        let b = basis(30);
        let f = CouplingTensor::closed_form_ordered(b.clone(), 30, TriadOrder::Forward);
        let r = CouplingTensor::closed_form_ordered(b, 30, TriadOrder::Reverse);
        assert_eq!(f, r);
    }

    #[test]
    fn single_mode_is_steady() {
        let b = basis(16);
        let t = CouplingTensor::closed_form(b.clone(), 16);
        for j in 0..16 {
            let e = SpectralField::unit(b.clone(), 16, j);
            assert!(t.rhs(e.coeffs()).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn tensor_rhs_matches_grid_transport() {
        let b = basis(16);
        let t = CouplingTensor::closed_form(b.clone(), 16);
        for seed in 0..5 {
            let theta = random_spectrum(&b, 16, seed, 0.5);
            let want = rhs_quadrature(&theta);
            let got = t.rhs(theta.coeffs());
            let scale = want.l2_norm();
            let err = got
                .iter()
                .zip(want.coeffs())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(err < 1e-10 * scale, "seed {seed}: {err} vs {scale}");
        }
    }

    #[test]
    fn rhs_is_orthogonal_to_both_invariant_gradients() {
        let b = basis(20);
        let t = CouplingTensor::closed_form(b.clone(), 20);
        for seed in 0..10 {
            let theta = random_spectrum(&b, 20, seed, 1.0);
            let r = t.rhs(theta.coeffs());
            let psi = theta.frac_apply(-1.0);
            let e: f64 = r.iter().zip(theta.coeffs()).map(|(a, b)| a * b).sum();
            let h: f64 = r.iter().zip(psi.coeffs()).map(|(a, b)| a * b).sum();
            let scale = r.iter().map(|v| v.abs()).sum::<f64>();
            assert!(e.abs() < 1e-14 * scale.max(1.0));
            assert!(h.abs() < 1e-14 * scale.max(1.0));
        }
    }

    #[test]
    fn zero_state_stays_zero() {
        let b = basis(12);
        for integrator in [Integrator::Rk4, Integrator::ImplicitMidpoint] {
            let g = Galerkin::new(CouplingTensor::closed_form(b.clone(), 12), integrator);
            let s = GalerkinState::new(SpectralField::zeros(b.clone(), 12));
            let next = g.step(&s, 0.1).unwrap();
            assert!(next.theta.coeffs().iter().all(|&c| c == 0.0));
        }
    }

    #[test]
    fn rk4_step_has_fourth_order_local_error() {
        let b = basis(20);
        let g = Galerkin::new(CouplingTensor::closed_form(b.clone(), 20), Integrator::Rk4);
        let theta = random_spectrum(&b, 20, 3, 0.5).scaled(4.0);
        let s = GalerkinState::new(theta);
        let reference = |dt: f64| {
            let fine = 64;
            let mut st = s.clone();
            for _ in 0..fine {
                st = g.step(&st, dt / fine as f64).unwrap();
            }
            st
        };
        let err = |dt: f64| {
            let one = g.step(&s, dt).unwrap();
            let two = g.step(&g.step(&s, 0.5 * dt).unwrap(), 0.5 * dt).unwrap();
            let r = reference(dt);
            let e1 = one.theta.difference(&r.theta).l2_norm();
            let e2 = two.theta.difference(&r.theta).l2_norm();
            e1 / e2
        };
        // one step carries C·dt⁵, two half steps 2·C·(dt/2)⁵
        let ratio = err(0.05);
        assert!((ratio - 16.0).abs() < 0.2 * 16.0, "ratio {ratio}");
    }

    #[test]
    fn midpoint_step_conserves_energy() {
        let b = basis(24);
        let g = Galerkin::new(CouplingTensor::closed_form(b.clone(), 24), Integrator::ImplicitMidpoint);
        let s = GalerkinState::new(random_spectrum(&b, 24, 11, 1.0));
        let next = g.step(&s, 0.01).unwrap();
        assert!((next.energy() - s.energy()).abs() < 1e-12 * s.energy());
        assert!((next.hamiltonian() - s.hamiltonian()).abs() < 1e-12 * s.hamiltonian());
    }

    #[test]
    fn midpoint_reports_nonconvergence() {
        let b = basis(24);
        let g = Galerkin::new(CouplingTensor::closed_form(b.clone(), 24), Integrator::ImplicitMidpoint)
            .with_solver(SolverSettings {
                tol: 1e-13,
                max_iterations: 3,
            });
        let s = GalerkinState::new(random_spectrum(&b, 24, 11, 0.0).scaled(50.0));
        assert!(matches!(g.step(&s, 0.5), Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn run_keeps_single_mode_fixed() {
        let b = basis(16);
        let g = Galerkin::new(CouplingTensor::closed_form(b.clone(), 16), Integrator::Rk4);
        let theta0 = InitialData::Mode { p: 1, q: 1 }.build(&b, 16).unwrap();
        let rec = g.run(&theta0, 1.0, 0.1, 3, true).unwrap();
        assert_eq!(rec.times.len(), 5);
        assert!(rec.times.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(rec.final_state(), theta0.coeffs());
        assert_eq!(rec.energy_drift(), 0.0);
    }

    #[test]
    fn run_starts_from_projection_and_never_gains_energy() {
        let b = basis(40);
        let g = Galerkin::new(CouplingTensor::closed_form(b.clone(), 12), Integrator::ImplicitMidpoint);
        let theta0 = random_spectrum(&b, 40, 5, 1.0);
        let rec = g.run(&theta0, 0.5, 0.05, 1, false).unwrap();
        let full = energy(theta0.coeffs());
        assert_abs_diff_eq!(rec.energy[0], energy(theta0.project(12).coeffs()), epsilon = 1e-15);
        assert!(rec.energy.iter().all(|&e| e <= full));
    }

    #[test]
    fn run_rejects_bad_horizon() {
        let b = basis(4);
        let g = Galerkin::new(CouplingTensor::closed_form(b.clone(), 4), Integrator::Rk4);
        let theta0 = SpectralField::zeros(b, 4);
        assert!(g.run(&theta0, 1.0, 0.3, 1, false).is_err());
        assert!(g.run(&theta0, -1.0, 0.1, 1, false).is_err());
    }

    #[test]
    fn random_spectrum_is_reproducible_and_normalized() {
        let b = basis(30);
        let a = random_spectrum(&b, 30, 42, 1.0);
        assert_eq!(a, random_spectrum(&b, 30, 42, 1.0));
        assert_abs_diff_eq!(a.l2_norm(), 1.0, epsilon = 1e-15);
        assert_ne!(a, random_spectrum(&b, 30, 43, 1.0));
    }

    #[test]
    fn integrator_names_round_trip() {
        for name in Integrator::NAMES {
            assert_eq!(Integrator::from_name(name).unwrap().name(), name);
        }
        assert!(Integrator::from_name("rk5").is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn energy_flux_vanishes(seed in any::<u64>(), m in 2usize..30) {
            let b = basis(30);
            let t = CouplingTensor::closed_form(b.clone(), m);
            let theta = random_spectrum(&b, m, seed, 0.5);
            let r = t.rhs(theta.coeffs());
            let flux: f64 = r.iter().zip(theta.coeffs()).map(|(a, b)| a * b).sum();
            let scale = r.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
            prop_assert!(flux.abs() < 1e-14 * scale);
        }
    }
}
