//! Smooth compactly supported test functions.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use core::f64::consts::PI;

use crate::grid::QuadGrid;
use crate::quadrature::AxisRule;

/// Tanh–sinh nodes per axis used by [`TestFunction::support_grid`].
pub const SUPPORT_NODES: usize = 161;

/// `b(z) = exp(-1/(1 - r²))`, `r = (z - c)/ρ`, zero for `|r| ≥ 1`; returns
/// `(b, b', b'')` with derivatives in `z`.
fn bump_1d(z: f64, center: f64, rho: f64) -> (f64, f64, f64) {
    let r = (z - center) / rho;
    let one_minus = 1.0 - r * r;
    if one_minus <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let b = (-1.0 / one_minus).exp();
    let g1 = -2.0 * r / (one_minus * one_minus);
    let g2 = -2.0 * (1.0 + 3.0 * r * r) / (one_minus * one_minus * one_minus);
    (b, b * g1 / rho, b * (g1 * g1 + g2) / (rho * rho))
}

/// Product bump `φ(x, y) = a·b(x)·b(y)` supported in the square
/// `|x - cₓ| < ρ`, `|y - cᵧ| < ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub center: [f64; 2],
    pub rho: f64,
    pub amplitude: f64,
}

impl Default for TestFunction {
    fn default() -> Self {
        Self {
            center: [PI / 2.0, PI / 2.0],
            rho: PI / 3.0,
            amplitude: 1.0,
        }
    }
}

impl TestFunction {
    pub fn new(center: [f64; 2], rho: f64) -> Self {
        Self {
            center,
            rho,
            amplitude: 1.0,
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            amplitude: self.amplitude * alpha,
            ..*self
        }
    }

    /// Distance from the support to `∂Ω`; positive for a valid test function.
    pub fn support_margin(&self) -> f64 {
        let [cx, cy] = self.center;
        (cx - self.rho).min(PI - cx - self.rho).min(cy - self.rho).min(PI - cy - self.rho)
    }

    pub fn in_support(&self, x: f64, y: f64) -> bool {
        (x - self.center[0]).abs() < self.rho && (y - self.center[1]).abs() < self.rho
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.amplitude * bump_1d(x, self.center[0], self.rho).0 * bump_1d(y, self.center[1], self.rho).0
    }

    pub fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        let (bx, dbx, _) = bump_1d(x, self.center[0], self.rho);
        let (by, dby, _) = bump_1d(y, self.center[1], self.rho);
        [self.amplitude * dbx * by, self.amplitude * bx * dby]
    }

    /// `[∂ₓₓ, ∂ₓᵧ, ∂ᵧᵧ]`.
    pub fn hessian(&self, x: f64, y: f64) -> [f64; 3] {
        let (bx, dbx, d2bx) = bump_1d(x, self.center[0], self.rho);
        let (by, dby, d2by) = bump_1d(y, self.center[1], self.rho);
        let a = self.amplitude;
        [a * d2bx * by, a * dbx * dby, a * bx * d2by]
    }

    /// Tanh–sinh tensor grid on the support square; integrates `φ·g` (and
    /// derivatives of `φ` times `g`) to round-off for smooth `g` of moderate
    /// frequency.
    pub fn support_grid(&self, nodes: usize) -> QuadGrid {
        let axis = |c: f64| AxisRule::support((c - self.rho).max(0.0), (c + self.rho).min(PI), nodes);
        QuadGrid::from_axes(axis(self.center[0]), axis(self.center[1]))
    }

    /// Support grid resolving `φ·g` for `g` of total frequency `bandwidth`.
    pub fn support_grid_for(&self, bandwidth: usize) -> QuadGrid {
        self.support_grid(SUPPORT_NODES.max(8 * bandwidth + 1))
    }

    /// `‖φ‖_{W^{2,p}} = (Σ_{|α|≤2} ‖∂^α φ‖_p^p)^{1/p}` by quadrature, counting
    /// the mixed derivative once per ordering (`∂ₓᵧ` and `∂ᵧₓ`).
    pub fn w2p_norm(&self, p: f64, grid: &QuadGrid) -> f64 {
        let mut total = 0.0;
        let (wx, wy) = (grid.x_rule().weights(), grid.y_rule().weights());
        for (a, &x) in grid.xs().iter().enumerate() {
            for (b, &y) in grid.ys().iter().enumerate() {
                let v = self.value(x, y);
                let g = self.gradient(x, y);
                let h = self.hessian(x, y);
                let s = v.abs().powf(p)
                    + g[0].abs().powf(p)
                    + g[1].abs().powf(p)
                    + h[0].abs().powf(p)
                    + 2.0 * h[1].abs().powf(p)
                    + h[2].abs().powf(p);
                total += wx[a] * wy[b] * s;
            }
        }
        total.powf(1.0 / p)
    }
}

/// Compactly supported bump in time on `(0, T)`: `σ(t) = b(t)` with centre
/// `T/2` and radius `0.45 T`. Returns `(σ, σ')`.
pub fn time_bump(t: f64, horizon: f64) -> (f64, f64) {
    let (b, db, _) = bump_1d(t, 0.5 * horizon, 0.45 * horizon);
    (b, db)
}
