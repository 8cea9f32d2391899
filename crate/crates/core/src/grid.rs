//! Tensor-grid samples on the closed square and the 2D Gauss–Legendre rule.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec::Vec;

use crate::quadrature::AxisRule;

/// Samples on the tensor product `xs × ys`, stored row-major in `x`
/// (`values[a * ys.len() + b]` is the value at `(xs[a], ys[b])`).
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    xs: Vec<f64>,
    ys: Vec<f64>,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), xs.len() * ys.len());
        Self { xs, ys, values }
    }

    pub fn from_fn<F: FnMut(f64, f64) -> f64>(xs: &[f64], ys: &[f64], mut f: F) -> Self {
        let mut values = Vec::with_capacity(xs.len() * ys.len());
        for &x in xs {
            for &y in ys {
                values.push(f(x, y));
            }
        }
        Self::new(xs.to_vec(), ys.to_vec(), values)
    }

    pub fn zeros(xs: &[f64], ys: &[f64]) -> Self {
        Self::new(xs.to_vec(), ys.to_vec(), alloc::vec![0.0; xs.len() * ys.len()])
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn at(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.ys.len() + b]
    }

    /// Iterates `(x, y, value)` in storage order.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let ny = self.ys.len();
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.xs[i / ny], self.ys[i % ny], v))
    }

    pub fn map<F: FnMut(f64) -> f64>(&self, f: F) -> Self {
        Self::new(self.xs.clone(), self.ys.clone(), self.values.iter().copied().map(f).collect())
    }

    pub fn zip_with<F: FnMut(f64, f64) -> f64>(&self, other: &Self, mut f: F) -> Self {
        assert_eq!(self.values.len(), other.values.len());
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.xs.clone(), self.ys.clone(), values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Tensor quadrature on the square: Gauss–Legendre on both axes by default,
/// or independent axis rules.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadGrid {
    x: AxisRule,
    y: AxisRule,
}

impl QuadGrid {
    pub fn new(rule: AxisRule) -> Self {
        Self { x: rule.clone(), y: rule }
    }

    pub fn from_axes(x: AxisRule, y: AxisRule) -> Self {
        Self { x, y }
    }

    pub fn with_nodes(n: usize) -> Self {
        Self::new(AxisRule::with_nodes(n))
    }

    pub fn for_bandwidth(bandwidth: usize) -> Self {
        Self::new(AxisRule::for_bandwidth(bandwidth))
    }

    pub fn x_rule(&self) -> &AxisRule {
        &self.x
    }

    pub fn y_rule(&self) -> &AxisRule {
        &self.y
    }

    pub fn xs(&self) -> &[f64] {
        self.x.nodes()
    }

    pub fn ys(&self) -> &[f64] {
        self.y.nodes()
    }

    /// Total number of nodes.
    pub fn size(&self) -> usize {
        self.x.len() * self.y.len()
    }

    pub fn exact_bandwidth(&self) -> usize {
        self.x.exact_bandwidth().min(self.y.exact_bandwidth())
    }

    pub fn sample<F: FnMut(f64, f64) -> f64>(&self, f: F) -> GridField {
        GridField::from_fn(self.xs(), self.ys(), f)
    }

    pub fn zeros(&self) -> GridField {
        GridField::zeros(self.xs(), self.ys())
    }

    /// `∫_Ω f dx` for a field sampled on this grid.
    pub fn integrate(&self, field: &GridField) -> f64 {
        self.integrate_values(field.values())
    }

    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        let (wx, wy) = (self.x.weights(), self.y.weights());
        let ny = wy.len();
        assert_eq!(values.len(), wx.len() * ny);
        let mut total = 0.0;
        for (a, wa) in wx.iter().enumerate() {
            let row = &values[a * ny..(a + 1) * ny];
            let inner: f64 = row.iter().zip(wy).map(|(v, wb)| v * wb).sum();
            total += wa * inner;
        }
        total
    }

    /// `∫_Ω f g dx`.
    pub fn inner(&self, f: &GridField, g: &GridField) -> f64 {
        let (wx, wy) = (self.x.weights(), self.y.weights());
        let ny = wy.len();
        let (fv, gv) = (f.values(), g.values());
        let mut total = 0.0;
        for (a, wa) in wx.iter().enumerate() {
            let mut inner = 0.0;
            for (b, wb) in wy.iter().enumerate() {
                inner += wb * fv[a * ny + b] * gv[a * ny + b];
            }
            total += wa * inner;
        }
        total
    }

    /// `‖f‖_{L^p}` by quadrature, `1 ≤ p < ∞`.
    pub fn lp_norm(&self, field: &GridField, p: f64) -> f64 {
        let powered = field.map(|v| v.abs().powf(p));
        self.integrate(&powered).powf(1.0 / p)
    }
}

/// `sin(k x)` and `cos(k x)` for `k = 0..=max_freq` at a fixed set of points.
#[derive(Debug, Clone)]
pub(crate) struct TrigTable {
    n: usize,
    sin: Vec<f64>,
    cos: Vec<f64>,
}

impl TrigTable {
    pub(crate) fn new(points: &[f64], max_freq: usize) -> Self {
        let n = points.len();
        let mut sin = Vec::with_capacity((max_freq + 1) * n);
        let mut cos = Vec::with_capacity((max_freq + 1) * n);
        for k in 0..=max_freq {
            for &x in points {
                let kx = k as f64 * x;
                sin.push(kx.sin());
                cos.push(kx.cos());
            }
        }
        Self { n, sin, cos }
    }

    pub(crate) fn sin(&self, k: usize) -> &[f64] {
        &self.sin[k * self.n..(k + 1) * self.n]
    }

    pub(crate) fn cos(&self, k: usize) -> &[f64] {
        &self.cos[k * self.n..(k + 1) * self.n]
    }

    pub(crate) fn row(&self, k: usize, kind: Trig) -> &[f64] {
        match kind {
            Trig::Sin => self.sin(k),
            Trig::Cos => self.cos(k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Trig {
    Sin,
    Cos,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::PI;

    #[test]
    fn integrates_separable_trig_products() {
        let grid = QuadGrid::for_bandwidth(12);
        let f = grid.sample(|x, y| (3.0 * x).sin().powi(2) * (2.0 * y).cos().powi(2));
        assert_abs_diff_eq!(grid.integrate(&f), PI * PI / 4.0, epsilon = 1e-13);
    }

    #[test]
    fn lp_norm_of_constant() {
        let grid = QuadGrid::with_nodes(20);
        let one = grid.sample(|_, _| 2.0);
        assert_abs_diff_eq!(grid.lp_norm(&one, 4.0), 2.0 * PI.sqrt(), epsilon = 1e-12);
    }
}
