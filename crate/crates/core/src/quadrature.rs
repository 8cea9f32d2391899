//! Gauss–Legendre rules: the per-axis rule used for all spatial integrals over
//! `(0, π)` and the composite rule used for time integrals over `(0, ∞)`.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    let (_, d) = legendre_with_derivative(n, x);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights affinely mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

/// Extra nodes on top of the linear bandwidth term.
const AXIS_NODE_MARGIN: usize = 16;

/// Gauss–Legendre rule on `[0, π]`, shared by both axes of the square.
///
/// A trigonometric integrand `cos(Kx)` on `[0, π]` is integrated to round-off
/// once the node count reaches roughly `K + 14`; we use `⌈1.1 K⌉ + 16`, i.e.
/// polynomial exactness degree `2n - 1 ≥ 2.2 K + 31`, which leaves more than
/// the required safety of 4 over the total frequency `K` of the integrand.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    exact: usize,
}

impl AxisRule {
    pub fn with_nodes(n: usize) -> Self {
        let gl = GaussLegendre::new(n);
        let (nodes, weights) = gl.mapped(0.0, PI).unzip();
        Self {
            nodes,
            weights,
            exact: exact_bandwidth(n),
        }
    }

    /// Tanh–sinh rule with `n` nodes on `[a, b] ⊂ [0, π]`, for integrands
    /// carrying a factor that vanishes to infinite order at both ends.
    ///
    /// Such a rule has no trigonometric exactness of its own; it reports an
    /// unbounded bandwidth because the integrand, not the rule, limits accuracy.
    pub fn support(a: f64, b: f64, n: usize) -> Self {
        assert!(n >= 3 && 0.0 <= a && a < b && b <= PI);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let h = 2.0 * SUPPORT_REACH / (n - 1) as f64;
        let (mut nodes, mut weights) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for i in 0..n {
            let tau = -SUPPORT_REACH + i as f64 * h;
            let arg = core::f64::consts::FRAC_PI_2 * tau.sinh();
            let c = arg.cosh();
            nodes.push(mid + half * arg.tanh());
            weights.push(half * h * core::f64::consts::FRAC_PI_2 * tau.cosh() / (c * c));
        }
        Self {
            nodes,
            weights,
            exact: usize::MAX,
        }
    }

    /// Smallest rule that integrates trigonometric products whose summed
    /// frequency is at most `bandwidth`.
    pub fn for_bandwidth(bandwidth: usize) -> Self {
        Self::with_nodes(nodes_for_bandwidth(bandwidth))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Largest summed frequency this rule integrates to round-off.
    pub fn exact_bandwidth(&self) -> usize {
        self.exact
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Half-width of the tanh–sinh abscissa window.
const SUPPORT_REACH: f64 = 3.2;

pub fn nodes_for_bandwidth(bandwidth: usize) -> usize {
    (11 * bandwidth).div_ceil(10) + AXIS_NODE_MARGIN
}

pub fn exact_bandwidth(nodes: usize) -> usize {
    if nodes < AXIS_NODE_MARGIN {
        return 0;
    }
    // inverse of nodes_for_bandwidth, rounded down
    let mut k = (nodes - AXIS_NODE_MARGIN) * 10 / 11;
    while nodes_for_bandwidth(k + 1) <= nodes {
        k += 1;
    }
    while k > 0 && nodes_for_bandwidth(k) > nodes {
        k -= 1;
    }
    k
}

/// Composite rule for `∫ F(t) dt` over `[t_min, t_max]`, the window of the
/// subordination integral that is integrated numerically.
///
/// `[t_min, t0]` is covered in the variable `u = ln t` by unit-width panels;
/// `[t0, t_max]` directly in `t` by geometric panels `[a, 2a]`, each of which
/// stays a panel-length away from the `t = 0` singularity. Both carry
/// [`TimeRule::PANEL_NODES`]-point Gauss–Legendre. The pieces outside the window
/// are handled analytically by the callers.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeRule {
    t_min: f64,
    t0: f64,
    t_max: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl TimeRule {
    pub const PANEL_NODES: usize = 16;
    pub const T_MIN: f64 = 1e-12;
    pub const T0: f64 = 1e-4;

    /// The default window: `t0 = 1e-4` and `t_max` chosen so that
    /// `exp(-λ₁ t_max) < 1e-16` for the first Dirichlet eigenvalue `λ₁ = 2`.
    pub fn standard() -> Self {
        let t_max = 16.0 * core::f64::consts::LN_10 / 2.0 + 0.1;
        Self::new(Self::T_MIN, Self::T0, t_max)
    }

    pub fn new(t_min: f64, t0: f64, t_max: f64) -> Self {
        assert!(0.0 < t_min && t_min < t0 && t0 < t_max);
        let gl = GaussLegendre::new(Self::PANEL_NODES);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();

        let (u_lo, u_hi) = (t_min.ln(), t0.ln());
        let panels = ((u_hi - u_lo).ceil() as usize).max(1);
        let du = (u_hi - u_lo) / panels as f64;
        for i in 0..panels {
            let a = u_lo + du * i as f64;
            for (u, w) in gl.mapped(a, a + du) {
                let t = u.exp();
                nodes.push(t);
                weights.push(w * t);
            }
        }

        let panels = ((t_max / t0).log2().ceil() as usize).max(1);
        let ratio = (t_max / t0).powf(1.0 / panels as f64);
        let mut a = t0;
        for i in 0..panels {
            let b = if i + 1 == panels { t_max } else { a * ratio };
            for (t, w) in gl.mapped(a, b) {
                nodes.push(t);
                weights.push(w);
            }
            a = b;
        }
        Self {
            t_min,
            t0,
            t_max,
            nodes,
            weights,
        }
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_{t_min}^{t_max} F(t) dt`.
    pub fn integrate_window<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        for n in [1usize, 2, 5, 10, 33] {
            let gl = GaussLegendre::new(n);
            for deg in 0..(2 * n) {
                let got = gl.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
                let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert_abs_diff_eq!(got, want, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn weights_sum_to_interval_length() {
        let rule = AxisRule::with_nodes(77);
        assert_abs_diff_eq!(rule.weights().iter().sum::<f64>(), PI, epsilon = 1e-13);
        assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn bandwidth_policy_integrates_trig_to_roundoff() {
        for bw in [2usize, 7, 20, 45, 100] {
            let rule = AxisRule::for_bandwidth(bw);
            assert!(rule.exact_bandwidth() >= bw);
            for k in 0..=bw {
                let got = rule.integrate(|x| (k as f64 * x).cos());
                let want = if k == 0 { PI } else { 0.0 };
                assert_abs_diff_eq!(got, want, epsilon = 2e-14);
            }
        }
    }

    #[test]
    fn support_rule_integrates_flat_bump() {
        // ∫_{-1}^{1} e^{-1/(1-r²)} dr, reference from mpmath
        let want = 0.443_993_816_168_079_4;
        let rule = AxisRule::support(0.5, 2.5, 161);
        let got = rule.integrate(|x| {
            let r = x - 1.5;
            if r.abs() < 1.0 { (-1.0 / (1.0 - r * r)).exp() } else { 0.0 }
        });
        assert_abs_diff_eq!(got, want, epsilon = 1e-15);
    }

    #[test]
    fn exact_bandwidth_inverts_node_policy() {
        for bw in 0..300 {
            let n = nodes_for_bandwidth(bw);
            assert!(exact_bandwidth(n) >= bw);
            assert!(exact_bandwidth(n - 1) < bw || n - 1 < AXIS_NODE_MARGIN);
        }
    }

    #[test]
    fn time_rule_integrates_power_law_window() {
        let rule = TimeRule::standard();
        // ∫ t^{-1/2} dt over the window
        let got = rule.integrate_window(|t| t.powf(-0.5));
        let want = 2.0 * (rule.t_max().sqrt() - rule.t_min().sqrt());
        assert_abs_diff_eq!(got, want, epsilon = 1e-12 * want);
    }
}
