//! Gauss–Legendre rules, composite panels and tensor products.

use std::f64::consts::PI;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes are the roots of `P_n`, found by Newton iteration from the
    /// Tricomi initial guesses; weights from `2 / ((1 - x²) P_n'(x)²)`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
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

    /// Rule mapped affinely onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> Rule1d {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Rule1d {
            nodes: self.nodes.iter().map(|t| mid + half * t).collect(),
            weights: self.weights.iter().map(|w| half * w).collect(),
        }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| w * f(mid + half * t))
            .sum::<f64>()
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
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A one-dimensional quadrature rule with explicit nodes and weights.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    /// `panels` equal panels over `[a, b]`, each with a `per_panel`-point rule.
    pub fn composite(a: f64, b: f64, panels: usize, per_panel: usize) -> Self {
        let base = GaussLegendre::new(per_panel);
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut rule = Rule1d::default();
        for p in 0..panels {
            let lo = a + h * p as f64;
            let hi = if p + 1 == panels { b } else { lo + h };
            let m = base.mapped(lo, hi);
            rule.nodes.extend(m.nodes);
            rule.weights.extend(m.weights);
        }
        rule
    }

    /// Panels of length at most one, each carrying `nodes_per_unit` nodes.
    pub fn per_unit_length(a: f64, b: f64, nodes_per_unit: usize) -> Self {
        if b <= a {
            return Rule1d::default();
        }
        let panels = (b - a).ceil().max(1.0) as usize;
        Self::composite(a, b, panels, nodes_per_unit)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Tensor product of one-dimensional rules; points are visited in
/// row-major order (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct TensorRule {
    axes: Vec<Rule1d>,
}

impl TensorRule {
    pub fn new(axes: Vec<Rule1d>) -> Self {
        Self { axes }
    }

    /// Composite rule with panels of length ≤ 1 on every axis of the box.
    pub fn on_box(lower: &[f64], upper: &[f64], nodes_per_unit: usize) -> Self {
        Self::new(
            lower
                .iter()
                .zip(upper)
                .map(|(&a, &b)| Rule1d::per_unit_length(a, b, nodes_per_unit))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Rule1d] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Rule1d::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn for_each<F: FnMut(&[f64], f64)>(&self, mut f: F) {
        let n = self.axes.len();
        if self.is_empty() {
            return;
        }
        let mut idx = vec![0usize; n];
        let mut point = vec![0.0; n];
        loop {
            let mut w = 1.0;
            for (l, axis) in self.axes.iter().enumerate() {
                point[l] = axis.nodes[idx[l]];
                w *= axis.weights[idx[l]];
            }
            f(&point, w);
            let mut l = n;
            loop {
                if l == 0 {
                    return;
                }
                l -= 1;
                idx[l] += 1;
                if idx[l] < self.axes[l].len() {
                    break;
                }
                idx[l] = 0;
            }
        }
    }

    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        let mut acc = 0.0;
        self.for_each(|x, w| acc += w * f(x));
        acc
    }

    /// Flattened `(point, weight)` list.
    pub fn points(&self) -> Vec<(Vec<f64>, f64)> {
        let mut out = Vec::with_capacity(self.len());
        self.for_each(|x, w| out.push((x.to_vec(), w)));
        out
    }
}
