//! The density `β₀(t) = (π/2) / (cosh(πt) + 1)` and a composite
//! Gauss–Legendre rule on a symmetric truncation `[−T, T]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest tolerated probability mass of `β₀` outside `[−T, T]`.
pub const MAX_TAIL: f64 = 1e-12;

/// `β₀(t) = (π/2) / (cosh(πt) + 1)`; a probability density on the real line.
pub fn beta0(t: f64) -> f64 {
    let x = std::f64::consts::PI * t.abs();
    // (cosh x + 1)^{-1} = 2 e^{-x} / (1 + e^{-x})^2, stable for large |t|.
    let e = (-x).exp();
    std::f64::consts::PI * e / ((1.0 + e) * (1.0 + e))
}

/// Exact mass of `β₀` outside `[−T, T]`: `2 / (1 + e^{πT})`.
pub fn beta0_tail(half_width: f64) -> f64 {
    2.0 / (1.0 + (std::f64::consts::PI * half_width).exp())
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[−1, 1]`,
/// by Newton iteration on the Legendre three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
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

/// Composite Gauss–Legendre rule on `[−T, T]` with equal panels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureScheme {
    pub half_width: f64,
    pub panels: usize,
    pub order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Default for QuadratureScheme {
    /// `T = 12`, 48 panels of order 16.
    fn default() -> Self {
        Self::new(12.0, 48, 16).expect("default quadrature is valid")
    }
}

impl QuadratureScheme {
    /// Fails with [`Error::QuadratureTailTooLarge`] when `β₀` puts more than
    /// [`MAX_TAIL`] outside `[−T, T]`.
    pub fn new(half_width: f64, panels: usize, order: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) || panels == 0 || order == 0 {
            return Err(Error::InvalidArgument(format!(
                "quadrature needs T > 0 and positive panel count/order, got ({half_width}, {panels}, {order})"
            )));
        }
        let tail = beta0_tail(half_width);
        if tail > MAX_TAIL {
            return Err(Error::QuadratureTailTooLarge {
                tail,
                tolerance: MAX_TAIL,
            });
        }
        let (x, w) = gauss_legendre(order);
        let h = 2.0 * half_width / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let mid = -half_width + (p as f64 + 0.5) * h;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(mid + 0.5 * h * xi);
                weights.push(0.5 * h * wi);
            }
        }
        Ok(Self {
            half_width,
            panels,
            order,
            nodes,
            weights,
        })
    }

    pub fn tail_mass(&self) -> f64 {
        beta0_tail(self.half_width)
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

    /// `∫_{−T}^{T} f(t) dt`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }

    /// `∫ β₀(t) f(t) dt` over the truncation.
    pub fn integrate_beta0<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.integrate(|t| beta0(t) * f(t))
    }

    /// `(t, β₀(t) · w)` pairs, for integrands that are not scalar.
    pub fn beta0_weighted_nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| (t, w * beta0(t)))
    }
}
