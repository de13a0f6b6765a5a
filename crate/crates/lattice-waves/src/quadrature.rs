//! Fixed quadrature rules: Clenshaw–Curtis and Gauss–Legendre.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights of an interpolatory rule on an interval.
#[derive(Debug, Clone)]
pub struct Rule {
    /// Quadrature nodes.
    pub nodes: Vec<f64>,
    /// Matching weights.
    pub weights: Vec<f64>,
}

impl Rule {
    /// Affinely map a rule defined on `[-1, 1]` to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> Rule {
        let h = 0.5 * (b - a);
        let m = 0.5 * (a + b);
        Rule {
            nodes: self.nodes.iter().map(|&x| m + h * x).collect(),
            weights: self.weights.iter().map(|&w| h * w).collect(),
        }
    }

    /// Apply the rule to `f`.
    pub fn integrate<T, F>(&self, mut f: F) -> T
    where
        T: crate::scalar::Scalar,
        F: FnMut(f64) -> T,
    {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| f(x) * w)
            .sum()
    }
}

/// Clenshaw–Curtis rule with `n + 1` nodes `cos(pi j / n)` on `[-1, 1]`.
///
/// Exact for polynomials of degree `n` (degree `n + 1` for even `n`).
pub fn clenshaw_curtis(n: usize) -> Rule {
    assert!(n >= 2 && n % 2 == 0, "Clenshaw-Curtis order must be even and >= 2");
    let nf = n as f64;
    let mut nodes = Vec::with_capacity(n + 1);
    let mut weights = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let theta = PI * j as f64 / nf;
        nodes.push(theta.cos());
        let mut s = 0.0;
        for k in 1..=n / 2 {
            let b = if k == n / 2 { 1.0 } else { 2.0 };
            s += b / (4.0 * (k * k) as f64 - 1.0) * (2.0 * k as f64 * theta).cos();
        }
        let c = if j == 0 || j == n { 1.0 } else { 2.0 };
        weights.push(c / nf * (1.0 - s));
    }
    Rule { nodes, weights }
}

/// Gauss–Legendre rule with `n` nodes on `[-1, 1]` (Golub–Welsch).
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let kf = k as f64;
        let b = kf / (4.0 * kf * kf - 1.0).sqrt();
        jac[(k, k - 1)] = b;
        jac[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], 2.0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}
