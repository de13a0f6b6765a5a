//! Chebyshev representation of functions on `[-1, 1]`.
//!
//! Coefficients are computed from samples at the Chebyshev–Lobatto points by a
//! direct DCT-I, evaluated with the Clenshaw recurrence and differentiated with
//! the standard coefficient recurrence.

use std::f64::consts::PI;

use crate::scalar::Scalar;

/// Default polynomial degree for function components of state vectors.
pub const DEFAULT_DEGREE: usize = 32;

/// A function on `[-1, 1]` stored as Chebyshev coefficients
/// `f(v) = sum_k coeffs[k] T_k(v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cheb<T: Scalar> {
    /// Chebyshev coefficients, lowest degree first.
    pub coeffs: Vec<T>,
}

/// Chebyshev–Lobatto points `cos(pi j / n)`, `j = 0..=n`.
pub fn lobatto_points(n: usize) -> Vec<f64> {
    (0..=n).map(|j| (PI * j as f64 / n as f64).cos()).collect()
}

impl<T: Scalar> Cheb<T> {
    /// The zero function of the given degree.
    pub fn zero(degree: usize) -> Self {
        Self { coeffs: vec![T::zero(); degree + 1] }
    }

    /// A constant function.
    pub fn constant(value: T, degree: usize) -> Self {
        let mut c = Self::zero(degree);
        c.coeffs[0] = value;
        c
    }

    /// Interpolate `f` at the `degree + 1` Chebyshev–Lobatto points.
    pub fn fit<F: FnMut(f64) -> T>(mut f: F, degree: usize) -> Self {
        assert!(degree >= 1, "degree must be at least 1");
        let n = degree;
        let xs = lobatto_points(n);
        let vals: Vec<T> = xs.iter().map(|&x| f(x)).collect();
        Self::from_lobatto_values(&vals)
    }

    /// Coefficients from values at the Lobatto points (DCT-I).
    pub fn from_lobatto_values(vals: &[T]) -> Self {
        let n = vals.len() - 1;
        let nf = n as f64;
        let mut coeffs = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let mut acc = T::zero();
            for (j, &v) in vals.iter().enumerate() {
                let half = if j == 0 || j == n { 0.5 } else { 1.0 };
                acc += v * (half * (PI * (j * k) as f64 / nf).cos());
            }
            let scale = if k == 0 || k == n { 1.0 / nf } else { 2.0 / nf };
            coeffs.push(acc * scale);
        }
        Self { coeffs }
    }

    /// Exact representation of the polynomial `sum_n mono[n] v^n`.
    ///
    /// Requires `degree >= mono.len() - 1`.
    pub fn from_monomials(mono: &[T], degree: usize) -> Self {
        assert!(mono.len() <= degree + 1, "degree too small for polynomial");
        Self::fit(
            |v| mono.iter().rev().fold(T::zero(), |acc, &c| acc * v + c),
            degree.max(1),
        )
    }

    /// Polynomial degree of the representation.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Evaluate at `v` by the Clenshaw recurrence.
    pub fn eval(&self, v: f64) -> T {
        let mut b1 = T::zero();
        let mut b2 = T::zero();
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = c + b1 * (2.0 * v) - b2;
            b2 = b1;
            b1 = b0;
        }
        self.coeffs[0] + b1 * v - b2
    }

    /// Derivative, represented at the same degree.
    pub fn derivative(&self) -> Self {
        let n = self.degree();
        let mut d = vec![T::zero(); n + 1];
        if n >= 1 {
            // d_{k-1} = d_{k+1} + 2 k c_k, with d_0 halved at the end.
            for k in (1..=n).rev() {
                let next = if k + 1 <= n { d[k + 1] } else { T::zero() };
                d[k - 1] = next + self.coeffs[k] * (2.0 * k as f64);
            }
            d[0] = d[0] * 0.5;
        }
        Self { coeffs: d }
    }

    /// Sum of the moduli of the top quarter of the coefficients, weighted by
    /// degree; small values indicate a representation that is `C^1`-resolved.
    pub fn tail_norm(&self) -> f64 {
        let n = self.degree();
        let start = (3 * n) / 4 + 1;
        (start..=n)
            .map(|k| (1.0 + k as f64) * self.coeffs[k].modulus())
            .sum()
    }

    /// Pointwise linear combination `a * self + b * other`.
    pub fn axpby(&self, a: T, other: &Self, b: T) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |c: &Vec<T>, k: usize| c.get(k).copied().unwrap_or_else(T::zero);
        Self {
            coeffs: (0..n)
                .map(|k| get(&self.coeffs, k) * a + get(&other.coeffs, k) * b)
                .collect(),
        }
    }

    /// Multiply by a scalar.
    pub fn scale(&self, a: T) -> Self {
        Self { coeffs: self.coeffs.iter().map(|&c| c * a).collect() }
    }

    /// Reflection `v -> f(-v)`.
    pub fn reflect(&self) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| if k % 2 == 1 { -c } else { c })
                .collect(),
        }
    }

    /// Maximum modulus over a fine uniform sample of `[-1, 1]`.
    pub fn sup_norm(&self) -> f64 {
        (0..=200)
            .map(|i| self.eval(-1.0 + 2.0 * i as f64 / 200.0).modulus())
            .fold(0.0, f64::max)
    }

    /// Promote real coefficients to complex ones.
    pub fn to_complex(&self) -> Cheb<num_complex::Complex64> {
        Cheb { coeffs: self.coeffs.iter().map(|c| c.to_complex()).collect() }
    }

    /// Resample at a different degree (truncate or zero-pad coefficients).
    pub fn with_degree(&self, degree: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(degree + 1, T::zero());
        Self { coeffs }
    }
}

impl Cheb<num_complex::Complex64> {
    /// Real parts of the coefficients.
    pub fn real_part(&self) -> Cheb<f64> {
        Cheb { coeffs: self.coeffs.iter().map(|c| c.re).collect() }
    }

    /// Largest imaginary part among the coefficients.
    pub fn max_imag(&self) -> f64 {
        self.coeffs.iter().map(|c| c.im.abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn fit_and_eval_reproduce_smooth_function() {
        let f = Cheb::fit(|v: f64| (1.3 * v).exp() * v.sin(), 32);
        for i in 0..50 {
            let v = -1.0 + 2.0 * i as f64 / 49.0;
            assert!((f.eval(v) - (1.3 * v).exp() * v.sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_of_cubic_is_exact() {
        let f = Cheb::from_monomials(&[1.0, -2.0, 0.5, 3.0], 8);
        let d = f.derivative();
        for &v in &[-1.0, -0.3, 0.0, 0.7, 1.0] {
            let want = -2.0 + v + 9.0 * v * v;
            assert!((d.eval(v) - want).abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_of_exponential_is_spectrally_accurate() {
        let z = Complex64::new(0.3, -1.1);
        let f = Cheb::fit(|v| (z * v).exp(), 32);
        let d = f.derivative();
        for &v in &[-1.0, -0.5, 0.2, 1.0] {
            assert!((d.eval(v) - z * (z * v).exp()).norm() < 1e-12);
        }
    }

    #[test]
    fn reflection_matches_definition() {
        let f = Cheb::fit(|v: f64| v.exp(), 20);
        let r = f.reflect();
        assert!((r.eval(0.4) - (-0.4f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn tail_is_small_for_entire_functions() {
        let f = Cheb::fit(|v: f64| (2.0 * v).cos(), 32);
        assert!(f.tail_norm() < 1e-12);
        let g = Cheb::fit(|v: f64| v.abs(), 32);
        assert!(g.tail_norm() > 1e-3);
    }
}
