//! Coefficient functionals `chi_k^*` of the spectral projection onto the
//! generalized kernel of `L_0`:
//!
//! ```text
//! Pi_0 U = sum_{k=0}^{3} chi_k^*[U] chi_k.
//! ```
//!
//! Because `(chi_0)_1 = (chi_0)_2 = 1` and `(chi_k)_1 = -(chi_k)_2` for
//! `k >= 1`, the functional `chi_m^*[U]` equals half the sum of the first two
//! components of the `z^{-(m+1)}` Laurent coefficient of the resolvent at the
//! origin.  Those components are `(a_1(z) B_1(z) + a_2(z) B_2(z)) / det M(z)`
//! with
//!
//! ```text
//! a_1 = c^2 z^2 + w(1+kappa) + w(kappa e^z + e^{-z}),
//! a_2 = c^2 z^2 + 1 + kappa + e^z + kappa e^{-z},
//! ```
//!
//! and `B_1`, `B_2` linear in `U`.  Expanding everything in powers of `z`
//! (`det M(z) = z^4 (d_0 + d_2 z^2 + ...)` at `c = c_s`) gives each `chi_m^*`
//! as a combination of the four scalars plus polynomial-weighted integrals of
//! the windows over `[0, 1]` and `[-1, 0]`.  [`FunctionalKernel`] holds those
//! coefficients, computed exactly by truncated power-series arithmetic.
//!
//! [`functional_chi_printed`] evaluates an alternative closed-form
//! transcription with externally supplied normalization constants; it is kept
//! for comparison reports.

use crate::dispersion::{sound_speed, taylor_lambda_at_zero};
use crate::params::DimerParams;
use crate::quadrature::{clenshaw_curtis, Rule};
use crate::scalar::Scalar;

use super::StateVector;

/// Clenshaw–Curtis order used on each half interval.
pub const CC_ORDER: usize = 64;

/// Polynomial in `s`, lowest degree first.
type Poly = Vec<f64>;

fn poly_add(a: &Poly, b: &Poly) -> Poly {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or(0.0) + b.get(i).copied().unwrap_or(0.0))
        .collect()
}

fn poly_scale(a: &Poly, s: f64) -> Poly {
    a.iter().map(|x| x * s).collect()
}

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_eval(a: &Poly, s: f64) -> f64 {
    a.iter().rev().fold(0.0, |acc, &c| acc * s + c)
}

/// Power series in `z` truncated after `z^3`, with coefficients polynomial in `s`.
const ORDER: usize = 4;
type Series = [Poly; ORDER];

fn series_const(coeffs: [f64; ORDER]) -> Series {
    coeffs.map(|c| vec![c])
}

fn series_mul(a: &Series, b: &Series) -> Series {
    std::array::from_fn(|n| {
        (0..=n).fold(Vec::new(), |acc, i| poly_add(&acc, &poly_mul(&a[i], &b[n - i])))
    })
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `(1-s)^n / n!`: Taylor coefficients of `e^{z(1-s)}`.
fn exp_forward() -> Series {
    std::array::from_fn(|n| {
        let mut p = vec![1.0];
        for _ in 0..n {
            p = poly_mul(&p, &vec![1.0, -1.0]);
        }
        poly_scale(&p, 1.0 / factorial(n))
    })
}

/// `(-1)^n (1+s)^n / n!`: Taylor coefficients of `e^{-z(1+s)}`.
fn exp_backward() -> Series {
    std::array::from_fn(|n| {
        let mut p = vec![1.0];
        for _ in 0..n {
            p = poly_mul(&p, &vec![-1.0, -1.0]);
        }
        poly_scale(&p, 1.0 / factorial(n))
    })
}

/// Kernel of one coefficient functional:
///
/// ```text
/// chi^*[U] = p1 p_1 + p2 p_2 + xi1 xi_1 + xi2 xi_2
///          + int_0^1 k1_pos(s) P_1(s) ds + int_{-1}^0 k1_neg(s) P_1(s) ds
///          + int_0^1 k2_pos(s) P_2(s) ds + int_{-1}^0 k2_neg(s) P_2(s) ds,
/// ```
///
/// with polynomial weights stored lowest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalKernel {
    /// Weight of `p_1`.
    pub p1: f64,
    /// Weight of `p_2`.
    pub p2: f64,
    /// Weight of `xi_1`.
    pub xi1: f64,
    /// Weight of `xi_2`.
    pub xi2: f64,
    /// Weight of `P_1` on `[0, 1]`.
    pub k1_pos: Vec<f64>,
    /// Weight of `P_1` on `[-1, 0]`.
    pub k1_neg: Vec<f64>,
    /// Weight of `P_2` on `[0, 1]`.
    pub k2_pos: Vec<f64>,
    /// Weight of `P_2` on `[-1, 0]`.
    pub k2_neg: Vec<f64>,
}

/// Leading normalization constants of `1/det M(z)` at the speed of sound:
/// `z^4 / det M(z) = a_m4 + a_m2 z^2 + O(z^4)`.
///
/// In terms of the dispersion relation,
/// `a_m4 = 4! / Lambda''''(0)` and `a_m2 = (4/5) Lambda^{(6)}(0) / Lambda''''(0)^2`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Normalization {
    /// Coefficient of `z^{-4}` in `1/det M(z)`.
    pub a_m4: f64,
    /// Coefficient of `z^{-2}` in `1/det M(z)`.
    pub a_m2: f64,
}

impl Normalization {
    /// Constants from the Laurent expansion of `1/det M`.
    pub fn laurent(p: &DimerParams) -> Self {
        let t = taylor_lambda_at_zero(p, sound_speed(p), 6);
        let (d4, d6) = (t[4], t[6]);
        Self { a_m4: 24.0 / d4, a_m2: 0.8 * d6 / (d4 * d4) }
    }

    /// The same quantities with the opposite sign convention for `a_m2`
    /// (`a_m2 = -(4/5) Lambda^{(6)} / Lambda''''^2`); kept for comparison.
    pub fn negated_m2(p: &DimerParams) -> Self {
        let l = Self::laurent(p);
        Self { a_m4: l.a_m4, a_m2: -l.a_m2 }
    }

    /// Rational closed forms
    /// `-3 (1+kappa)^2 (1+w)^2 / (kappa w Q)` and
    /// `-(1+kappa)^4 (1+w)^4 / (10 kappa w Q)` with
    /// `Q = (1+kappa)^2 w^2 + 2 (kappa^2 - 4 kappa + 1) w + (1+kappa)^2`.
    /// They differ from [`Normalization::laurent`] (by a factor 4 in `a_m4`);
    /// kept for comparison reports.
    pub fn rational_closed_form(p: &DimerParams) -> Self {
        let k = p.kappa;
        let w = p.w;
        let q = (1.0 + k).powi(2) * w * w + 2.0 * (k * k - 4.0 * k + 1.0) * w + (1.0 + k).powi(2);
        Self {
            a_m4: -3.0 * (1.0 + k).powi(2) * (1.0 + w).powi(2) / (k * w * q),
            a_m2: -(1.0 + k).powi(4) * (1.0 + w).powi(4) / (10.0 * k * w * q),
        }
    }
}

/// The four functional kernels, computed exactly from the Laurent expansion
/// of the resolvent at the speed of sound.
pub fn functional_kernels(p: &DimerParams) -> [FunctionalKernel; 4] {
    let k = p.kappa;
    let w = p.w;
    let cs = sound_speed(p);
    let c2 = cs * cs;
    let norm = Normalization::laurent(p);
    let inv = series_const([norm.a_m4, 0.0, norm.a_m2, 0.0]);

    let a1 = series_const(std::array::from_fn(|n| {
        let mut v = w * (k + if n % 2 == 0 { 1.0 } else { -1.0 }) / factorial(n);
        if n == 0 {
            v += w * (1.0 + k);
        }
        if n == 2 {
            v += c2;
        }
        v
    }));
    let a2 = series_const(std::array::from_fn(|n| {
        let mut v = (1.0 + if n % 2 == 0 { k } else { -k }) / factorial(n);
        if n == 0 {
            v += 1.0 + k;
        }
        if n == 2 {
            v += c2;
        }
        v
    }));
    let z_times = series_const([0.0, c2, 0.0, 0.0]);
    let cst = series_const([c2, 0.0, 0.0, 0.0]);
    let fwd = exp_forward();
    let bwd = exp_backward();
    let scaled = |s: &Series, f: f64| -> Series { std::array::from_fn(|n| poly_scale(&s[n], f)) };

    let a1i = series_mul(&a1, &inv);
    let a2i = series_mul(&a2, &inv);
    let pieces = [
        series_mul(&a1i, &z_times),               // p1
        series_mul(&a2i, &z_times),               // p2
        series_mul(&a1i, &cst),                   // xi1
        series_mul(&a2i, &cst),                   // xi2
        series_mul(&a2i, &scaled(&fwd, -k * w)),  // P1 on [0,1]
        series_mul(&a2i, &scaled(&bwd, w)),       // P1 on [-1,0]
        series_mul(&a1i, &scaled(&fwd, -1.0)),    // P2 on [0,1]
        series_mul(&a1i, &scaled(&bwd, k)),       // P2 on [-1,0]
    ];
    std::array::from_fn(|m| {
        let idx = ORDER - 1 - m;
        let get = |i: usize| poly_scale(&pieces[i][idx], 0.5);
        let scalar = |i: usize| get(i).first().copied().unwrap_or(0.0);
        FunctionalKernel {
            p1: scalar(0),
            p2: scalar(1),
            xi1: scalar(2),
            xi2: scalar(3),
            k1_pos: get(4),
            k1_neg: get(5),
            k2_pos: get(6),
            k2_neg: get(7),
        }
    })
}

fn half_rules() -> (Rule, Rule) {
    let cc = clenshaw_curtis(CC_ORDER);
    (cc.mapped(0.0, 1.0), cc.mapped(-1.0, 0.0))
}

impl FunctionalKernel {
    /// Apply the functional to a state.
    pub fn apply<T: Scalar>(&self, u: &StateVector<T>) -> T {
        let (pos, neg) = half_rules();
        let int = |rule: &Rule, k: &Poly, f: &crate::cheb::Cheb<T>| -> T {
            rule.integrate(|s| f.eval(s) * poly_eval(k, s))
        };
        u.p1 * self.p1
            + u.p2 * self.p2
            + u.xi1 * self.xi1
            + u.xi2 * self.xi2
            + int(&pos, &self.k1_pos, &u.big_p1)
            + int(&neg, &self.k1_neg, &u.big_p1)
            + int(&pos, &self.k2_pos, &u.big_p2)
            + int(&neg, &self.k2_neg, &u.big_p2)
    }
}

/// `chi_k^*[U]` for `k = 0..=3`.
///
/// # Panics
/// If `k > 3`.
pub fn functional_chi<T: Scalar>(k: usize, u: &StateVector<T>, p: &DimerParams) -> T {
    assert!(k <= 3, "functional index must be 0..=3");
    functional_kernels(p)[k].apply(u)
}

/// All four coefficients `chi_0^*[U], ..., chi_3^*[U]`.
pub fn functional_all<T: Scalar>(u: &StateVector<T>, p: &DimerParams) -> [T; 4] {
    let ks = functional_kernels(p);
    std::array::from_fn(|k| ks[k].apply(u))
}

/// `sum_k chi_k^*[U] chi_k`, the closed-form spectral projection.
pub fn projection_from_functionals(p: &DimerParams, u: &StateVector<f64>) -> StateVector<f64> {
    let chain = super::gen_eigvec_chain(p);
    let coeffs = functional_all(u, p);
    chain
        .as_array()
        .iter()
        .zip(coeffs)
        .fold(StateVector::zero(u.degree()), |acc, (x, a)| acc.add(&x.scale(a)))
}

/// Alternative long-hand closed forms of `chi_k^*`, evaluated with the given
/// normalization constants.  Only `k = 2, 3` agree with [`functional_chi`] in
/// general; the comparison is reported by the command-line tool.
///
/// # Panics
/// If `k > 3`.
pub fn functional_chi_printed(k: usize, u: &StateVector<f64>, p: &DimerParams, norm: Normalization) -> f64 {
    let kap = p.kappa;
    let w = p.w;
    let cs = sound_speed(p);
    let c2 = cs * cs;
    let (a4, a2) = (norm.a_m4, norm.a_m2);
    let (pos, neg) = half_rules();
    let p1 = &u.big_p1;
    let p2 = &u.big_p2;
    let ip = |f: &dyn Fn(f64) -> f64| -> f64 { pos.integrate(|s| f(s)) };
    let ineg = |f: &dyn Fn(f64) -> f64| -> f64 { neg.integrate(|s| f(s)) };
    let big_a = (2.0 * c2 + w * (1.0 + kap)) * a4 + 4.0 * w * (1.0 + kap) * a2;
    let big_b = (2.0 * c2 + 1.0 + kap) * a4 + 4.0 * (1.0 + kap) * a2;
    match k {
        0 => {
            c2 / 4.0 * big_a * u.p1
                + c2 / 4.0 * big_b * u.p2
                + c2 * w * (kap - 1.0) * (a4 + 6.0 * a2) / 12.0 * (u.xi1 - u.xi2 / w)
                + a4 * w / 2.0
                    * ip(&|s| {
                        (1.0 - s).powi(2)
                            * ((1.0 + kap) * (1.0 - s) / 3.0 * (kap * p1.eval(s) + p2.eval(s))
                                + (kap - 1.0) / 2.0 * (kap * p1.eval(s) - p2.eval(s)))
                    })
                - a4 * w / 2.0
                    * ineg(&|s| {
                        (1.0 + s).powi(2)
                            * ((kap - 1.0) / 2.0 * (p1.eval(s) - kap * p2.eval(s))
                                + (1.0 + kap) * (1.0 + s) / 3.0 * (p1.eval(s) + kap * p2.eval(s)))
                    })
                + (a4 + 6.0 * a2) * (kap - 1.0) * w / 12.0
                    * (ip(&|s| kap * p1.eval(s) - p2.eval(s)) - ineg(&|s| p1.eval(s) - kap * p2.eval(s)))
                - w * big_b / 4.0
                    * (ip(&|s| kap * (1.0 - s) * p1.eval(s)) + ineg(&|s| (1.0 + s) * p1.eval(s)))
                - big_a / 4.0
                    * (ip(&|s| (1.0 - s) * p2.eval(s)) + ineg(&|s| kap * (1.0 + s) * p2.eval(s)))
        }
        1 => {
            a4 * c2 * (kap - 1.0) / 2.0 * (u.p1 - u.p2 / w)
                + c2 * big_a / 4.0 * u.xi1
                + c2 * big_b / 4.0 * u.xi2
                + a4 * w / 2.0
                    * ip(&|s| {
                        (1.0 - s)
                            * ((kap - 1.0) * (kap * p1.eval(s) - p2.eval(s))
                                + (1.0 + kap) * (s - 1.0) * (kap * p1.eval(s) + p2.eval(s)))
                    })
                + a4 * w / 2.0
                    * ineg(&|s| {
                        (1.0 + s)
                            * ((kap - 1.0) * (p1.eval(s) - kap * p2.eval(s))
                                + (1.0 + kap) * (1.0 + s) * (p1.eval(s) + kap * p2.eval(s)))
                    })
                - (w * (2.0 * c2 + 1.0 + kap) * a4 + 4.0 * (1.0 + kap) * a2) / 4.0
                    * (ip(&|s| kap * p1.eval(s)) - ineg(&|s| p1.eval(s)))
                - big_a / 4.0 * (ip(&|s| p2.eval(s)) - ineg(&|s| kap * p2.eval(s)))
        }
        2 => {
            a4 * c2 * w * ((1.0 + kap) * (u.p1 + u.p2 / w) + (kap - 1.0) / 2.0 * (u.xi1 - u.xi2 / w))
                + a4 * w
                    * ip(&|s| {
                        (1.0 + kap) * (s - 1.0) * (kap * p1.eval(s) + p2.eval(s))
                            + (kap - 1.0) / 2.0 * (kap * p1.eval(s) - p2.eval(s))
                    })
                - a4 * w
                    * ineg(&|s| {
                        (1.0 + kap) * (1.0 + s) * (p1.eval(s) + kap * p2.eval(s))
                            + (kap - 1.0) / 2.0 * (p1.eval(s) - kap * p2.eval(s))
                    })
        }
        3 => {
            a4 * w * (1.0 + kap) * c2 * (u.xi1 + u.xi2 / w)
                + a4 * w
                    * (1.0 + kap)
                    * (ineg(&|s| p1.eval(s) + kap * p2.eval(s)) - ip(&|s| kap * p1.eval(s) + p2.eval(s)))
        }
        _ => panic!("functional index must be 0..=3"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cheb::DEFAULT_DEGREE;
    use crate::state_space::resolvent::pi0;
    use crate::state_space::{apply_l0, gen_eigvec_chain, random_state, symmetry_apply, SymmetryKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn param_sets() -> Vec<DimerParams> {
        vec![
            DimerParams::mass(2.0).unwrap(),
            DimerParams::mass(0.5).unwrap(),
            DimerParams::spring(2.0, 1.0).unwrap(),
            DimerParams::spring(0.3, -0.4).unwrap(),
            DimerParams::new(1.7, 0.3, 2.4).unwrap(),
        ]
    }

    #[test]
    fn laurent_normalization_matches_derivatives() {
        let p = DimerParams::new(1.7, 0.3, 2.4).unwrap();
        let n = Normalization::laurent(&p);
        let r = Normalization::rational_closed_form(&p);
        assert!((r.a_m4 / n.a_m4 - 4.0).abs() < 1e-12);
        assert!(n.a_m4 < 0.0);
    }

    #[test]
    fn biorthogonality() {
        for p in param_sets() {
            let ch = gen_eigvec_chain(&p);
            for (k, x) in ch.as_array().into_iter().enumerate() {
                let vals = functional_all(x, &p);
                for (j, v) in vals.iter().enumerate() {
                    let want = if j == k { 1.0 } else { 0.0 };
                    assert!((v - want).abs() < 1e-10, "{p:?} j={j} k={k}: {v}");
                }
            }
        }
    }

    #[test]
    fn functionals_reproduce_contour_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for p in param_sets() {
            let u = random_state(&mut rng, DEFAULT_DEGREE);
            let oracle = pi0(&p, &u).unwrap();
            let closed = projection_from_functionals(&p, &u);
            assert!(oracle.sub(&closed).sup_norm() < 1e-8, "{p:?}");
        }
    }

    #[test]
    fn shift_identities_under_l0() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let p = DimerParams::new(1.7, 0.3, 2.4).unwrap();
        let u = random_state(&mut rng, DEFAULT_DEGREE);
        let lu = apply_l0(&p, &u).unwrap();
        let a = functional_all(&u, &p);
        let b = functional_all(&lu, &p);
        assert!(b[3].abs() < 1e-10);
        for k in 0..3 {
            assert!((b[k] - a[k + 1]).abs() < 1e-10);
        }
    }

    #[test]
    fn symmetry_parity_of_functionals() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for (p, kind) in [
            (DimerParams::mass(2.0).unwrap(), SymmetryKind::MassDimer),
            (DimerParams::spring(3.0, 1.0).unwrap(), SymmetryKind::SpringDimer),
        ] {
            let u = random_state(&mut rng, DEFAULT_DEGREE);
            let su = symmetry_apply(kind, &u);
            for k in 0..4 {
                let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
                let lhs = functional_chi(k, &su, &p);
                let rhs = sign * functional_chi(k, &u, &p);
                assert!((lhs - rhs).abs() < 1e-11, "{kind:?} k={k}");
            }
        }
    }

    #[test]
    fn long_hand_forms_agree_for_top_functionals() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for p in param_sets() {
            let u = random_state(&mut rng, DEFAULT_DEGREE);
            let norm = Normalization::laurent(&p);
            for k in [2, 3] {
                let a = functional_chi(k, &u, &p);
                let b = functional_chi_printed(k, &u, &p, norm);
                assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "{p:?} k={k}: {a} vs {b}");
            }
        }
    }
}
