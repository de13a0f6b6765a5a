//! First-order (Iooss–Kirchgässner) formulation of the traveling-wave problem.
//!
//! A traveling wave `u_j(t) = p_{parity(j)}(j - c t)` of the dimer solves an
//! advance-delay system.  Collecting the profile values, their derivatives and
//! their shifted windows into
//!
//! ```text
//! U(x) = (p_1(x), p_2(x), p_1'(x), p_2'(x), v -> p_1(x + v), v -> p_2(x + v)),  v in [-1, 1],
//! ```
//!
//! turns it into the evolution equation `U' = F(U; c)` on a space whose last
//! two components are functions on `[-1, 1]`.  Shifts become endpoint
//! evaluations and the function components are transported by `d/dv`.
//!
//! This module provides the state vectors, the linear operators `L`, `L_0`,
//! `L_1`, the nonlinearity, the reversing symmetries, the eigenvectors and the
//! Jordan chain at the origin.  The resolvent, the contour-integral spectral
//! projection and the coefficient functionals live in [`resolvent`] and
//! [`functionals`].

pub mod functionals;
pub mod resolvent;

use num_complex::Complex64;
use rand::Rng;
use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::cheb::{Cheb, DEFAULT_DEGREE};
use crate::dispersion::sound_speed;
use crate::error::{Error, Result};
use crate::params::{DimerKind, DimerParams};
use crate::scalar::Scalar;

/// Tail-norm threshold for membership in the operator domain.
pub const DOMAIN_TAIL_TOL: f64 = 1e-8;

/// Element `(p_1, p_2, xi_1, xi_2, P_1, P_2)` of the state space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T: Scalar> {
    /// Profile value of the odd-site component.
    pub p1: T,
    /// Profile value of the even-site component.
    pub p2: T,
    /// Derivative of the odd-site component.
    pub xi1: T,
    /// Derivative of the even-site component.
    pub xi2: T,
    /// Window `v -> p_1(x + v)`.
    pub big_p1: Cheb<T>,
    /// Window `v -> p_2(x + v)`.
    pub big_p2: Cheb<T>,
}

impl<T: Scalar> StateVector<T> {
    /// The zero state.
    pub fn zero(degree: usize) -> Self {
        Self {
            p1: T::zero(),
            p2: T::zero(),
            xi1: T::zero(),
            xi2: T::zero(),
            big_p1: Cheb::zero(degree),
            big_p2: Cheb::zero(degree),
        }
    }

    /// Build a state whose scalar profile values are taken from the windows,
    /// so that `P_j(0) = p_j` holds by construction.
    pub fn from_windows(xi1: T, xi2: T, big_p1: Cheb<T>, big_p2: Cheb<T>) -> Self {
        Self { p1: big_p1.eval(0.0), p2: big_p2.eval(0.0), xi1, xi2, big_p1, big_p2 }
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: T, other: &Self, b: T) -> Self {
        Self {
            p1: self.p1 * a + other.p1 * b,
            p2: self.p2 * a + other.p2 * b,
            xi1: self.xi1 * a + other.xi1 * b,
            xi2: self.xi2 * a + other.xi2 * b,
            big_p1: self.big_p1.axpby(a, &other.big_p1, b),
            big_p2: self.big_p2.axpby(a, &other.big_p2, b),
        }
    }

    /// `self + other`.
    pub fn add(&self, other: &Self) -> Self {
        self.axpby(T::one(), other, T::one())
    }

    /// `self - other`.
    pub fn sub(&self, other: &Self) -> Self {
        self.axpby(T::one(), other, -T::one())
    }

    /// `a * self`.
    pub fn scale(&self, a: T) -> Self {
        Self {
            p1: self.p1 * a,
            p2: self.p2 * a,
            xi1: self.xi1 * a,
            xi2: self.xi2 * a,
            big_p1: self.big_p1.scale(a),
            big_p2: self.big_p2.scale(a),
        }
    }

    /// Sampled sup norm: max over the four scalars and a uniform sample of
    /// the two function components.
    pub fn sup_norm(&self) -> f64 {
        [self.p1, self.p2, self.xi1, self.xi2]
            .iter()
            .map(|v| v.modulus())
            .fold(0.0, f64::max)
            .max(self.big_p1.sup_norm())
            .max(self.big_p2.sup_norm())
    }

    /// Mismatch `max |P_j(0) - p_j|` measuring membership in the state space.
    pub fn membership_defect(&self) -> f64 {
        (self.big_p1.eval(0.0) - self.p1)
            .modulus()
            .max((self.big_p2.eval(0.0) - self.p2).modulus())
    }

    /// Largest degree-weighted Chebyshev tail of the two function components.
    pub fn tail_norm(&self) -> f64 {
        self.big_p1.tail_norm().max(self.big_p2.tail_norm())
    }

    /// Fail with [`Error::NotInDomain`] unless the function components are
    /// resolved well enough to be differentiated.
    pub fn check_domain(&self) -> Result<()> {
        let tail = self.tail_norm();
        if tail > DOMAIN_TAIL_TOL {
            Err(Error::NotInDomain { tail, tol: DOMAIN_TAIL_TOL })
        } else {
            Ok(())
        }
    }

    /// Promote to a complex state.
    pub fn to_complex(&self) -> StateVector<Complex64> {
        StateVector {
            p1: self.p1.to_complex(),
            p2: self.p2.to_complex(),
            xi1: self.xi1.to_complex(),
            xi2: self.xi2.to_complex(),
            big_p1: self.big_p1.to_complex(),
            big_p2: self.big_p2.to_complex(),
        }
    }

    /// Polynomial degree of the function components.
    pub fn degree(&self) -> usize {
        self.big_p1.degree().max(self.big_p2.degree())
    }
}

impl StateVector<Complex64> {
    /// Real part of every component.
    pub fn real_part(&self) -> StateVector<f64> {
        StateVector {
            p1: self.p1.re,
            p2: self.p2.re,
            xi1: self.xi1.re,
            xi2: self.xi2.re,
            big_p1: self.big_p1.real_part(),
            big_p2: self.big_p2.real_part(),
        }
    }
}

impl<T: Scalar + Serialize> Serialize for StateVector<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("StateVector", 7)?;
        s.serialize_field("p1", &self.p1)?;
        s.serialize_field("p2", &self.p2)?;
        s.serialize_field("xi1", &self.xi1)?;
        s.serialize_field("xi2", &self.xi2)?;
        s.serialize_field("P1", &self.big_p1.coeffs)?;
        s.serialize_field("P2", &self.big_p2.coeffs)?;
        s.serialize_field("field", T::FIELD)?;
        s.end()
    }
}

/// A seeded random real state in the operator domain.
///
/// The windows are smooth (random cubic polynomials plus a random
/// exponential), so every spectral computation is resolved to roundoff.
pub fn random_state<R: Rng>(rng: &mut R, degree: usize) -> StateVector<f64> {
    let window = |rng: &mut R| {
        let a: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let amp = rng.random_range(-1.0..1.0);
        let rate = rng.random_range(-1.5..1.5);
        Cheb::fit(
            move |v: f64| a[0] + a[1] * v + a[2] * v * v + a[3] * v * v * v + amp * (rate * v).exp(),
            degree,
        )
    };
    let p1w = window(rng);
    let p2w = window(rng);
    let xi1 = rng.random_range(-1.0..1.0);
    let xi2 = rng.random_range(-1.0..1.0);
    StateVector::from_windows(xi1, xi2, p1w, p2w)
}

/// Evaluate `sum_n coeffs[n] r^{n+1}` over `n >= start` for a generic scalar.
fn force_tail<T: Scalar>(coeffs: &[f64], r: T, start: usize) -> T {
    let mut acc = T::zero();
    let mut pow = r;
    for (n, &c) in coeffs.iter().enumerate() {
        if n >= start {
            acc += pow * c;
        }
        pow *= r;
    }
    acc
}

/// Spring elongations read off a state: `(P_2(1) - p_1, p_1 - P_2(-1),
/// P_1(1) - p_2, p_2 - P_1(-1))`.
fn elongations<T: Scalar>(u: &StateVector<T>) -> [T; 4] {
    [
        u.big_p2.eval(1.0) - u.p1,
        u.p1 - u.big_p2.eval(-1.0),
        u.big_p1.eval(1.0) - u.p2,
        u.p2 - u.big_p1.eval(-1.0),
    ]
}

/// Linear operator `L(c)`.
pub fn apply_l<T: Scalar>(p: &DimerParams, c: f64, u: &StateVector<T>) -> Result<StateVector<T>> {
    u.check_domain()?;
    let inv_c2 = 1.0 / (c * c);
    let k = p.kappa;
    let comp3 = (u.p1 * (-(1.0 + k)) + u.big_p2.eval(1.0) + u.big_p2.eval(-1.0) * k) * inv_c2;
    let comp4 =
        (u.p2 * (-(1.0 + k)) + u.big_p1.eval(1.0) * k + u.big_p1.eval(-1.0)) * (inv_c2 * p.w);
    Ok(StateVector {
        p1: u.xi1,
        p2: u.xi2,
        xi1: comp3,
        xi2: comp4,
        big_p1: u.big_p1.derivative(),
        big_p2: u.big_p2.derivative(),
    })
}

/// `L_0 = L(c_s)`.
pub fn apply_l0<T: Scalar>(p: &DimerParams, u: &StateVector<T>) -> Result<StateVector<T>> {
    apply_l(p, sound_speed(p), u)
}

/// Near-sonic correction `L_1`, defined by `L(c_mu) = L_0 + mu L_1` where
/// `1/c_mu^2 = 1/c_s^2 - mu`.
pub fn apply_l1<T: Scalar>(p: &DimerParams, u: &StateVector<T>) -> Result<StateVector<T>> {
    u.check_domain()?;
    let k = p.kappa;
    let d = u.big_p1.degree();
    let comp3 = u.p1 * (1.0 + k) - (u.big_p2.eval(1.0) + u.big_p2.eval(-1.0) * k);
    let comp4 = (u.p2 * (1.0 + k) - (u.big_p1.eval(1.0) * k + u.big_p1.eval(-1.0))) * p.w;
    Ok(StateVector {
        p1: T::zero(),
        p2: T::zero(),
        xi1: comp3,
        xi2: comp4,
        big_p1: Cheb::zero(d),
        big_p2: Cheb::zero(u.big_p2.degree()),
    })
}

/// Symmetric bilinear quadratic part of the spring forces, before the
/// `1/c^2` factor.
pub fn nl0_raw<T: Scalar>(p: &DimerParams, u: &StateVector<T>, v: &StateVector<T>) -> StateVector<T> {
    let q1 = p.force1.get(1).copied().unwrap_or(0.0);
    let q2 = p.force2.get(1).copied().unwrap_or(0.0);
    let a = elongations(u);
    let b = elongations(v);
    let comp3 = a[0] * b[0] * q1 - a[1] * b[1] * q2;
    let comp4 = (a[2] * b[2] * q2 - a[3] * b[3] * q1) * p.w;
    let d = u.degree();
    StateVector {
        p1: T::zero(),
        p2: T::zero(),
        xi1: comp3,
        xi2: comp4,
        big_p1: Cheb::zero(d),
        big_p2: Cheb::zero(d),
    }
}

/// Quadratic nonlinearity at the speed of sound, `nl_0(U, V) = c_s^{-2} nl0_raw(U, V)`.
pub fn nl0<T: Scalar>(p: &DimerParams, u: &StateVector<T>, v: &StateVector<T>) -> StateVector<T> {
    let cs = sound_speed(p);
    nl0_raw(p, u, v).scale(T::from(1.0 / (cs * cs)))
}

/// Superquadratic remainder of the spring forces, before the `1/c^2` factor.
pub fn nl1_raw<T: Scalar>(p: &DimerParams, u: &StateVector<T>) -> StateVector<T> {
    let a = elongations(u);
    let comp3 = force_tail(&p.force1, a[0], 2) - force_tail(&p.force2, a[1], 2);
    let comp4 = (force_tail(&p.force2, a[2], 2) - force_tail(&p.force1, a[3], 2)) * p.w;
    let d = u.degree();
    StateVector {
        p1: T::zero(),
        p2: T::zero(),
        xi1: comp3,
        xi2: comp4,
        big_p1: Cheb::zero(d),
        big_p2: Cheb::zero(d),
    }
}

/// Largest admissible near-sonic parameter, `1/(2 c_s^2)`.
pub fn mu_max(p: &DimerParams) -> f64 {
    let cs = sound_speed(p);
    0.5 / (cs * cs)
}

/// Wave speed `c_mu` with `1/c_mu^2 = 1/c_s^2 - mu`.
pub fn speed_from_mu(p: &DimerParams, mu: f64) -> Result<f64> {
    let max = mu_max(p);
    if !(-max..=max).contains(&mu) {
        return Err(Error::MuOutOfRange { mu, max });
    }
    let cs = sound_speed(p);
    Ok((cs * cs / (1.0 - mu * cs * cs)).sqrt())
}

/// Near-sonic parameter of a wave speed: `mu = 1/c_s^2 - 1/c^2`.
pub fn mu_from_speed(p: &DimerParams, c: f64) -> f64 {
    let cs = sound_speed(p);
    1.0 / (cs * cs) - 1.0 / (c * c)
}

/// Full nonlinearity `nl(U, mu)` of the split `F = L_0 U + mu L_1 U + nl(U, mu)`:
/// `(c_s^{-2} - mu) (nl0_raw(U, U) + nl1_raw(U))`.
pub fn apply_nl<T: Scalar>(p: &DimerParams, mu: f64, u: &StateVector<T>) -> StateVector<T> {
    let cs = sound_speed(p);
    let factor = 1.0 / (cs * cs) - mu;
    nl0_raw(p, u, u).add(&nl1_raw(p, u)).scale(T::from(factor))
}

/// The full vector field `F(U; c)`, evaluated directly from the spring forces.
pub fn vector_field(p: &DimerParams, c: f64, u: &StateVector<f64>) -> Result<StateVector<f64>> {
    u.check_domain()?;
    let inv_c2 = 1.0 / (c * c);
    let e = elongations(u);
    Ok(StateVector {
        p1: u.xi1,
        p2: u.xi2,
        xi1: inv_c2 * (p.v1p(e[0]) - p.v2p(e[1])),
        xi2: inv_c2 * p.w * (p.v2p(e[2]) - p.v1p(e[3])),
        big_p1: u.big_p1.derivative(),
        big_p2: u.big_p2.derivative(),
    })
}

/// Reversing symmetry of a mass or spring dimer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryKind {
    /// `(p, xi, P) -> (-p, xi, -R P)`; requires identical springs.
    MassDimer,
    /// `(p, xi, P) -> (-J p, J xi, -R J P)` with `J` the component swap;
    /// requires equal masses.
    SpringDimer,
}

impl SymmetryKind {
    /// The symmetry that applies to `p`, if any.
    pub fn for_params(p: &DimerParams) -> Option<Self> {
        match p.kind() {
            DimerKind::Mass | DimerKind::Monatomic => Some(Self::MassDimer),
            DimerKind::Spring => Some(Self::SpringDimer),
            DimerKind::General => None,
        }
    }

    /// Check that this symmetry is admissible for `p`.
    pub fn check(self, p: &DimerParams) -> Result<()> {
        let ok = match self {
            Self::MassDimer => p.kappa == 1.0 && p.force1 == p.force2,
            Self::SpringDimer => p.w == 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Unsupported(format!(
                "{self:?} symmetry requires {}",
                match self {
                    Self::MassDimer => "identical springs (kappa = 1, V_1 = V_2)",
                    Self::SpringDimer => "equal masses (w = 1)",
                }
            )))
        }
    }
}

/// Apply a reversing symmetry.
pub fn symmetry_apply<T: Scalar>(kind: SymmetryKind, u: &StateVector<T>) -> StateVector<T> {
    match kind {
        SymmetryKind::MassDimer => StateVector {
            p1: -u.p1,
            p2: -u.p2,
            xi1: u.xi1,
            xi2: u.xi2,
            big_p1: u.big_p1.reflect().scale(-T::one()),
            big_p2: u.big_p2.reflect().scale(-T::one()),
        },
        SymmetryKind::SpringDimer => StateVector {
            p1: -u.p2,
            p2: -u.p1,
            xi1: u.xi2,
            xi2: u.xi1,
            big_p1: u.big_p2.reflect().scale(-T::one()),
            big_p2: u.big_p1.reflect().scale(-T::one()),
        },
    }
}

/// Eigenvector `E(z) = (E, 1, z E, z, E e^{z v}, e^{z v})` with
/// `E = (e^z + kappa e^{-z}) / (c^2 z^2 + 1 + kappa)`; it satisfies
/// `L E(z) = z E(z)` whenever `det M(z) = 0`.
pub fn eigvec_e(z: Complex64, p: &DimerParams, c: f64) -> Result<StateVector<Complex64>> {
    let denom = z * z * (c * c) + 1.0 + p.kappa;
    if denom.norm() < 1e-12 {
        return Err(Error::SingularDenominator(format!("c^2 z^2 + 1 + kappa = 0 at z = {z}")));
    }
    let e = (z.exp() + (-z).exp() * p.kappa) / denom;
    let one = Complex64::new(1.0, 0.0);
    let exp_window = Cheb::fit(|v| (z * v).exp(), DEFAULT_DEGREE);
    Ok(StateVector {
        p1: e,
        p2: one,
        xi1: z * e,
        xi2: z,
        big_p1: exp_window.scale(e),
        big_p2: exp_window,
    })
}

/// The Jordan chain `chi_0, ..., chi_3` of `L_0` at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct EigvecChain {
    /// Kernel vector `(1, 1, 0, 0, 1, 1)`.
    pub chi0: StateVector<f64>,
    /// First generalized eigenvector.
    pub chi1: StateVector<f64>,
    /// Second generalized eigenvector.
    pub chi2: StateVector<f64>,
    /// Third generalized eigenvector.
    pub chi3: StateVector<f64>,
}

impl EigvecChain {
    /// The chain as an array indexed by `k`.
    pub fn as_array(&self) -> [&StateVector<f64>; 4] {
        [&self.chi0, &self.chi1, &self.chi2, &self.chi3]
    }
}

/// Constants `(d, a, b)` of the chain: `d = (1-kappa)/(2(1+kappa))`,
/// `a = kappa (1-w) / ((1+kappa)^2 (1+w))`,
/// `b = (kappa-1)(kappa^2+14 kappa+1) / (24 (1+kappa)^3)`.
pub fn chain_constants(p: &DimerParams) -> (f64, f64, f64) {
    let k = p.kappa;
    let w = p.w;
    let d = (1.0 - k) / (2.0 * (1.0 + k));
    let a = k * (1.0 - w) / ((1.0 + k).powi(2) * (1.0 + w));
    let b = (k - 1.0) * (k * k + 14.0 * k + 1.0) / (24.0 * (1.0 + k).powi(3));
    (d, a, b)
}

/// The explicit generalized eigenvectors.  Their window components are the
/// cubic polynomials
///
/// ```text
/// chi_1: v + d,                    v - d
/// chi_2: v^2/2 + d v + a,          v^2/2 - d v - a
/// chi_3: v^3/6 + d v^2/2 + a v + b, v^3/6 - d v^2/2 - a v - b
/// ```
///
/// and every state is in the state space and the domain, with `xi_j` equal to
/// the window derivative at `0`.
pub fn gen_eigvec_chain(p: &DimerParams) -> EigvecChain {
    let (d, a, b) = chain_constants(p);
    let deg = DEFAULT_DEGREE;
    let mk = |m1: &[f64], m2: &[f64]| {
        let w1 = Cheb::from_monomials(m1, deg);
        let w2 = Cheb::from_monomials(m2, deg);
        let xi1 = m1.get(1).copied().unwrap_or(0.0);
        let xi2 = m2.get(1).copied().unwrap_or(0.0);
        StateVector { p1: m1[0], p2: m2[0], xi1, xi2, big_p1: w1, big_p2: w2 }
    };
    EigvecChain {
        chi0: mk(&[1.0], &[1.0]),
        chi1: mk(&[d, 1.0], &[-d, 1.0]),
        chi2: mk(&[a, d, 0.5], &[-a, -d, 0.5]),
        chi3: mk(&[b, a, 0.5 * d, 1.0 / 6.0], &[-b, -a, -0.5 * d, 1.0 / 6.0]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::{det_m, omega_star};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diff_norm(a: &StateVector<f64>, b: &StateVector<f64>) -> f64 {
        a.sub(b).sup_norm()
    }

    #[test]
    fn jordan_chain_relations() {
        for p in [
            DimerParams::mass(2.0).unwrap(),
            DimerParams::spring(3.0, 1.0).unwrap(),
            DimerParams::new(1.7, 0.3, 2.4).unwrap(),
        ] {
            let ch = gen_eigvec_chain(&p);
            let x = ch.as_array();
            assert!(apply_l0(&p, x[0]).unwrap().sup_norm() < 1e-12);
            for k in 0..3 {
                let lx = apply_l0(&p, x[k + 1]).unwrap();
                assert!(diff_norm(&lx, x[k]) < 1e-12, "k = {k}");
            }
            for v in x {
                assert!(v.membership_defect() < 1e-14);
            }
        }
    }

    #[test]
    fn mass_dimer_chain_is_simple_at_kappa_one() {
        let ch = gen_eigvec_chain(&DimerParams::mass(3.0).unwrap());
        assert!((ch.chi1.big_p1.eval(0.4) - 0.4).abs() < 1e-15);
        assert!((ch.chi1.big_p2.eval(0.4) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn symmetry_parity_of_chain() {
        for (p, kind) in [
            (DimerParams::mass(2.0).unwrap(), SymmetryKind::MassDimer),
            (DimerParams::spring(2.0, 0.5).unwrap(), SymmetryKind::SpringDimer),
        ] {
            let ch = gen_eigvec_chain(&p);
            for (k, x) in ch.as_array().into_iter().enumerate() {
                let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
                let sx = symmetry_apply(kind, x);
                assert!(diff_norm(&sx, &x.scale(sign)) < 1e-12, "{kind:?} k = {k}");
            }
        }
    }

    #[test]
    fn symmetries_anticommute_with_vector_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (p, kind) in [
            (DimerParams::mass(2.0).unwrap(), SymmetryKind::MassDimer),
            (DimerParams::spring(2.0, 0.5).unwrap(), SymmetryKind::SpringDimer),
        ] {
            let c = 1.1 * sound_speed(&p);
            for _ in 0..10 {
                let u = random_state(&mut rng, DEFAULT_DEGREE);
                let su = symmetry_apply(kind, &u);
                let lhs = symmetry_apply(kind, &vector_field(&p, c, &u).unwrap());
                let rhs = vector_field(&p, c, &su).unwrap();
                assert!(lhs.add(&rhs).sup_norm() < 1e-11);
                let l1 = symmetry_apply(kind, &apply_l(&p, c, &u).unwrap());
                let l2 = apply_l(&p, c, &su).unwrap();
                assert!(l1.add(&l2).sup_norm() < 1e-11);
                // involution
                assert!(diff_norm(&symmetry_apply(kind, &su), &u) < 1e-13);
            }
        }
    }

    #[test]
    fn eigenvector_at_critical_frequency() {
        let p = DimerParams::mass(2.0).unwrap();
        let cs = sound_speed(&p);
        let om = omega_star(&p).unwrap();
        let z = Complex64::new(0.0, om);
        let e = eigvec_e(z, &p, cs).unwrap();
        let le = apply_l(&p, cs, &e).unwrap();
        assert!(le.sub(&e.scale(z)).sup_norm() < 1e-10);
        // Away from the spectrum the eigen-relation fails.
        let z = Complex64::new(0.2, 0.7);
        assert!(det_m(z, &p, cs).norm() > 1e-3);
        let e = eigvec_e(z, &p, cs).unwrap();
        assert!(apply_l(&p, cs, &e).unwrap().sub(&e.scale(z)).sup_norm() > 1e-4);
    }

    #[test]
    fn eigenvector_at_origin_is_kernel_vector() {
        let p = DimerParams::mass(2.0).unwrap();
        let e = eigvec_e(Complex64::new(0.0, 0.0), &p, 1.0).unwrap();
        let chi0 = gen_eigvec_chain(&p).chi0.to_complex();
        assert!(e.sub(&chi0).sup_norm() < 1e-14);
    }

    #[test]
    fn l_splits_into_l0_plus_mu_l1() {
        let p = DimerParams::new(1.7, 0.3, 2.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_state(&mut rng, DEFAULT_DEGREE);
        let l1 = apply_l1(&p, &u).unwrap();
        for &mu in &[1e-2, 1e-3] {
            let c = speed_from_mu(&p, mu).unwrap();
            let fd = apply_l(&p, c, &u).unwrap().sub(&apply_l0(&p, &u).unwrap()).scale(1.0 / mu);
            assert!(diff_norm(&fd, &l1) < 1e-9);
        }
        let ch = gen_eigvec_chain(&p);
        assert!(apply_l1(&p, &ch.chi0).unwrap().sup_norm() < 1e-13);
        assert!(apply_l1(&p, &ch.chi1).unwrap().sup_norm() < 1e-13);
    }

    #[test]
    fn split_reproduces_vector_field() {
        let p = DimerParams::new(1.7, 0.3, 2.4)
            .unwrap()
            .with_forces(vec![1.0, 1.0, 0.4], vec![1.7, 0.3, -0.2])
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = random_state(&mut rng, DEFAULT_DEGREE);
        let mu = 0.05;
        let c = speed_from_mu(&p, mu).unwrap();
        let f = vector_field(&p, c, &u).unwrap();
        let split = apply_l0(&p, &u)
            .unwrap()
            .add(&apply_l1(&p, &u).unwrap().scale(mu))
            .add(&apply_nl(&p, mu, &u));
        assert!(diff_norm(&f, &split) < 1e-12);
    }

    #[test]
    fn nonlinearity_is_translation_invariant() {
        let p = DimerParams::new(1.7, 0.3, 2.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random_state(&mut rng, DEFAULT_DEGREE);
        let chi0 = gen_eigvec_chain(&p).chi0;
        let base = apply_nl(&p, 0.1, &u);
        for &g in &[-1.0, 0.5, 3.0] {
            let shifted = apply_nl(&p, 0.1, &u.add(&chi0.scale(g)));
            assert!(diff_norm(&shifted, &base) < 1e-13);
        }
        assert_eq!(apply_nl(&p, 0.1, &StateVector::<f64>::zero(8)).sup_norm(), 0.0);
    }

    #[test]
    fn domain_check_rejects_rough_windows() {
        let rough = Cheb::fit(|v: f64| v.abs(), DEFAULT_DEGREE);
        let u = StateVector::from_windows(0.0, 0.0, rough.clone(), rough);
        let p = DimerParams::mass(2.0).unwrap();
        assert!(matches!(apply_l0(&p, &u), Err(Error::NotInDomain { .. })));
    }
}
