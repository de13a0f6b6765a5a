//! Resolvent of `L(c)`, contour-integral spectral projections and Laurent
//! coefficients at the origin.
//!
//! For `z` off the spectrum, `(z - L) U = F` is solved by transporting the
//! windows with Duhamel's formula and reducing the profile values to a
//! `2 x 2` linear system whose determinant is `det M(z)`.  Integrating the
//! resolvent over a small circle with the trapezoid rule gives the Riesz
//! projection and, with monomial weights, the nilpotent parts of the Laurent
//! expansion; these serve as an independent oracle for the closed-form
//! coefficient functionals.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::cheb::{lobatto_points, Cheb};
use crate::dispersion::det_m;
use crate::error::{Error, Result};
use crate::params::DimerParams;
use crate::quadrature::{gauss_legendre, Rule};

use super::StateVector;

/// Default contour radius around the origin.
pub const DEFAULT_RADIUS: f64 = 0.3;
/// Default number of trapezoid nodes on the contour.
pub const DEFAULT_NODES: usize = 256;
/// Relative threshold on `|det M(z)|` below which `z` is treated as spectrum.
pub const SPECTRUM_TOL: f64 = 1e-10;

const GL_MIN_ORDER: usize = 16;
const GL_MAX_ORDER: usize = 256;

/// Gauss–Legendre rules of orders `GL_MIN_ORDER * 2^j` up to `GL_MAX_ORDER`,
/// built once: the resolvent evaluates them hundreds of times per contour.
fn gl_ladder() -> &'static [Rule] {
    static LADDER: OnceLock<Vec<Rule>> = OnceLock::new();
    LADDER.get_or_init(|| {
        std::iter::successors(Some(GL_MIN_ORDER), |&n| (n < GL_MAX_ORDER).then_some(2 * n))
            .map(gauss_legendre)
            .collect()
    })
}

fn gl_rule_for(z: Complex64, p: &Cheb<Complex64>) -> &'static Rule {
    // Pick the Gauss-Legendre order from the two longest integration ranges,
    // where the integrand is hardest to resolve.
    let ladder = gl_ladder();
    for pair in ladder.windows(2) {
        let converged = [1.0, -1.0].iter().all(|&v| {
            let a = duhamel_at(z, p, v, &pair[0]);
            let b = duhamel_at(z, p, v, &pair[1]);
            (a - b).norm() <= 1e-14 * (1.0 + b.norm())
        });
        if converged {
            return &pair[0];
        }
    }
    ladder.last().expect("non-empty ladder")
}

fn duhamel_at(z: Complex64, p: &Cheb<Complex64>, v: f64, rule: &Rule) -> Complex64 {
    if v == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let h = 0.5 * v;
    let mut acc = Complex64::new(0.0, 0.0);
    for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
        let s = h * (t + 1.0);
        acc += (z * (v - s)).exp() * p.eval(s) * wt;
    }
    -acc * h
}

/// Duhamel integral `v -> -int_0^v e^{z (v - s)} P(s) ds`.
///
/// The integral is evaluated at every Chebyshev–Lobatto node by Gauss–Legendre
/// quadrature (order doubled until converged) and re-fitted at the degree of
/// `P`.
pub fn duhamel_i(z: Complex64, p: &Cheb<Complex64>) -> Cheb<Complex64> {
    let n = p.degree().max(1);
    let rule = gl_rule_for(z, p);
    let vals: Vec<Complex64> =
        lobatto_points(n).into_iter().map(|v| duhamel_at(z, p, v, rule)).collect();
    Cheb::from_lobatto_values(&vals)
}

/// Magnitude scale of `det M(z)` used for the spectrum test.
fn det_scale(z: Complex64, p: &DimerParams, c: f64) -> f64 {
    let c2 = c * c;
    1.0 + c2 * c2 * z.norm_sqr().powi(2)
        + c2 * (1.0 + p.kappa) * (1.0 + p.w) * z.norm_sqr()
        + 2.0 * p.kappa * p.w * (2.0 * z).cosh().norm()
}

/// Resolvent `R(z) U = (z - L(c))^{-1} U`.
///
/// # Errors
/// [`Error::NearSpectrum`] when `|det M(z)|` is below `1e-10` times its
/// natural scale.
pub fn resolvent(
    z: Complex64,
    p: &DimerParams,
    c: f64,
    u: &StateVector<Complex64>,
) -> Result<StateVector<Complex64>> {
    let det = det_m(z, p, c);
    if det.norm() < SPECTRUM_TOL * det_scale(z, p, c) {
        return Err(Error::NearSpectrum(det.norm()));
    }
    let c2 = c * c;
    let k = p.kappa;
    let w = p.w;
    let i1 = duhamel_i(z, &u.big_p1);
    let i2 = duhamel_i(z, &u.big_p2);
    let b1 = u.xi1 * c2 + z * u.p1 * c2 + i2.eval(1.0) + i2.eval(-1.0) * k;
    let b2 = u.xi2 * c2 + z * u.p2 * c2 + i1.eval(1.0) * (k * w) + i1.eval(-1.0) * w;
    let ez = z.exp();
    let emz = (-z).exp();
    let zz = z * z * c2;
    let r1 = ((zz + w * (1.0 + k)) * b1 + (ez + emz * k) * b2) / det;
    let r2 = ((ez * k + emz) * w * b1 + (zz + 1.0 + k) * b2) / det;
    let deg = u.degree();
    let exp_window = Cheb::fit(|v| (z * v).exp(), deg);
    Ok(StateVector {
        p1: r1,
        p2: r2,
        xi1: z * r1 - u.p1,
        xi2: z * r2 - u.p2,
        big_p1: exp_window.axpby(r1, &i1, Complex64::new(1.0, 0.0)),
        big_p2: exp_window.axpby(r2, &i2, Complex64::new(1.0, 0.0)),
    })
}

fn contour_nodes(center: Complex64, radius: f64, nodes: usize) -> impl Iterator<Item = (Complex64, Complex64)> {
    (0..nodes).map(move |j| {
        let theta = 2.0 * PI * (j as f64 + 0.5) / nodes as f64;
        let e = Complex64::from_polar(1.0, theta);
        // dz / (2 pi i) per node: radius e^{i theta} / N
        (center + e * radius, e * (radius / nodes as f64))
    })
}

/// Number of zeros of `det M` inside the circle, by the argument principle.
pub fn contour_zero_count(p: &DimerParams, c: f64, center: Complex64, radius: f64, nodes: usize) -> i64 {
    let pts: Vec<Complex64> = contour_nodes(center, radius, nodes).map(|(z, _)| det_m(z, p, c)).collect();
    let mut total = 0.0;
    for j in 0..pts.len() {
        let a = pts[j];
        let b = pts[(j + 1) % pts.len()];
        total += (b / a).arg();
    }
    (total / (2.0 * PI)).round() as i64
}

fn check_contour(p: &DimerParams, c: f64, center: Complex64, radius: f64, nodes: usize) -> Result<()> {
    for (z, _) in contour_nodes(center, radius, nodes) {
        let d = det_m(z, p, c);
        if d.norm() < 1e-8 * det_scale(z, p, c) {
            return Err(Error::ContourThroughSpectrum(z.norm()));
        }
    }
    Ok(())
}

/// Weighted contour integral `(1/2 pi i) oint (z - center)^m R(z) U dz`.
fn weighted_contour(
    p: &DimerParams,
    c: f64,
    center: Complex64,
    radius: f64,
    nodes: usize,
    m: u32,
    u: &StateVector<Complex64>,
) -> Result<StateVector<Complex64>> {
    check_contour(p, c, center, radius, nodes)?;
    let mut acc = StateVector::zero(u.degree());
    let one = Complex64::new(1.0, 0.0);
    for (z, dz) in contour_nodes(center, radius, nodes) {
        let r = resolvent(z, p, c, u).map_err(|_| Error::ContourThroughSpectrum(z.norm()))?;
        let weight = dz * (z - center).powu(m);
        acc = acc.axpby(one, &r, weight);
    }
    Ok(acc)
}

/// Riesz projection `(1/2 pi i) oint R(z) U dz` over the circle
/// `|z - center| = radius`, by the `nodes`-point trapezoid rule.
///
/// # Errors
/// [`Error::ContourThroughSpectrum`] if `det M` nearly vanishes on the circle.
pub fn contour_projection(
    p: &DimerParams,
    c: f64,
    center: Complex64,
    radius: f64,
    nodes: usize,
    u: &StateVector<Complex64>,
) -> Result<StateVector<Complex64>> {
    weighted_contour(p, c, center, radius, nodes, 0, u)
}

/// Laurent coefficient operators at the origin: `(1/2 pi i) oint z^m R(z) U dz`.
///
/// With `R(z) = Pi_0/z + N/z^2 + N^2/z^3 + N^3/z^4 + (regular)` this returns
/// `N^m Pi_0 U`, where `N = L_0 Pi_0`.
pub fn laurent_coefficient(
    p: &DimerParams,
    c: f64,
    m: u32,
    u: &StateVector<Complex64>,
) -> Result<StateVector<Complex64>> {
    weighted_contour(p, c, Complex64::new(0.0, 0.0), DEFAULT_RADIUS, DEFAULT_NODES, m, u)
}

/// Spectral projection onto the generalized kernel of `L_0`.
pub fn pi0(p: &DimerParams, u: &StateVector<f64>) -> Result<StateVector<f64>> {
    let cs = crate::dispersion::sound_speed(p);
    Ok(laurent_coefficient(p, cs, 0, &u.to_complex())?.real_part())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cheb::DEFAULT_DEGREE;
    use crate::dispersion::{omega_star, sound_speed};
    use crate::state_space::{apply_l, apply_l0, gen_eigvec_chain, random_state};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn duhamel_closed_forms() {
        let one = Cheb::constant(cx(1.0, 0.0), 16);
        let d = duhamel_i(cx(0.0, 0.0), &one);
        for &v in &[-1.0, -0.2, 0.6, 1.0] {
            assert!((d.eval(v) + v).norm() < 1e-14);
        }
        let zero = Cheb::<Complex64>::zero(16);
        assert!(duhamel_i(cx(0.7, 0.3), &zero).sup_norm() == 0.0);
        let e = Cheb::fit(|s: f64| cx(s.exp(), 0.0), 32);
        let d = duhamel_i(cx(1.0, 0.0), &e);
        for &v in &[-1.0, -0.5, 0.3, 1.0] {
            assert!((d.eval(v) + v * v.exp()).norm() < 1e-13);
        }
    }

    #[test]
    fn resolvent_is_two_sided_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in [DimerParams::mass(2.0).unwrap(), DimerParams::new(1.7, 0.3, 2.4).unwrap()] {
            let c = 1.05 * sound_speed(&p);
            let z = cx(1.0, 0.5);
            let u = random_state(&mut rng, DEFAULT_DEGREE).to_complex();
            let r = resolvent(z, &p, c, &u).unwrap();
            let back = r.scale(z).sub(&apply_l(&p, c, &r).unwrap());
            assert!(back.sub(&u).sup_norm() < 1e-9);
            let zu = u.scale(z).sub(&apply_l(&p, c, &u).unwrap());
            assert!(resolvent(z, &p, c, &zu).unwrap().sub(&u).sup_norm() < 1e-9);
        }
    }

    #[test]
    fn resolvent_identity() {
        let p = DimerParams::new(1.7, 0.3, 2.4).unwrap();
        let c = sound_speed(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random_state(&mut rng, DEFAULT_DEGREE).to_complex();
        let (z1, z2) = (cx(0.8, 0.4), cx(-0.5, 1.3));
        let r1 = resolvent(z1, &p, c, &u).unwrap();
        let r2 = resolvent(z2, &p, c, &u).unwrap();
        let r12 = resolvent(z1, &p, c, &r2).unwrap();
        let lhs = r1.sub(&r2).sub(&r12.scale(z2 - z1));
        assert!(lhs.sup_norm() < 1e-8);
    }

    #[test]
    fn resolvent_rejects_spectrum() {
        let p = DimerParams::mass(2.0).unwrap();
        let cs = sound_speed(&p);
        let u = random_state(&mut ChaCha8Rng::seed_from_u64(1), 16).to_complex();
        let om = omega_star(&p).unwrap();
        assert!(matches!(resolvent(cx(0.0, om), &p, cs, &u), Err(Error::NearSpectrum(_))));
        assert!(matches!(resolvent(cx(0.0, 0.0), &p, cs, &u), Err(Error::NearSpectrum(_))));
    }

    #[test]
    fn origin_has_algebraic_multiplicity_four() {
        let p = DimerParams::mass(2.0).unwrap();
        let cs = sound_speed(&p);
        assert_eq!(contour_zero_count(&p, cs, cx(0.0, 0.0), DEFAULT_RADIUS, DEFAULT_NODES), 4);
        assert_eq!(contour_zero_count(&p, 1.2 * cs, cx(0.0, 0.0), DEFAULT_RADIUS, DEFAULT_NODES), 2);
    }

    #[test]
    fn projection_properties() {
        let p = DimerParams::new(1.7, 0.3, 2.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = random_state(&mut rng, DEFAULT_DEGREE);
        let pu = pi0(&p, &u).unwrap();
        let ppu = pi0(&p, &pu).unwrap();
        assert!(ppu.sub(&pu).sup_norm() < 1e-6);
        for x in gen_eigvec_chain(&p).as_array() {
            assert!(pi0(&p, x).unwrap().sub(x).sup_norm() < 1e-6);
        }
        let lhs = pi0(&p, &apply_l0(&p, &u).unwrap()).unwrap();
        let rhs = apply_l0(&p, &pu).unwrap();
        assert!(lhs.sub(&rhs).sup_norm() < 1e-6);
        // Laurent structure: the z^{-2} coefficient equals L_0 Pi_0.
        let cs = sound_speed(&p);
        let n1 = laurent_coefficient(&p, cs, 1, &u.to_complex()).unwrap().real_part();
        assert!(n1.sub(&rhs).sup_norm() < 1e-6);
        let n2 = laurent_coefficient(&p, cs, 2, &u.to_complex()).unwrap().real_part();
        assert!(n2.sub(&apply_l0(&p, &n1).unwrap()).sup_norm() < 1e-6);
    }

    #[test]
    fn contour_through_spectrum_is_reported() {
        let p = DimerParams::mass(2.0).unwrap();
        let cs = sound_speed(&p);
        let om = omega_star(&p).unwrap();
        let u = random_state(&mut ChaCha8Rng::seed_from_u64(2), 16).to_complex();
        // Place the first trapezoid node (angle pi/4 for four nodes) on i*om.
        let radius = 0.1;
        let center = cx(0.0, om) - Complex64::from_polar(radius, PI / 4.0);
        let r = contour_projection(&p, cs, center, radius, 4, &u);
        assert!(matches!(r, Err(Error::ContourThroughSpectrum(_))));
    }
}
