//! The first integral of the traveling-wave system and the nondegeneracy
//! constants of the near-sonic center-manifold reduction.
//!
//! The first integral is
//!
//! ```text
//! J(U; c) = c^2 (xi_1 + xi_2 / w)
//!         - int_{-1}^0 [V_1'(P_2(s+1) - P_1(s)) + V_2'(P_1(s+1) - P_2(s))] ds,
//! ```
//!
//! conserved along `U' = F(U; c)`.  Its rescaling
//! `J_mu = w (1 + kappa) a_m4 J(.; c_mu)` has `D J_0(0) = chi_3^*`.
//!
//! The nondegeneracy constants are
//!
//! ```text
//! L_0 = chi_2^*[L_1 chi_1] - Jstar(0) chi_1,
//! Q_0 = 2 chi_2^*[nl_0(chi_1, chi_1)] - D^2 J_0(0)[chi_1, chi_1],
//! ```
//!
//! each evaluated both in closed form and through an independent numerical
//! route (coefficient functionals plus finite differences of `J_mu`).

use serde::Serialize;

use crate::dispersion::sound_speed;
use crate::error::{Error, Result};
use crate::params::{DimerKind, DimerParams};
use crate::quadrature::{clenshaw_curtis, Rule};
use crate::state_space::functionals::{functional_chi, Normalization};
use crate::state_space::{apply_l1, gen_eigvec_chain, mu_max, nl0, speed_from_mu, StateVector};

/// Clenshaw–Curtis order for the integral term of `J`.
const CC_ORDER: usize = 64;

fn window_rule() -> Rule {
    clenshaw_curtis(CC_ORDER).mapped(-1.0, 0.0)
}

/// First integral `J(U; c)`.
pub fn first_integral_j(u: &StateVector<f64>, p: &DimerParams, c: f64) -> f64 {
    let rule = window_rule();
    let integral: f64 = rule.integrate(|s| {
        let r1 = u.big_p2.eval(s + 1.0) - u.big_p1.eval(s);
        let r2 = u.big_p1.eval(s + 1.0) - u.big_p2.eval(s);
        p.v1p(r1) + p.v2p(r2)
    });
    c * c * (u.xi1 + u.xi2 / p.w) - integral
}

/// Gateaux derivative `DJ(U; c) dU`.
pub fn dj_direction(u: &StateVector<f64>, du: &StateVector<f64>, p: &DimerParams, c: f64) -> f64 {
    let rule = window_rule();
    let integral: f64 = rule.integrate(|s| {
        let r1 = u.big_p2.eval(s + 1.0) - u.big_p1.eval(s);
        let r2 = u.big_p1.eval(s + 1.0) - u.big_p2.eval(s);
        let d1 = du.big_p2.eval(s + 1.0) - du.big_p1.eval(s);
        let d2 = du.big_p1.eval(s + 1.0) - du.big_p2.eval(s);
        p.v1pp(r1) * d1 + p.v2pp(r2) * d2
    });
    c * c * (du.xi1 + du.xi2 / p.w) - integral
}

/// Scale factor `w (1 + kappa) a_m4` of the rescaled first integral.
pub fn rescaling_factor(p: &DimerParams) -> f64 {
    p.w * (1.0 + p.kappa) * Normalization::laurent(p).a_m4
}

/// Rescaled first integral `J_mu(U) = w (1 + kappa) a_m4 J(U; c_mu)`.
///
/// # Errors
/// [`Error::MuOutOfRange`] unless `0 <= mu <= 1/(2 c_s^2)`.
pub fn rescaled_j(u: &StateVector<f64>, p: &DimerParams, mu: f64) -> Result<f64> {
    if mu < 0.0 {
        return Err(Error::MuOutOfRange { mu, max: mu_max(p) });
    }
    let c = speed_from_mu(p, mu)?;
    Ok(rescaling_factor(p) * first_integral_j(u, p, c))
}

/// The linear functional `Jstar(mu) U`, defined by
/// `J_mu(U) - J_0(U) = mu Jstar(mu) U`:
/// `w (1+kappa) a_m4 c_s^4 / (1 - c_s^2 mu) (xi_1 + xi_2 / w)`.
pub fn j_star(u: &StateVector<f64>, p: &DimerParams, mu: f64) -> f64 {
    let cs2 = sound_speed(p).powi(2);
    rescaling_factor(p) * cs2 * cs2 / (1.0 - cs2 * mu) * (u.xi1 + u.xi2 / p.w)
}

/// Evaluation route for the nondegeneracy constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    /// Closed-form expressions.
    Closed,
    /// Coefficient functionals and finite differences of `J_mu`.
    Oracle,
}

/// Finite-difference derivative of `mu -> J_mu(U)` at `mu = 0` (one-sided,
/// Richardson-extrapolated).
fn j_star_zero_fd(u: &StateVector<f64>, p: &DimerParams) -> Result<f64> {
    let h = 1e-3 * mu_max(p);
    let j0 = rescaled_j(u, p, 0.0)?;
    let d = |h: f64| -> Result<f64> {
        // Second-order one-sided difference.
        let j1 = rescaled_j(u, p, h)?;
        let j2 = rescaled_j(u, p, 2.0 * h)?;
        Ok((-3.0 * j0 + 4.0 * j1 - j2) / (2.0 * h))
    };
    let (a, b) = (d(h)?, d(0.5 * h)?);
    Ok((4.0 * b - a) / 3.0)
}

/// Second derivative `D^2 J_0(0)[U, U]` by Richardson-extrapolated second
/// differences with base step `1e-3`.
pub fn d2j0_fd(u: &StateVector<f64>, p: &DimerParams) -> Result<f64> {
    let zero = StateVector::zero(u.degree());
    let j0 = rescaled_j(&zero, p, 0.0)?;
    let d = |h: f64| -> Result<f64> {
        let jp = rescaled_j(&u.scale(h), p, 0.0)?;
        let jm = rescaled_j(&u.scale(-h), p, 0.0)?;
        Ok((jp - 2.0 * j0 + jm) / (h * h))
    };
    let h = 1e-3;
    let (a, b) = (d(h)?, d(0.5 * h)?);
    Ok((4.0 * b - a) / 3.0)
}

/// Polarized second derivative `D^2 J_0(0)[U, V]`.
pub fn d2j0_bilinear_fd(u: &StateVector<f64>, v: &StateVector<f64>, p: &DimerParams) -> Result<f64> {
    let plus = d2j0_fd(&u.add(v), p)?;
    let minus = d2j0_fd(&u.sub(v), p)?;
    Ok(0.25 * (plus - minus))
}

/// Closed form of `D^2 J_0(0)[chi_1, chi_1] = -8 (beta + kappa^2) w a_m4 / (1 + kappa)`.
pub fn d2j0_chi1_closed(p: &DimerParams) -> f64 {
    let a = Normalization::laurent(p).a_m4;
    -8.0 * (p.beta + p.kappa * p.kappa) * p.w * a / (1.0 + p.kappa)
}

/// Linear nondegeneracy constant `L_0`.
pub fn lfrak0(p: &DimerParams, route: Route) -> Result<f64> {
    match route {
        Route::Closed => {
            let cs = sound_speed(p);
            Ok(-(1.0 + p.kappa) * (1.0 + p.w) * Normalization::laurent(p).a_m4 * cs.powi(4))
        }
        Route::Oracle => {
            let ch = gen_eigvec_chain(p);
            let l1chi1 = apply_l1(p, &ch.chi1)?;
            Ok(functional_chi(2, &l1chi1, p) - j_star_zero_fd(&ch.chi1, p)?)
        }
    }
}

/// Quadratic nondegeneracy constant
/// `Q_0 = 2 chi_2^*[nl_0(chi_1, chi_1)] - D^2 J_0(0)[chi_1, chi_1]`.
pub fn qfrak0(p: &DimerParams, route: Route) -> Result<f64> {
    match route {
        Route::Closed => {
            let a = Normalization::laurent(p).a_m4;
            Ok(16.0 * p.w * a * (p.beta + p.kappa.powi(3)) / (1.0 + p.kappa).powi(2))
        }
        Route::Oracle => {
            let ch = gen_eigvec_chain(p);
            Ok(2.0 * chi2_nl0_term(p) - d2j0_fd(&ch.chi1, p)?)
        }
    }
}

/// `chi_2^*[nl_0(chi_1, chi_1)]` through the coefficient functionals.
pub fn chi2_nl0_term(p: &DimerParams) -> f64 {
    let ch = gen_eigvec_chain(p);
    functional_chi(2, &nl0(p, &ch.chi1, &ch.chi1), p)
}

/// Both routes for both constants, plus the derived amplitude ratios.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NondegenReport {
    /// Parameters.
    pub params: DimerParams,
    /// Closed-form `L_0`.
    pub lfrak0_closed: f64,
    /// Numerical `L_0`.
    pub lfrak0_oracle: f64,
    /// Closed-form `Q_0`.
    pub qfrak0_closed: f64,
    /// Numerical `Q_0`.
    pub qfrak0_oracle: f64,
    /// `lfrak0_oracle / lfrak0_closed`.
    pub normalization_ratio: f64,
    /// `2 chi_2^*[nl_0(chi_1, chi_1)]` by the functionals.
    pub chi2_nl0_oracle: f64,
    /// Closed form `-8 (beta - kappa^2) a_m4 (kappa - 1) w / (1 + kappa)^2`.
    pub chi2_nl0_closed: f64,
    /// `D^2 J_0(0)[chi_1, chi_1]` by finite differences.
    pub d2j_oracle: f64,
    /// `D^2 J_0(0)[chi_1, chi_1]` in closed form.
    pub d2j_closed: f64,
    /// `-3 L_0 / (2 Q_0)` with `Q_0` as defined above (mass dimers only).
    pub core_amplitude_from_constants: Option<f64>,
    /// Solitary-core amplitude `3w/(1+w)` of the mass dimer (mass dimers only).
    pub core_amplitude_closed_form: Option<f64>,
}

/// Evaluate every nondegeneracy quantity for `p`.
pub fn nondegen_report(p: &DimerParams) -> Result<NondegenReport> {
    let lc = lfrak0(p, Route::Closed)?;
    let lo = lfrak0(p, Route::Oracle)?;
    let qc = qfrak0(p, Route::Closed)?;
    let qo = qfrak0(p, Route::Oracle)?;
    let a = Normalization::laurent(p).a_m4;
    let k = p.kappa;
    let mass = p.kind() == DimerKind::Mass || p.kind() == DimerKind::Monatomic;
    Ok(NondegenReport {
        params: p.clone(),
        lfrak0_closed: lc,
        lfrak0_oracle: lo,
        qfrak0_closed: qc,
        qfrak0_oracle: qo,
        normalization_ratio: lo / lc,
        chi2_nl0_oracle: 2.0 * chi2_nl0_term(p),
        chi2_nl0_closed: -8.0 * (p.beta - k * k) * a * (k - 1.0) * p.w / (1.0 + k).powi(2),
        d2j_oracle: d2j0_fd(&gen_eigvec_chain(p).chi1, p)?,
        d2j_closed: d2j0_chi1_closed(p),
        core_amplitude_from_constants: mass.then(|| -3.0 * lo / (2.0 * qo)),
        core_amplitude_closed_form: mass.then(|| 3.0 * p.w / (1.0 + p.w)),
    })
}

/// Locate the zero of `beta -> Q_0` (oracle route) in `[lo, hi]` by bisection.
pub fn qfrak0_zero_in_beta(kappa: f64, w: f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let q = |beta: f64| -> Result<f64> { qfrak0(&DimerParams::new(kappa, beta, w)?, Route::Oracle) };
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (q(a)?, q(b)?);
    if fa * fb > 0.0 {
        return Err(Error::NoRoot(format!("Q_0 does not change sign on [{lo}, {hi}]")));
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        let fm = q(m)?;
        if fa * fm <= 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    Ok(0.5 * (a + b))
}
