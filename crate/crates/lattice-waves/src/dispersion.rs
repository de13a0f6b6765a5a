//! Dispersion analysis of the traveling-wave problem.
//!
//! The linearized traveling-wave problem at speed `c` has the dispersion
//! function
//!
//! ```text
//! Lambda(k; c) = c^4 k^4 - c^2 (1+w)(1+kappa) k^2 + 2 kappa w (1 - cos 2k),
//! ```
//!
//! whose complexification is `det M(z) = c^4 z^4 + c^2 (1+kappa)(1+w) z^2 +
//! 2 kappa w (1 - cosh 2z)` with `det M(ik) = Lambda(k)`.  At the speed of sound
//! `c_s` the origin is a root of multiplicity four; a unique positive root
//! `omega_c` exists for `c >= c_s`, and for slightly supersonic `c` a pair of
//! real roots `±x_c` of `det M` splits off from the origin.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{DimerKind, DimerParams};

/// Lower end of the positive root scan window.
pub const SCAN_START: f64 = 1e-6;
/// Upper end of the positive root scan window.
pub const SCAN_END: f64 = 50.0;
/// Step of the bracketing scan.
pub const SCAN_STEP: f64 = 1e-3;
/// Bisection stopping width.
pub const BISECTION_TOL: f64 = 1e-12;
/// Largest supersonic excess `c^2 - c_s^2` for which the real root is sought.
pub const SUPERSONIC_WINDOW: f64 = 0.25;

/// A located root together with the diagnostics used to classify it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootReport {
    /// Root location (a wavenumber or a real eigenvalue).
    pub location: f64,
    /// Order of vanishing.
    pub multiplicity: usize,
    /// Absolute value of the function at the root.
    pub residual: f64,
    /// First four derivatives at the root.
    #[serde(rename = "derivatives")]
    pub derivative_values: Vec<f64>,
}

fn sum_factor(p: &DimerParams) -> f64 {
    (1.0 + p.w) * (1.0 + p.kappa)
}

/// `Lambda(k; c)`, written with `1 - cos 2k = 2 sin^2 k` to avoid cancellation
/// near the origin.
pub fn lambda_dispersion(k: f64, p: &DimerParams, c: f64) -> f64 {
    let c2 = c * c;
    let s = k.sin();
    c2 * c2 * k.powi(4) - c2 * sum_factor(p) * k * k + 4.0 * p.kappa * p.w * s * s
}

/// The `n`-th derivative of `Lambda` with respect to `k` (`n <= 6`).
pub fn lambda_derivative(n: usize, k: f64, p: &DimerParams, c: f64) -> f64 {
    let c2 = c * c;
    let c4 = c2 * c2;
    let s = sum_factor(p);
    let kw = p.kappa * p.w;
    let (sin2, cos2) = (2.0 * k).sin_cos();
    match n {
        0 => lambda_dispersion(k, p, c),
        1 => 4.0 * c4 * k.powi(3) - 2.0 * c2 * s * k + 4.0 * kw * sin2,
        2 => 12.0 * c4 * k * k - 2.0 * c2 * s + 8.0 * kw * cos2,
        3 => 24.0 * c4 * k - 16.0 * kw * sin2,
        4 => 24.0 * c4 - 32.0 * kw * cos2,
        5 => 64.0 * kw * sin2,
        6 => 128.0 * kw * cos2,
        _ => panic!("derivatives beyond order 6 are not provided"),
    }
}

/// `det M(z)` for complex `z`.
pub fn det_m(z: Complex64, p: &DimerParams, c: f64) -> Complex64 {
    let c2 = c * c;
    let z2 = z * z;
    let s = z.sinh();
    // 1 - cosh 2z = -2 sinh^2 z
    z2 * z2 * (c2 * c2) + z2 * (c2 * sum_factor(p)) - s * s * (4.0 * p.kappa * p.w)
}

/// `det M(x)` and its first four derivatives on the real axis.
fn det_m_real_derivative(n: usize, x: f64, p: &DimerParams, c: f64) -> f64 {
    let c2 = c * c;
    let c4 = c2 * c2;
    let s = sum_factor(p);
    let kw = p.kappa * p.w;
    match n {
        0 => c4 * x.powi(4) + c2 * s * x * x - 4.0 * kw * x.sinh().powi(2),
        1 => 4.0 * c4 * x.powi(3) + 2.0 * c2 * s * x - 4.0 * kw * (2.0 * x).sinh(),
        2 => 12.0 * c4 * x * x + 2.0 * c2 * s - 8.0 * kw * (2.0 * x).cosh(),
        3 => 24.0 * c4 * x - 16.0 * kw * (2.0 * x).sinh(),
        4 => 24.0 * c4 - 32.0 * kw * (2.0 * x).cosh(),
        _ => panic!("derivatives beyond order 4 are not provided"),
    }
}

/// The two branches `lambda_-(k) <= lambda_+(k)` of the dispersion relation,
/// so that `Lambda(k; c) = (c^2 k^2 - lambda_-(k)) (c^2 k^2 - lambda_+(k))`.
pub fn lambda_pm(k: f64, p: &DimerParams) -> (f64, f64) {
    let (kap, w) = (p.kappa, p.w);
    let mean = 0.5 * sum_factor(p);
    let cos = k.cos();
    let disc = (1.0 + w).powi(2) * (1.0 - kap).powi(2)
        + 4.0 * kap * ((1.0 - w).powi(2) + 4.0 * w * cos * cos);
    let root = 0.5 * disc.sqrt();
    let plus = mean + root;
    // Product of the roots is 4 kappa w sin^2 k; dividing avoids cancellation.
    let minus = 4.0 * kap * w * k.sin().powi(2) / plus;
    (minus, plus)
}

/// Speed of sound `c_s = sqrt(4 kappa w / ((1 + kappa)(1 + w)))`.
pub fn sound_speed(p: &DimerParams) -> f64 {
    (4.0 * p.kappa * p.w / sum_factor(p)).sqrt()
}

/// Taylor data `d^k Lambda / dk^k (0; c)` for `k = 0..=order` (`order <= 6`).
pub fn taylor_lambda_at_zero(p: &DimerParams, c: f64, order: usize) -> Vec<f64> {
    assert!(order <= 6, "order must be at most 6");
    (0..=order).map(|n| lambda_derivative(n, 0.0, p, c)).collect()
}

/// Scale-aware tolerance used to decide that a derivative at the origin vanishes.
pub fn multiplicity_tolerance(p: &DimerParams, c: f64) -> f64 {
    1e-8 * (1.0 + lambda_derivative(4, 0.0, p, c).abs())
}

/// Classify the root of `Lambda` at the origin.
pub fn classify_origin(p: &DimerParams, c: f64) -> RootReport {
    let tol = multiplicity_tolerance(p, c);
    let taylor = taylor_lambda_at_zero(p, c, 6);
    let multiplicity = (0..=6).find(|&n| taylor[n].abs() > tol).unwrap_or(7);
    RootReport {
        location: 0.0,
        multiplicity,
        residual: taylor[0].abs(),
        derivative_values: taylor[1..=4].to_vec(),
    }
}

/// Find all sign changes of `f` on the scan grid.
fn scan_brackets<F: Fn(f64) -> f64>(f: &F, start: f64, end: f64, step: f64) -> Vec<(f64, f64)> {
    let n = ((end - start) / step).ceil() as usize;
    let mut out = Vec::new();
    let mut x0 = start;
    let mut f0 = f(x0);
    for i in 1..=n {
        let x1 = (start + i as f64 * step).min(end);
        let f1 = f(x1);
        if f0 == 0.0 || f0.signum() != f1.signum() {
            out.push((x0, x1));
        }
        x0 = x1;
        f0 = f1;
    }
    out
}

/// Bisection followed by one Newton step (accepted only if it improves the
/// residual and stays in the bracket).
fn bisect_polish<F: Fn(f64) -> f64, D: Fn(f64) -> f64>(f: &F, df: &D, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    while b - a > BISECTION_TOL {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    let x = 0.5 * (a + b);
    let d = df(x);
    if d != 0.0 {
        let y = x - f(x) / d;
        if (y - x).abs() <= 2.0 * BISECTION_TOL && f(y).abs() <= f(x).abs() {
            return y;
        }
    }
    x
}

/// The unique positive root `omega_c` of `Lambda(.; c)` for `c >= c_s`.
///
/// A monatomic chain (`kappa = w = 1`) has no optical branch, so the
/// positive zero of `Lambda` there is a folded acoustic wavenumber rather
/// than a ripple frequency; it is reported as [`Error::NoRoot`].
pub fn critical_frequency(p: &DimerParams, c: f64) -> Result<RootReport> {
    if !p.is_diatomic() {
        return Err(Error::NoRoot(
            "monatomic lattice (kappa = w = 1): no optical branch".into(),
        ));
    }
    let f = |k: f64| lambda_dispersion(k, p, c);
    let brackets = scan_brackets(&f, SCAN_START, SCAN_END, SCAN_STEP);
    match brackets.len() {
        0 => Err(Error::NoRoot(format!(
            "Lambda has no sign change on ({SCAN_START}, {SCAN_END}] at c = {c}"
        ))),
        1 => {
            let (a, b) = brackets[0];
            let df = |k: f64| lambda_derivative(1, k, p, c);
            let root = bisect_polish(&f, &df, a, b);
            let derivs: Vec<f64> = (1..=4).map(|n| lambda_derivative(n, root, p, c)).collect();
            let tol = multiplicity_tolerance(p, c);
            let multiplicity = if derivs[0].abs() > tol { 1 } else { 2 };
            Ok(RootReport {
                location: root,
                multiplicity,
                residual: f(root).abs(),
                derivative_values: derivs,
            })
        }
        n => Err(Error::MultipleRoots(format!(
            "{n} positive roots of Lambda at c = {c}; c is below the admissible range"
        ))),
    }
}

/// Critical frequency at the speed of sound, `omega_*`.
pub fn omega_star(p: &DimerParams) -> Result<f64> {
    Ok(critical_frequency(p, sound_speed(p))?.location)
}

/// The positive real root `x_c` of `det M` for supersonic `c`.
pub fn supersonic_real_root(p: &DimerParams, c: f64) -> Result<RootReport> {
    let cs = sound_speed(p);
    let excess = c * c - cs * cs;
    if excess <= 1e-14 * cs * cs {
        return Err(Error::NoRoot(format!(
            "c = {c} is not supersonic (c_s = {cs}); no real eigenvalue has split off"
        )));
    }
    if excess > SUPERSONIC_WINDOW {
        return Err(Error::InvalidParams(format!(
            "c^2 - c_s^2 = {excess} exceeds the supported window (0, {SUPERSONIC_WINDOW}]"
        )));
    }
    let f = |x: f64| det_m_real_derivative(0, x, p, c);
    let df = |x: f64| det_m_real_derivative(1, x, p, c);
    let brackets = scan_brackets(&f, SCAN_START, SCAN_END, SCAN_STEP);
    match brackets.len() {
        0 => Err(Error::NoRoot(format!("det M has no real root at c = {c}"))),
        1 => {
            let (a, b) = brackets[0];
            let root = bisect_polish(&f, &df, a, b);
            let derivs: Vec<f64> = (1..=4).map(|n| det_m_real_derivative(n, root, p, c)).collect();
            Ok(RootReport {
                location: root,
                multiplicity: 1,
                residual: f(root).abs(),
                derivative_values: derivs,
            })
        }
        n => Err(Error::MultipleRoots(format!("{n} positive real roots of det M at c = {c}"))),
    }
}

/// Front decay rate `q_w` (mass dimer) or `q_kappa` (spring dimer).
pub fn front_decay_rate(p: &DimerParams) -> Result<f64> {
    let q = |x: f64| (6.0 * x * (1.0 + x) / (x * x - x + 1.0)).sqrt();
    match p.kind() {
        DimerKind::Mass | DimerKind::Monatomic => Ok(q(p.w)),
        DimerKind::Spring => Ok(q(p.kappa)),
        DimerKind::General => Err(Error::Unsupported(
            "front decay rate is only defined for mass or spring dimers".into(),
        )),
    }
}

/// Summary of the spectral data at the speed of sound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Material parameters.
    pub params: DimerParams,
    /// Speed of sound.
    pub sound_speed: f64,
    /// Classification of the root at the origin.
    pub origin: RootReport,
    /// The critical frequency `omega_*`.
    pub omega_star: RootReport,
    /// Taylor data of `Lambda` at the origin, orders 0..=6.
    pub taylor_at_zero: Vec<f64>,
    /// Front decay rate, when defined.
    pub front_decay_rate: Option<f64>,
}

/// Assemble a [`SpectralReport`].
pub fn spectral_report(p: &DimerParams) -> Result<SpectralReport> {
    let cs = sound_speed(p);
    Ok(SpectralReport {
        params: p.clone(),
        sound_speed: cs,
        origin: classify_origin(p, cs),
        omega_star: critical_frequency(p, cs)?,
        taylor_at_zero: taylor_lambda_at_zero(p, cs, 6),
        front_decay_rate: front_decay_rate(p).ok(),
    })
}
