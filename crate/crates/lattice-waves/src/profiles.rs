//! Explicit leading-order traveling-wave profiles of mass and spring dimers.
//!
//! With the long-wave variable `X = eps (j - c_eps t)` and wave speed
//! `1/c_eps^2 = 1/c_s^2 - eps^2`, relative displacements behave like
//! `eps^2 [core(X) + alpha * ripple(T(X))]` and positions like
//! `eps * front(X)`, where
//!
//! * the core is `A sech^2(q X / 2)` (alternating by a factor `kappa` between
//!   site parities for spring dimers),
//! * the front is its antiderivative-type `tanh` profile,
//! * the ripple is the leading cosine of the small periodic solution with
//!   frequency `omega_* / eps`, and
//! * `T(X) = X + eps^2 theta tanh(q X / 2)` is the phase map.
//!
//! The higher-order remainders are not available in closed form and are
//! never synthesized here; their size is measured by the collocation and
//! simulation modules.  The module also provides the truncated normal-form
//! check and a `tanh` decomposition utility for asymptotically constant
//! functions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dispersion::{omega_star, sound_speed};
use crate::error::{Error, Result};
use crate::params::{DimerKind, DimerParams};

/// Lattice-site parity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    /// Odd sites: mass 1, spring `V_1`.
    Odd,
    /// Even sites: mass `1/w`, spring `V_2`.
    Even,
}

impl Parity {
    /// Parity of site `j`.
    pub fn of(j: i64) -> Self {
        if j.rem_euclid(2) == 1 {
            Parity::Odd
        } else {
            Parity::Even
        }
    }
}

/// Which family of dimers a profile belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    /// Alternating masses, identical springs.
    Mass,
    /// Alternating springs, identical masses.
    Spring,
}

/// Coordinates in which a profile is expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coordinate {
    /// Particle positions `u_j`.
    Position,
    /// Spring elongations `r_j = u_{j+1} - u_j`.
    RelativeDisplacement,
}

/// Parameters of a leading-order profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileSpec {
    /// Long-wave parameter.
    pub epsilon: f64,
    /// Ripple amplitude parameter.
    pub alpha: f64,
    /// Mass or spring dimer.
    pub dimer_kind: ProfileKind,
    /// Lattice parameters.
    pub params: DimerParams,
    /// Output coordinates.
    pub coordinate: Coordinate,
}

impl ProfileSpec {
    /// Validate and build a specification.
    ///
    /// # Errors
    /// * [`Error::Unsupported`] unless `params` is a mass dimer (`kappa = 1`,
    ///   identical springs) or a spring dimer (`w = 1`);
    /// * [`Error::InvalidParams`] unless `0 < eps^2 < 1/c_s^2` and `alpha >= 0`;
    /// * [`Error::SpringSingular`] for spring dimers with `beta + kappa^3 = 0`.
    pub fn new(epsilon: f64, alpha: f64, params: DimerParams, coordinate: Coordinate) -> Result<Self> {
        params.validate()?;
        let dimer_kind = match params.kind() {
            DimerKind::Mass => ProfileKind::Mass,
            DimerKind::Spring => ProfileKind::Spring,
            DimerKind::Monatomic => ProfileKind::Mass,
            DimerKind::General => {
                return Err(Error::Unsupported(
                    "leading profiles need a mass dimer (kappa = 1, V_1 = V_2) or a spring dimer (w = 1)".into(),
                ))
            }
        };
        let cs = sound_speed(&params);
        if !(epsilon > 0.0 && epsilon * epsilon < 1.0 / (cs * cs)) {
            return Err(Error::InvalidParams(format!(
                "epsilon must satisfy 0 < eps^2 < 1/c_s^2 = {}, got {epsilon}",
                1.0 / (cs * cs)
            )));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParams(format!("alpha must be >= 0, got {alpha}")));
        }
        if dimer_kind == ProfileKind::Spring && params.beta + params.kappa.powi(3) == 0.0 {
            return Err(Error::SpringSingular);
        }
        Ok(Self { epsilon, alpha, dimer_kind, params, coordinate })
    }

    /// Wave speed `c_eps = (1/c_s^2 - eps^2)^{-1/2}`.
    pub fn wave_speed(&self) -> f64 {
        let cs = sound_speed(&self.params);
        (1.0 / (cs * cs) - self.epsilon * self.epsilon).powf(-0.5)
    }

    /// Decay rate `q` of the core (`q_w` or `q_kappa`).
    pub fn decay_rate(&self) -> f64 {
        match self.dimer_kind {
            ProfileKind::Mass => q_w(self.params.w),
            ProfileKind::Spring => q_kappa(self.params.kappa),
        }
    }

    /// Peak of the core on the odd sites (the larger one for stiff even springs).
    pub fn core_amplitude(&self) -> f64 {
        match self.dimer_kind {
            ProfileKind::Mass => 3.0 * self.params.w / (1.0 + self.params.w),
            ProfileKind::Spring => {
                let k = self.params.kappa;
                3.0 * k * k / (self.params.beta + k.powi(3)) * k
            }
        }
    }

    /// Ratio of the odd-site core to the even-site core.
    pub fn stegoton_factor(&self) -> f64 {
        match self.dimer_kind {
            ProfileKind::Mass => 1.0,
            ProfileKind::Spring => self.params.kappa,
        }
    }
}

/// `q_w = (6 w (1 + w) / (w^2 - w + 1))^{1/2}`.
pub fn q_w(w: f64) -> f64 {
    (6.0 * w * (1.0 + w) / (w * w - w + 1.0)).sqrt()
}

/// `q_kappa = (6 kappa (1 + kappa) / (kappa^2 - kappa + 1))^{1/2}`.
pub fn q_kappa(kappa: f64) -> f64 {
    q_w(kappa)
}

fn sech2(x: f64) -> f64 {
    let c = x.cosh();
    if c.is_finite() {
        1.0 / (c * c)
    } else {
        0.0
    }
}

/// Localized relative-displacement core at `X` on sites of the given parity.
///
/// Mass dimer: `3w/(1+w) sech^2(q_w X / 2)`.  Spring dimer:
/// `f_j 3 kappa^2/(beta + kappa^3) sech^2(q_kappa X / 2)` with `f_j = kappa` on
/// odd sites (soft springs `V_1`) and `f_j = 1` on even sites (stiff springs
/// `V_2`): the spring force is continuous across a long wave, so the softer
/// spring stretches `kappa` times as much.
pub fn sech2_core(spec: &ProfileSpec, x: f64, parity: Parity) -> f64 {
    let q = spec.decay_rate();
    match spec.dimer_kind {
        ProfileKind::Mass => 3.0 * spec.params.w / (1.0 + spec.params.w) * sech2(0.5 * q * x),
        ProfileKind::Spring => {
            let k = spec.params.kappa;
            let factor = if parity == Parity::Odd { k } else { 1.0 };
            factor * 3.0 * k * k / (spec.params.beta + k.powi(3)) * sech2(0.5 * q * x)
        }
    }
}

/// Limit `lim_{X -> infinity}` of the leading position front.
pub fn front_amplitude(spec: &ProfileSpec) -> f64 {
    match spec.dimer_kind {
        ProfileKind::Mass => {
            let w = spec.params.w;
            (6.0 * w * (w * w - w + 1.0) / (1.0 + w).powi(3)).sqrt()
        }
        ProfileKind::Spring => {
            let k = spec.params.kappa;
            (6.0 * k.powi(3) * (1.0 + k) * (k * k - k + 1.0)).sqrt() / (2.0 * (spec.params.beta + k.powi(3)))
        }
    }
}

/// Leading position front `A tanh(q X / 2)`.
pub fn front_profile(spec: &ProfileSpec, x: f64) -> f64 {
    front_amplitude(spec) * (0.5 * spec.decay_rate() * x).tanh()
}

/// Phase map `T(X) = X + eps^2 theta tanh(q X / 2)`.
pub fn phase_map(spec: &ProfileSpec, theta: f64, x: f64) -> f64 {
    x + spec.epsilon * spec.epsilon * theta * (0.5 * spec.decay_rate() * x).tanh()
}

/// Odd-site component `E(i omega_*)` of the critical eigenvector (the even
/// component is 1): `(e^{i w} + kappa e^{-i w}) / (1 + kappa - c_s^2 w^2)`.
pub fn ripple_eigenvector(p: &DimerParams) -> Result<Complex64> {
    let om = omega_star(p)?;
    let cs2 = sound_speed(p).powi(2);
    let z = Complex64::new(0.0, om);
    Ok((z.exp() + (-z).exp() * p.kappa) / (1.0 + p.kappa - cs2 * om * om))
}

/// Mass-dimer ripple ratio `E_w = cos(omega_*) / (1 - w omega_*^2 / (1 + w))`.
pub fn e_w(w: f64) -> Result<f64> {
    let om = omega_star(&DimerParams::mass(w)?)?;
    Ok(om.cos() / (1.0 - w / (1.0 + w) * om * om))
}

/// Spring-dimer ripple ratio
/// `E_kappa = (e^{i w} + kappa e^{-i w}) / (1 + kappa - 2 kappa w^2 / (1 + kappa))`.
pub fn e_kappa(kappa: f64, beta: f64) -> Result<Complex64> {
    ripple_eigenvector(&DimerParams::spring(kappa, beta)?)
}

/// Leading ripple frequency `Omega = omega_* / eps` in the long-wave variable.
pub fn ripple_frequency(spec: &ProfileSpec) -> Result<f64> {
    Ok(omega_star(&spec.params)? / spec.epsilon)
}

/// Critical eigenvector and frequency of the leading ripple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ripple {
    /// Odd-site component of the critical eigenvector (even component 1).
    pub eigvec: Complex64,
    /// Frequency `Omega = omega_* / eps`.
    pub frequency: f64,
    epsilon: f64,
    coordinate: Coordinate,
}

impl Ripple {
    /// Compute the ripple data of `spec` (one root solve).
    pub fn new(spec: &ProfileSpec) -> Result<Self> {
        Ok(Self {
            eigvec: ripple_eigenvector(&spec.params)?,
            frequency: ripple_frequency(spec)?,
            epsilon: spec.epsilon,
            coordinate: spec.coordinate,
        })
    }

    /// Ripple value at `X`; see [`periodic_leading`].
    pub fn eval(&self, x: f64, parity: Parity) -> f64 {
        let one = Complex64::new(1.0, 0.0);
        let (own, next) = match parity {
            Parity::Odd => (self.eigvec, one),
            Parity::Even => (one, self.eigvec),
        };
        let phase = |y: f64| Complex64::from_polar(1.0, self.frequency * y);
        match self.coordinate {
            Coordinate::Position => (own * phase(x)).re,
            Coordinate::RelativeDisplacement => (next * phase(x + self.epsilon) - own * phase(x)).re,
        }
    }
}

/// Leading cosine ripple at `X` on sites of the given parity.
///
/// Position coordinates: `Re(e_j e^{i Omega X})` with `e_odd = E`,
/// `e_even = 1`, i.e. `cos(Omega X)` on even sites and
/// `Re E cos(Omega X) - Im E sin(Omega X)` on odd sites.
///
/// Relative displacement: the difference across one spring,
/// `Re(e_even e^{i Omega (X + eps)} - e_odd e^{i Omega X})` on odd sites and
/// `Re(e_odd e^{i Omega (X + eps)} - e_even e^{i Omega X})` on even sites.
pub fn periodic_leading(spec: &ProfileSpec, x: f64, parity: Parity) -> Result<f64> {
    Ok(Ripple::new(spec)?.eval(x, parity))
}

/// Metadata attached to a sampled profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileMetadata {
    /// Odd-site core peak (before the `eps^2` factor).
    pub core_amplitude: f64,
    /// Core decay rate `q`.
    pub decay_rate: f64,
    /// Odd/even core ratio.
    pub stegoton_factor: f64,
    /// Ripple frequency `Omega` in the long-wave variable.
    pub frequency: f64,
    /// Wave speed `c_eps`.
    pub wave_speed: f64,
    /// Long-wave parameter.
    pub epsilon: f64,
    /// Ripple amplitude parameter.
    pub alpha: f64,
    /// Phase shift parameter of the phase map.
    pub theta: f64,
    /// Output coordinates.
    pub coordinate: Coordinate,
}

/// A profile sampled on a uniform grid of the long-wave variable `X`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeadingProfile {
    /// Grid points `X`.
    pub grid: Vec<f64>,
    /// Values on odd sites.
    pub values_odd: Vec<f64>,
    /// Values on even sites.
    pub values_even: Vec<f64>,
    /// Descriptive data.
    pub metadata: ProfileMetadata,
}

/// Uniform grid of `n` points on `[-half_length, half_length]`.
pub fn uniform_grid(half_length: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n).map(|i| -half_length + 2.0 * half_length * i as f64 / (n - 1) as f64).collect()
}

/// Sample the leading nanopteron (relative displacement) or growing front
/// (position) on `grid`:
///
/// * relative displacement: `eps^2 [core(X) + alpha ripple(T(X))]`;
/// * position: `eps [front(X) + alpha eps ripple(T(X))]`.
///
/// # Errors
/// [`Error::InvalidParams`] for `alpha < 0`; errors of the ripple frequency.
pub fn assemble_nanopteron(spec: &ProfileSpec, theta: f64, grid: &[f64]) -> Result<LeadingProfile> {
    if spec.alpha < 0.0 {
        return Err(Error::InvalidParams("alpha must be >= 0".into()));
    }
    let eps = spec.epsilon;
    let ripple = if spec.alpha == 0.0 { None } else { Some(Ripple::new(spec)?) };
    let eval = |x: f64, parity: Parity| -> f64 {
        let t = phase_map(spec, theta, x);
        let r = ripple.map_or(0.0, |r| spec.alpha * r.eval(t, parity));
        match spec.coordinate {
            Coordinate::RelativeDisplacement => eps * eps * (sech2_core(spec, x, parity) + r),
            Coordinate::Position => eps * (front_profile(spec, x) + eps * r),
        }
    };
    let values_odd = grid.iter().map(|&x| eval(x, Parity::Odd)).collect();
    let values_even = grid.iter().map(|&x| eval(x, Parity::Even)).collect();
    let frequency = match ripple {
        Some(r) => r.frequency,
        None if spec.params.is_diatomic() => ripple_frequency(spec)?,
        None => f64::NAN,
    };
    Ok(LeadingProfile {
        grid: grid.to_vec(),
        values_odd,
        values_even,
        metadata: ProfileMetadata {
            core_amplitude: spec.core_amplitude(),
            decay_rate: spec.decay_rate(),
            stegoton_factor: spec.stegoton_factor(),
            frequency,
            wave_speed: spec.wave_speed(),
            epsilon: eps,
            alpha: spec.alpha,
            theta,
            coordinate: spec.coordinate,
        },
    })
}

/// Sound-speed rescaling `nu = c_s^2 eps` between the long-wave parameter of
/// this module and the one of Beale-type constructions.
pub fn nu_from_eps(p: &DimerParams, eps: f64) -> f64 {
    sound_speed(p).powi(2) * eps
}

/// Beale-type wave speed `C_nu = (c_s^2 + nu^2)^{1/2}`.
pub fn beale_speed(p: &DimerParams, nu: f64) -> f64 {
    (sound_speed(p).powi(2) + nu * nu).sqrt()
}

/// Beale-type core `varsigma(X)`: mass dimer
/// `(3/2) ((1+w)/(2w)) sech^2(((1+w)/(2w)) q_w X / 2)`; spring dimer
/// `3 (1+kappa)^2 / (4 (beta + kappa^3)) sech^2(((1+kappa)/(2 kappa)) q_kappa X / 2)`
/// (even-site normalization).
pub fn beale_core(spec: &ProfileSpec, x: f64) -> f64 {
    match spec.dimer_kind {
        ProfileKind::Mass => {
            let w = spec.params.w;
            let s = (1.0 + w) / (2.0 * w);
            1.5 * s * sech2(s * q_w(w) * x / 2.0)
        }
        ProfileKind::Spring => {
            let k = spec.params.kappa;
            let s = (1.0 + k) / (2.0 * k);
            3.0 * (1.0 + k).powi(2) / (4.0 * (spec.params.beta + k.powi(3))) * sech2(s * q_kappa(k) * x / 2.0)
        }
    }
}

/// Largest pointwise difference on `grid` (lattice coordinate `x`) between
/// `nu^2 varsigma(nu x)` and `eps^2 core(eps x)` on even sites, with
/// `nu = c_s^2 eps`.
pub fn beale_core_discrepancy(spec: &ProfileSpec, grid: &[f64]) -> f64 {
    let eps = spec.epsilon;
    let nu = nu_from_eps(&spec.params, eps);
    grid.iter()
        .map(|&x| (nu * nu * beale_core(spec, nu * x) - eps * eps * sech2_core(spec, eps * x, Parity::Even)).abs())
        .fold(0.0, f64::max)
}

/// `c_eps^2 - C_nu^2` with `nu = c_s^2 eps`.
pub fn speed_discrepancy(spec: &ProfileSpec) -> f64 {
    let nu = nu_from_eps(&spec.params, spec.epsilon);
    spec.wave_speed().powi(2) - beale_speed(&spec.params, nu).powi(2)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.abs().ln()).collect();
    linear_fit(&lx, &ly).0
}

/// Ordinary least squares `y ~ a x + b`; returns `(a, b, R^2)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (a, b, r2)
}

/// Constants of the truncated normal form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalFormConstants {
    /// Critical frequency `omega_*`.
    pub omega: f64,
    /// Linear nondegeneracy constant.
    pub lfrak0: f64,
    /// Quadratic nondegeneracy constant.
    pub qfrak0: f64,
    /// Unspecified normal-form coefficients `n_1, n_2, n_3` (default 0).
    pub n: [f64; 3],
}

impl NormalFormConstants {
    /// Constants for the given lattice with `n = 0`.
    pub fn for_params(p: &DimerParams) -> Result<Self> {
        use crate::invariants::{lfrak0, qfrak0, Route};
        Ok(Self {
            omega: omega_star(p)?,
            lfrak0: lfrak0(p, Route::Closed)?,
            qfrak0: qfrak0(p, Route::Closed)?,
            n: [0.0; 3],
        })
    }
}

/// Principal part of the truncated normal form,
///
/// ```text
/// N(y, nu) = (y_2,
///             y_1 - 3 y_1^2 / 2 - n_1 Q_0 (y_3^2 + y_4^2),
///             -(omega/nu) y_4 + n_2 nu y_4 / L_0 + n_3 nu y_1 y_4 / L_0,
///              (omega/nu) y_3 + n_2 nu y_3 / L_0 + n_3 nu y_1 y_3 / L_0).
/// ```
pub fn normal_form_rhs(y: [f64; 4], nu: f64, k: &NormalFormConstants) -> [f64; 4] {
    let [y1, y2, y3, y4] = y;
    let [n1, n2, n3] = k.n;
    [
        y2,
        y1 - 1.5 * y1 * y1 - n1 * k.qfrak0 * (y3 * y3 + y4 * y4),
        -k.omega / nu * y4 + n2 * nu * y4 / k.lfrak0 + n3 * nu * y1 * y4 / k.lfrak0,
        k.omega / nu * y3 + n2 * nu * y3 / k.lfrak0 + n3 * nu * y1 * y3 / k.lfrak0,
    ]
}

/// Residual report of the truncated normal-form check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalFormReport {
    /// Near-sonic parameter.
    pub nu: f64,
    /// `max_t |sigma'(t) - N(sigma(t), nu)|`.
    pub max_residual: f64,
    /// Number of time samples.
    pub samples: usize,
}

/// The homoclinic orbit `sigma(t) = (sech^2(t/2), -sech^2(t/2) tanh(t/2), 0, 0)`
/// and its exact derivative, optionally offset by a constant.
fn sigma_and_derivative(t: f64, offset: f64) -> ([f64; 4], [f64; 4]) {
    let s = sech2(t / 2.0);
    let th = (t / 2.0).tanh();
    let y = [s + offset, -s * th + offset, offset, offset];
    // d/dt sech^2(t/2) = -sech^2 tanh; d/dt(-sech^2 tanh) = sech^2 tanh^2 - sech^4 / 2.
    let dy = [-s * th, s * th * th - 0.5 * s * s, 0.0, 0.0];
    (y, dy)
}

/// Evaluate `max_t |sigma'(t) - N(sigma(t), nu)|` over `t_grid`, with
/// `sigma` shifted by `offset` in every component (0 for the exact orbit).
pub fn truncated_normalform_check(
    nu: f64,
    t_grid: &[f64],
    constants: &NormalFormConstants,
    offset: f64,
) -> Result<NormalFormReport> {
    if !(nu > 0.0) {
        return Err(Error::InvalidParams(format!("nu must be > 0, got {nu}")));
    }
    let mut worst = 0.0f64;
    for &t in t_grid {
        let (y, dy) = sigma_and_derivative(t, offset);
        let f = normal_form_rhs(y, nu, constants);
        for i in 0..4 {
            worst = worst.max((dy[i] - f[i]).abs());
        }
    }
    Ok(NormalFormReport { nu, max_residual: worst, samples: t_grid.len() })
}

/// Output of [`tanh_decompose`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TanhDecomposition {
    /// Limit at `+infinity` (tail mean).
    pub l_plus: f64,
    /// Limit at `-infinity` (tail mean).
    pub l_minus: f64,
    /// `f(X) - [(L+ - L-)/2 tanh(q X) + (L+ + L-)/2]` on the input grid.
    pub remainder: Vec<f64>,
    /// `sup_X e^{q |X|} |remainder(X)|`.
    pub weighted_sup: f64,
}

impl TanhDecomposition {
    /// `sup_X e^{rate |X|} |remainder(X)|` on `grid`.
    pub fn weighted_sup_at(&self, grid: &[f64], rate: f64) -> f64 {
        grid.iter()
            .zip(&self.remainder)
            .map(|(&x, &r)| (rate * x.abs()).exp() * r.abs())
            .fold(0.0, f64::max)
    }
}

/// Split an asymptotically constant function sampled on `grid` into a
/// `tanh` front with rate `q_star` plus a remainder.  The limits are the means
/// of the samples with `|X| >= x0`.
///
/// # Errors
/// * [`Error::InvalidParams`] if a tail has no samples;
/// * [`Error::NonConvergentTails`] if the standard deviation of a tail
///   exceeds `tail_tol (1 + |L|)`.
pub fn tanh_decompose(
    grid: &[f64],
    values: &[f64],
    q_star: f64,
    x0: f64,
    tail_tol: f64,
) -> Result<TanhDecomposition> {
    let tail = |sign: f64| -> Result<f64> {
        let vals: Vec<f64> = grid
            .iter()
            .zip(values)
            .filter(|(&x, _)| sign * x >= x0)
            .map(|(_, &v)| v)
            .collect();
        if vals.is_empty() {
            return Err(Error::InvalidParams(format!("no samples with {}X >= {x0}", if sign > 0.0 { "" } else { "-" })));
        }
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        if sd > tail_tol * (1.0 + mean.abs()) {
            return Err(Error::NonConvergentTails(sd));
        }
        Ok(mean)
    };
    let l_plus = tail(1.0)?;
    let l_minus = tail(-1.0)?;
    let remainder: Vec<f64> = grid
        .iter()
        .zip(values)
        .map(|(&x, &v)| v - (0.5 * (l_plus - l_minus) * (q_star * x).tanh() + 0.5 * (l_plus + l_minus)))
        .collect();
    let mut out = TanhDecomposition { l_plus, l_minus, remainder, weighted_sup: 0.0 };
    out.weighted_sup = out.weighted_sup_at(grid, q_star);
    Ok(out)
}
