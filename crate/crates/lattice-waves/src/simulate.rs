//! Direct time integration of the dimer lattice.
//!
//! Particles `u_j` with masses `m_j` (1 on odd sites, `1/w` on even sites)
//! are coupled by springs `r_j = u_{j+1} - u_j` with force `V_1'` on odd and
//! `V_2'` on even springs:
//!
//! ```text
//! m_j u_j'' = V_j'(r_j) - V_{j-1}'(r_{j-1}),
//! r_j'' = u_{j+1}'' - u_j''.
//! ```
//!
//! The chain is periodic with an even number of sites.  In position
//! coordinates the boundary is twisted, `u_{j+n} = u_j + D`, so that fronts
//! and solitary waves with nonzero net strain fit on the ring.  Time stepping
//! is velocity Verlet; the energy `sum m_j u_j'^2 / 2 + sum V_j(r_j)` is
//! monitored at every step.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::beale::FourierProfile;
use crate::dispersion;
use crate::error::{Error, Result};
use crate::params::DimerParams;
use crate::profiles::{self, Coordinate, LeadingProfile, Parity, ProfileSpec};

/// Which variables a [`LatticeState`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimCoordinate {
    /// Particle positions `u_j`.
    Position,
    /// Relative displacements `r_j = u_{j+1} - u_j`.
    RelDisp,
}

/// State of a periodic chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeState {
    /// Positions or relative displacements, depending on `coordinate`.
    pub values: Vec<f64>,
    /// Time derivatives of `values`.
    pub velocities: Vec<f64>,
    /// Time.
    pub t: f64,
    /// Meaning of `values`.
    pub coordinate: SimCoordinate,
    /// Boundary twist `D` with `u_{j+n} = u_j + D` (position coordinates).
    pub twist: f64,
    /// Lattice index of `values[0]`.
    pub first_index: i64,
    /// Lattice parameters.
    pub params: DimerParams,
}

impl LatticeState {
    /// A resting chain of `n` sites (`n` even and at least 4).
    ///
    /// # Errors
    /// [`Error::InvalidParams`] for odd or too short chains.
    pub fn zeros(n: usize, coordinate: SimCoordinate, params: DimerParams) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidParams(format!("chain length must be even and >= 4, got {n}")));
        }
        Ok(Self {
            values: vec![0.0; n],
            velocities: vec![0.0; n],
            t: 0.0,
            coordinate,
            twist: 0.0,
            first_index: -(n as i64) / 2,
            params,
        })
    }

    /// Number of sites.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Whether the chain is empty (never true for a valid state).
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Lattice index of entry `i`.
    pub fn index(&self, i: usize) -> i64 {
        self.first_index + i as i64
    }

    fn mass(&self, i: usize) -> f64 {
        match Parity::of(self.index(i)) {
            Parity::Odd => 1.0,
            Parity::Even => 1.0 / self.params.w,
        }
    }

    fn force(&self, i: usize, r: f64) -> f64 {
        match Parity::of(self.index(i)) {
            Parity::Odd => self.params.v1p(r),
            Parity::Even => self.params.v2p(r),
        }
    }

    fn potential(&self, i: usize, r: f64) -> f64 {
        match Parity::of(self.index(i)) {
            Parity::Odd => self.params.v1(r),
            Parity::Even => self.params.v2(r),
        }
    }

    /// Relative displacements (`r_i = u_{i+1} - u_i`, twisted at the end).
    pub fn relative_displacement(&self) -> Vec<f64> {
        match self.coordinate {
            SimCoordinate::RelDisp => self.values.clone(),
            SimCoordinate::Position => differences(&self.values, self.twist),
        }
    }

    /// Relative-displacement velocities.
    pub fn relative_velocity(&self) -> Vec<f64> {
        match self.coordinate {
            SimCoordinate::RelDisp => self.velocities.clone(),
            SimCoordinate::Position => differences(&self.velocities, 0.0),
        }
    }

    /// Particle velocities; in relative-displacement coordinates they are
    /// reconstructed in the frame of zero total momentum.
    pub fn particle_velocity(&self) -> Vec<f64> {
        match self.coordinate {
            SimCoordinate::Position => self.velocities.clone(),
            SimCoordinate::RelDisp => {
                let n = self.len();
                let mut v = vec![0.0; n];
                for i in 1..n {
                    v[i] = v[i - 1] + self.velocities[i - 1];
                }
                let total_mass: f64 = (0..n).map(|i| self.mass(i)).sum();
                let momentum: f64 = (0..n).map(|i| self.mass(i) * v[i]).sum();
                let shift = momentum / total_mass;
                v.iter_mut().for_each(|x| *x -= shift);
                v
            }
        }
    }

    /// Total energy `sum m_j u_j'^2 / 2 + sum V_j(r_j)`.
    pub fn energy(&self) -> f64 {
        let v = self.particle_velocity();
        let r = self.relative_displacement();
        (0..self.len()).map(|i| 0.5 * self.mass(i) * v[i] * v[i] + self.potential(i, r[i])).sum()
    }

    /// Convert to position coordinates with `u` at the first site equal to `u0`.
    pub fn to_position(&self, u0: f64) -> LatticeState {
        match self.coordinate {
            SimCoordinate::Position => self.clone(),
            SimCoordinate::RelDisp => {
                let n = self.len();
                let mut u = vec![u0; n];
                for i in 1..n {
                    u[i] = u[i - 1] + self.values[i - 1];
                }
                LatticeState {
                    values: u,
                    velocities: self.particle_velocity(),
                    t: self.t,
                    coordinate: SimCoordinate::Position,
                    twist: self.values.iter().sum(),
                    first_index: self.first_index,
                    params: self.params.clone(),
                }
            }
        }
    }
}

fn differences(u: &[f64], twist: f64) -> Vec<f64> {
    let n = u.len();
    (0..n).map(|i| if i + 1 < n { u[i + 1] - u[i] } else { u[0] + twist - u[i] }).collect()
}

/// Accelerations of the state's variables.
///
/// Position: `a_j = (V_j'(r_j) - V_{j-1}'(r_{j-1})) / m_j`; relative
/// displacement: `a_j = (V_{j+1}'(r_{j+1}) - V_j'(r_j)) / m_{j+1} -
/// (V_j'(r_j) - V_{j-1}'(r_{j-1})) / m_j`.
pub fn lattice_rhs(state: &LatticeState) -> Vec<f64> {
    let n = state.len();
    let r = state.relative_displacement();
    let f: Vec<f64> = (0..n).map(|i| state.force(i, r[i])).collect();
    let pos: Vec<f64> = (0..n).map(|i| (f[i] - f[(i + n - 1) % n]) / state.mass(i)).collect();
    match state.coordinate {
        SimCoordinate::Position => pos,
        SimCoordinate::RelDisp => (0..n).map(|i| pos[(i + 1) % n] - pos[i]).collect(),
    }
}

/// Result of a simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimTrace {
    /// States at strictly increasing times (the initial state first).
    pub snapshots: Vec<LatticeState>,
    /// `(t, H)` at the snapshot times.
    pub energy: Vec<(f64, f64)>,
    /// Largest `|H(t) - H(0)| / |H(0)|` over all steps.
    pub max_energy_drift: f64,
    /// Time step.
    pub dt: f64,
}

impl SimTrace {
    /// Snapshot times.
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    /// The last state.
    pub fn last(&self) -> &LatticeState {
        self.snapshots.last().expect("a trace holds at least the initial state")
    }
}

/// Velocity-Verlet integration up to time `t_end`, keeping every
/// `stride`-th state.
///
/// # Errors
/// [`Error::InvalidParams`] for nonpositive `dt`, `t_end` or `stride`;
/// [`Error::Blowup`] if any variable exceeds `1e6` in magnitude.
pub fn integrate(state0: &LatticeState, dt: f64, t_end: f64, stride: usize) -> Result<SimTrace> {
    if !(dt > 0.0) || !(t_end >= 0.0) || stride == 0 {
        return Err(Error::InvalidParams(format!("need dt > 0, T >= 0, stride > 0 (dt = {dt}, T = {t_end})")));
    }
    let steps = (t_end / dt).round() as usize;
    let mut state = state0.clone();
    let h0 = state.energy();
    let scale = if h0.abs() > 0.0 { h0.abs() } else { 1.0 };
    let mut trace = SimTrace { snapshots: vec![state.clone()], energy: vec![(state.t, h0)], max_energy_drift: 0.0, dt };
    let mut acc = lattice_rhs(&state);
    let t0 = state.t;
    for step in 1..=steps {
        for (v, a) in state.velocities.iter_mut().zip(&acc) {
            *v += 0.5 * dt * a;
        }
        for (x, v) in state.values.iter_mut().zip(&state.velocities) {
            *x += dt * v;
        }
        acc = lattice_rhs(&state);
        for (v, a) in state.velocities.iter_mut().zip(&acc) {
            *v += 0.5 * dt * a;
        }
        state.t = t0 + step as f64 * dt;
        let big = state.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !(big <= 1e6) {
            return Err(Error::Blowup(state.t));
        }
        let h = state.energy();
        trace.max_energy_drift = trace.max_energy_drift.max((h - h0).abs() / scale);
        if step % stride == 0 || step == steps {
            trace.snapshots.push(state.clone());
            trace.energy.push((state.t, h));
        }
    }
    Ok(trace)
}

/// A relative-displacement traveling-wave profile that can seed a simulation.
pub trait ProfileSource {
    /// Profile value at lattice coordinate `x` for the given site parity.
    fn value(&self, x: f64, parity: Parity) -> f64;
    /// Derivative with respect to `x`.
    fn derivative(&self, x: f64, parity: Parity) -> f64;
    /// Half length of the lattice interval the profile covers (infinite for
    /// closed-form profiles).
    fn half_length(&self) -> f64;
    /// Whether the profile is periodic with period `2 half_length`.
    fn periodic(&self) -> bool {
        false
    }
}

impl ProfileSource for FourierProfile {
    fn value(&self, x: f64, parity: Parity) -> f64 {
        self.eval(x, parity)
    }
    fn derivative(&self, x: f64, parity: Parity) -> f64 {
        self.eval_derivative(x, parity, 1)
    }
    fn half_length(&self) -> f64 {
        self.half_period
    }
    fn periodic(&self) -> bool {
        true
    }
}

/// The closed-form long-wave core `eps^2 core(eps x)` of a relative
/// displacement [`ProfileSpec`] (no ripple).
#[derive(Debug, Clone, PartialEq)]
pub struct CoreProfile {
    /// Profile parameters.
    pub spec: ProfileSpec,
}

impl ProfileSource for CoreProfile {
    fn value(&self, x: f64, parity: Parity) -> f64 {
        let e = self.spec.epsilon;
        e * e * profiles::sech2_core(&self.spec, e * x, parity)
    }
    fn derivative(&self, x: f64, parity: Parity) -> f64 {
        // d/dx sech^2(a x) = -2 a sech^2(a x) tanh(a x) with a = eps q / 2.
        let e = self.spec.epsilon;
        let a = 0.5 * e * self.spec.decay_rate();
        -2.0 * a * self.value(x, parity) * (a * x).tanh()
    }
    fn half_length(&self) -> f64 {
        f64::INFINITY
    }
}

/// Catmull–Rom interpolation of a relative-displacement [`LeadingProfile`];
/// lattice coordinate `x` corresponds to `X = eps x`.
impl ProfileSource for LeadingProfile {
    fn value(&self, x: f64, parity: Parity) -> f64 {
        catmull_rom(&self.grid, self.parity_values(parity), self.metadata.epsilon * x).0
    }
    fn derivative(&self, x: f64, parity: Parity) -> f64 {
        self.metadata.epsilon * catmull_rom(&self.grid, self.parity_values(parity), self.metadata.epsilon * x).1
    }
    fn half_length(&self) -> f64 {
        let lo = self.grid.first().copied().unwrap_or(0.0);
        let hi = self.grid.last().copied().unwrap_or(0.0);
        lo.abs().min(hi.abs()) / self.metadata.epsilon
    }
}

trait ParityValues {
    fn parity_values(&self, parity: Parity) -> &[f64];
}

impl ParityValues for LeadingProfile {
    fn parity_values(&self, parity: Parity) -> &[f64] {
        match parity {
            Parity::Odd => &self.values_odd,
            Parity::Even => &self.values_even,
        }
    }
}

/// Catmull–Rom spline value and derivative on a uniform grid (clamped ends).
fn catmull_rom(grid: &[f64], y: &[f64], x: f64) -> (f64, f64) {
    let n = grid.len();
    let h = (grid[n - 1] - grid[0]) / (n - 1) as f64;
    let s = ((x - grid[0]) / h).clamp(0.0, (n - 1) as f64);
    let i = (s.floor() as usize).min(n - 2);
    let t = s - i as f64;
    let at = |k: i64| y[k.clamp(0, n as i64 - 1) as usize];
    let (p0, p1, p2, p3) = (at(i as i64 - 1), at(i as i64), at(i as i64 + 1), at(i as i64 + 2));
    let a = -0.5 * p0 + 1.5 * p1 - 1.5 * p2 + 0.5 * p3;
    let b = p0 - 2.5 * p1 + 2.0 * p2 - 0.5 * p3;
    let c = 0.5 * (p2 - p0);
    let v = ((a * t + b) * t + c) * t + p1;
    let dv = ((3.0 * a * t + 2.0 * b) * t + c) / h;
    (v, dv)
}

/// Relative-displacement state `r_j = rho(j)`, `r_j' = -c rho'(j)` on the
/// sites `j = -n/2, ..., n/2 - 1`.
///
/// The mean of `r'` is removed so that the boundary twist stays constant.
///
/// # Errors
/// [`Error::DomainTooSmall`] if the chain extends beyond the profile's
/// domain (or differs from the period of a periodic profile by more than
/// rounding); [`Error::InvalidParams`] for odd or too short chains.
pub fn init_from_profile<P: ProfileSource + ?Sized>(profile: &P, c: f64, n: usize, params: &DimerParams) -> Result<LatticeState> {
    let mut state = LatticeState::zeros(n, SimCoordinate::RelDisp, params.clone())?;
    let half = n as f64 / 2.0;
    let l = profile.half_length();
    if profile.periodic() {
        if (l - half).abs() > 1e-9 * l.max(1.0) && half > l {
            return Err(Error::DomainTooSmall(format!("chain half length {half} exceeds the profile period half length {l}")));
        }
    } else if half > l {
        return Err(Error::DomainTooSmall(format!("chain half length {half} exceeds the profile half length {l}")));
    }
    for i in 0..n {
        let j = state.index(i);
        let parity = Parity::of(j);
        state.values[i] = profile.value(j as f64, parity);
        state.velocities[i] = -c * profile.derivative(j as f64, parity);
    }
    let mean = state.velocities.iter().sum::<f64>() / n as f64;
    state.velocities.iter_mut().for_each(|v| *v -= mean);
    Ok(state)
}

/// Periodic sequence `a` shifted by `s` index units (`b_k = a(k - s)`) via
/// trigonometric interpolation.
pub fn fourier_shift(a: &[f64], s: f64) -> Vec<f64> {
    let m = a.len();
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex64> = a.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    planner.plan_fft_forward(m).process(&mut buf);
    let two_pi = 2.0 * std::f64::consts::PI;
    for (i, z) in buf.iter_mut().enumerate() {
        if m % 2 == 0 && i == m / 2 {
            *z *= (std::f64::consts::PI * s).cos();
        } else {
            let f = if i <= m / 2 { i as f64 } else { i as f64 - m as f64 };
            *z *= Complex64::from_polar(1.0, -two_pi * f * s / m as f64);
        }
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    buf.iter().map(|z| z.re / m as f64).collect()
}

/// Shift a dimer field by `sigma` sites (`out_j = r(j - sigma)`).
///
/// The field is split as `r_j = a(j) + (-1)^j b(j)` with smooth `a`, `b`;
/// every Fourier mode of the chain is read either as a mode of `a` or as a
/// mode of `b` carried by the alternating factor, whichever has the smaller
/// wavenumber, and `a`, `b` are translated by `sigma`.  Even shifts are exact
/// rolls.  Use [`shift_dimer_field_banded`] for fields carrying a ripple at a
/// wavenumber above `pi/2`.
pub fn shift_dimer_field(r: &[f64], sigma: f64) -> Vec<f64> {
    shift_dimer_field_banded(r, sigma, None)
}

/// [`shift_dimer_field`] for a travelling wave whose ripple has wavenumber
/// `ripple`.
///
/// A ripple above `pi/2` in the alternating part `b` appears at
/// `pi - ripple`, where it would be mistaken for a smooth mode of `a`; modes
/// whose reading as `a` or `b` lands within a narrow band around `ripple`
/// take that reading instead.  The band half-width is
/// `(ripple - pi/2) / 2`, so the two readings of a mode are never both in it.
pub fn shift_dimer_field_banded(r: &[f64], sigma: f64, ripple: Option<f64>) -> Vec<f64> {
    let n = r.len();
    if n == 0 {
        return Vec::new();
    }
    let pi = std::f64::consts::PI;
    let band = ripple
        .filter(|&w| w > 0.5 * pi && w < pi)
        .map(|w| (w, 0.5 * (w - 0.5 * pi)));
    let off_ripple = |k: f64| band.map_or(f64::INFINITY, |(w, _)| (k.abs() - w).abs());
    let in_band = |k: f64| band.is_some_and(|(_, d)| off_ripple(k) <= d);
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex64> = r.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (i, z) in buf.iter_mut().enumerate() {
        let f = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
        let q = 2.0 * pi * f / n as f64;
        let k = if n % 2 == 0 && q != 0.0 {
            let alt = q - pi * q.signum();
            match (in_band(q), in_band(alt)) {
                (false, true) => alt,
                (true, false) => q,
                (true, true) if off_ripple(alt) < off_ripple(q) => alt,
                (true, true) => q,
                _ if alt.abs() < q.abs() => alt,
                _ => q,
            }
        } else {
            q
        };
        *z *= Complex64::from_polar(1.0, -k * sigma);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|z| z.re / n as f64).collect()
}

/// Shape diagnostics of a simulation relative to its initial state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TravelingReport {
    /// Unwrapped best-fit shift `sigma(t)` of each snapshot, in sites.
    pub shifts: Vec<f64>,
    /// `max_j |r_j(t) - r_{j - sigma}(0)| / max_j |r_j(0)|` per snapshot.
    pub errors: Vec<f64>,
    /// Largest shape error.
    pub max_error: f64,
    /// Least-squares slope of `sigma(t)`.
    pub fitted_speed: f64,
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Best shift of `r0` onto `r`, searched among even site shifts by
/// cross-correlation, refined quadratically and then by minimizing the
/// squared mismatch.  Returns a shift in `[0, n)`.
fn best_shift(r0: &[f64], r: &[f64], ripple: Option<f64>) -> f64 {
    let n = r0.len();
    let half = n / 2;
    let corr = |m: usize| -> f64 { (0..n).map(|j| r[(j + 2 * m) % n] * r0[j]).sum() };
    let cs: Vec<f64> = (0..half).map(corr).collect();
    let m = (0..half).max_by(|&a, &b| cs[a].total_cmp(&cs[b])).unwrap_or(0);
    let (cm, c0, cp) = (cs[(m + half - 1) % half], cs[m], cs[(m + 1) % half]);
    let den = cm - 2.0 * c0 + cp;
    let delta = if den.abs() > 0.0 { (0.5 * (cm - cp) / den).clamp(-1.0, 1.0) } else { 0.0 };
    let guess = 2.0 * (m as f64 + delta);
    let mismatch = |s: f64| -> f64 {
        shift_dimer_field_banded(r0, s, ripple).iter().zip(r).map(|(a, b)| (a - b) * (a - b)).sum()
    };
    golden_min(mismatch, guess - 2.0, guess + 2.0, 60).rem_euclid(n as f64)
}

/// Shape error of every snapshot against the first one, after the optimal
/// shift; shifts are unwrapped using the expected speed `c`.
///
/// Off-lattice shifts interpolate each parity class in the band of a
/// travelling wave of speed `c`: the core near wavenumber zero and the
/// ripple at the positive root of the dispersion function (when the lattice
/// is diatomic and `c` is supersonic).
///
/// # Errors
/// [`Error::InvalidParams`] with fewer than two snapshots.
pub fn traveling_error(trace: &SimTrace, c: f64) -> Result<TravelingReport> {
    if trace.snapshots.len() < 2 {
        return Err(Error::InvalidParams("need at least two snapshots".into()));
    }
    let r0 = trace.snapshots[0].relative_displacement();
    let ripple = dispersion::critical_frequency(&trace.snapshots[0].params, c).ok().map(|rep| rep.location);
    let n = r0.len() as f64;
    let amp = r0.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let t0 = trace.snapshots[0].t;
    let mut shifts = Vec::new();
    let mut errors = Vec::new();
    let mut prev = (t0, 0.0);
    for snap in &trace.snapshots {
        let r = snap.relative_displacement();
        let s = best_shift(&r0, &r, ripple);
        let expected = prev.1 + c * (snap.t - prev.0);
        let unwrapped = s + n * ((expected - s) / n).round();
        let shifted = shift_dimer_field_banded(&r0, s, ripple);
        let err = shifted.iter().zip(&r).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        errors.push(if amp > 0.0 { err / amp } else { err });
        shifts.push(unwrapped);
        prev = (snap.t, unwrapped);
    }
    let ts: Vec<f64> = trace.snapshots.iter().map(|s| s.t).collect();
    let (fitted_speed, _, _) = profiles::linear_fit(&ts, &shifts);
    let max_error = errors.iter().cloned().fold(0.0, f64::max);
    Ok(TravelingReport { shifts, errors, max_error, fitted_speed })
}

/// Shape error of every snapshot against the travelling profile that seeded
/// the run: for each snapshot the offset `sigma(t)` minimizing
/// `sum_j (r_j(t) - P(j - sigma))^2` is fitted near `c t`, and the error is
/// `max_j |r_j(t) - P(j - sigma)| / max_j |r_j(0)|`.  Positions are wrapped
/// onto the periodic chain.
///
/// Unlike [`traveling_error`], no lattice interpolation is involved, so the
/// result measures the dynamics alone.
///
/// # Errors
/// [`Error::InvalidParams`] for an empty trace.
pub fn profile_tracking_error<P: ProfileSource + ?Sized>(trace: &SimTrace, profile: &P, c: f64) -> Result<TravelingReport> {
    let first = trace.snapshots.first().ok_or_else(|| Error::InvalidParams("empty trace".into()))?;
    let n = first.len() as f64;
    let sites: Vec<(f64, Parity)> = (0..first.len()).map(|i| (first.index(i) as f64, Parity::of(first.index(i)))).collect();
    let r0 = first.relative_displacement();
    let amp = r0.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let amp = if amp > 0.0 { amp } else { 1.0 };
    let model = |sigma: f64| -> Vec<f64> {
        sites
            .iter()
            .map(|&(j, par)| profile.value((j - sigma + 0.5 * n).rem_euclid(n) - 0.5 * n, par))
            .collect()
    };
    let mut shifts = Vec::new();
    let mut errors = Vec::new();
    for snap in &trace.snapshots {
        let r = snap.relative_displacement();
        let guess = c * (snap.t - first.t);
        let mismatch = |sigma: f64| -> f64 { model(sigma).iter().zip(&r).map(|(a, b)| (a - b) * (a - b)).sum() };
        let sigma = golden_min(mismatch, guess - 1.0, guess + 1.0, 50);
        let err = model(sigma).iter().zip(&r).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        shifts.push(sigma);
        errors.push(err / amp);
    }
    let ts = trace.times();
    let (fitted_speed, _, _) = profiles::linear_fit(&ts, &shifts);
    let max_error = errors.iter().cloned().fold(0.0, f64::max);
    Ok(TravelingReport { shifts, errors, max_error, fitted_speed })
}

/// Peak of the trigonometric interpolant of a periodic sequence near its
/// largest sample.
fn interpolated_peak(a: &[f64]) -> f64 {
    let m = a.len();
    let k = (0..m).max_by(|&x, &y| a[x].total_cmp(&a[y])).unwrap_or(0) as f64;
    // f(k + s) = a shifted by -s, read at k.
    let value = |s: f64| -> f64 { fourier_shift(a, -s)[k as usize] };
    let s = golden_min(|s| -value(s), -1.0, 1.0, 50);
    value(s)
}

/// Ratio of the odd-site to the even-site core peak.  The peaks are those of
/// the smooth interpolants through each parity class, taken with the sign of
/// the largest excursion.
pub fn stegoton_ratio_of(r: &[f64], first_index: i64) -> f64 {
    let sign = r.iter().fold(0.0f64, |m, &x| if x.abs() > m.abs() { x } else { m }).signum();
    let odd_off = if first_index.rem_euclid(2) == 1 { 0 } else { 1 };
    let sub = |off: usize| r.iter().skip(off).step_by(2).map(|x| sign * x).collect::<Vec<f64>>();
    interpolated_peak(&sub(odd_off)) / interpolated_peak(&sub(1 - odd_off))
}

/// Odd/even core peak ratio of every snapshot.
pub fn stegoton_ratio(trace: &SimTrace) -> Vec<f64> {
    trace.snapshots.iter().map(|s| stegoton_ratio_of(&s.relative_displacement(), s.first_index)).collect()
}

/// Odd/even peak ratio of a collocation profile (`rho_1` over `rho_2`).
pub fn profile_peak_ratio(profile: &FourierProfile) -> f64 {
    let peak = |parity: Parity| -> f64 {
        let v = profile.values(parity);
        let sign = v.iter().fold(0.0f64, |m, &x| if x.abs() > m.abs() { x } else { m }).signum();
        let grid = profile.grid();
        let i = (0..v.len()).max_by(|&a, &b| (sign * v[a]).total_cmp(&(sign * v[b]))).unwrap_or(0);
        let h = grid[1] - grid[0];
        let x = golden_min(|x| -sign * profile.eval(x, parity), grid[i] - h, grid[i] + h, 60);
        sign * profile.eval(x, parity)
    };
    peak(Parity::Odd) / peak(Parity::Even)
}

/// Summary diagnostics of a trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Snapshot times.
    pub times: Vec<f64>,
    /// Shape error per snapshot.
    pub shape_error: Vec<f64>,
    /// `(H(t) - H(0)) / |H(0)|` per snapshot.
    pub energy_drift: Vec<f64>,
    /// Largest relative energy deviation over all steps.
    pub max_energy_drift: f64,
    /// Fitted speed.
    pub fitted_speed: f64,
    /// Odd/even core peak ratio per snapshot.
    pub stegoton_ratio: Vec<f64>,
}

/// Compute all diagnostics of a trace for a wave expected to travel at `c`.
pub fn diagnostics(trace: &SimTrace, c: f64) -> Result<Diagnostics> {
    let tr = traveling_error(trace, c)?;
    let h0 = trace.energy[0].1;
    let scale = if h0.abs() > 0.0 { h0.abs() } else { 1.0 };
    Ok(Diagnostics {
        times: trace.times(),
        shape_error: tr.errors,
        energy_drift: trace.energy.iter().map(|(_, h)| (h - h0) / scale).collect(),
        max_energy_drift: trace.max_energy_drift,
        fitted_speed: tr.fitted_speed,
        stegoton_ratio: stegoton_ratio(trace),
    })
}

/// One row of [`kdv_residual_scan`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KdvRow {
    /// Long-wave parameter.
    pub epsilon: f64,
    /// Chain length.
    pub sites: usize,
    /// Final time `T0 eps^{-3}`.
    pub t_end: f64,
    /// `sup_{t, j} |r_j(t) - eps^2 K(eps (j - c_eps t))|`.
    pub discrepancy: f64,
    /// `discrepancy / eps^2`.
    pub ratio: f64,
    /// Largest relative energy deviation.
    pub energy_drift: f64,
}

/// Options of [`kdv_residual_scan`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KdvOptions {
    /// Time step.
    pub dt: f64,
    /// Chain length as a multiple of `1 / eps` (rounded up to an even number).
    pub length_factor: f64,
    /// Number of comparison times.
    pub samples: usize,
}

impl Default for KdvOptions {
    fn default() -> Self {
        Self { dt: 0.02, length_factor: 80.0, samples: 200 }
    }
}

/// Simulate the long-wave core `eps^2 core(eps j)` and compare it, up to
/// `T0 eps^{-3}`, with its rigid translate at the long-wave speed `c_eps`
/// (the KdV soliton flow).  Rows with `eps = 0` are skipped; rows are
/// computed in parallel.
pub fn kdv_residual_scan(eps_list: &[f64], params: &DimerParams, t0: f64) -> Result<Vec<KdvRow>> {
    kdv_residual_scan_with(eps_list, params, t0, &KdvOptions::default())
}

/// [`kdv_residual_scan`] with explicit options.
pub fn kdv_residual_scan_with(eps_list: &[f64], params: &DimerParams, t0: f64, opts: &KdvOptions) -> Result<Vec<KdvRow>> {
    let eps: Vec<f64> = eps_list.iter().copied().filter(|&e| e != 0.0).collect();
    let rows: Vec<Result<KdvRow>> = std::thread::scope(|s| {
        let handles: Vec<_> = eps.iter().map(|&e| s.spawn(move || kdv_row(e, params, t0, opts))).collect();
        handles.into_iter().map(|h| h.join().expect("scan worker panicked")).collect()
    });
    rows.into_iter().collect()
}

fn kdv_row(eps: f64, params: &DimerParams, t0: f64, opts: &KdvOptions) -> Result<KdvRow> {
    let spec = ProfileSpec::new(eps, 0.0, params.clone(), Coordinate::RelativeDisplacement)?;
    let c = spec.wave_speed();
    let core = CoreProfile { spec };
    let n = {
        let m = (opts.length_factor / eps).ceil() as usize;
        m + m % 2
    };
    let state = init_from_profile(&core, c, n, params)?;
    let t_end = t0 / eps.powi(3);
    let steps = (t_end / opts.dt).round().max(1.0) as usize;
    let stride = (steps / opts.samples.max(1)).max(1);
    let trace = integrate(&state, opts.dt, t_end, stride)?;
    let mut discrepancy = 0.0f64;
    for snap in &trace.snapshots {
        for i in 0..n {
            let j = snap.index(i);
            let x = (j as f64 - c * snap.t + 0.5 * n as f64).rem_euclid(n as f64) - 0.5 * n as f64;
            discrepancy = discrepancy.max((snap.values[i] - core.value(x, Parity::of(j))).abs());
        }
    }
    Ok(KdvRow {
        epsilon: eps,
        sites: n,
        t_end,
        discrepancy,
        ratio: discrepancy / (eps * eps),
        energy_drift: trace.max_energy_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_state(n: usize, coord: SimCoordinate, p: &DimerParams, seed: u64) -> LatticeState {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut s = LatticeState::zeros(n, coord, p.clone()).unwrap();
        s.values.iter_mut().for_each(|x| *x = rng.random_range(-0.05..0.05));
        s.velocities.iter_mut().for_each(|x| *x = rng.random_range(-0.05..0.05));
        s
    }

    #[test]
    fn rhs_trivial_states() {
        let p = DimerParams::mass(2.0).unwrap();
        let mut s = LatticeState::zeros(10, SimCoordinate::Position, p).unwrap();
        assert!(lattice_rhs(&s).iter().all(|&a| a == 0.0));
        s.values.iter_mut().for_each(|x| *x = 3.7);
        assert!(lattice_rhs(&s).iter().all(|&a| a == 0.0));
        assert!(LatticeState::zeros(7, SimCoordinate::RelDisp, DimerParams::default()).is_err());
    }

    #[test]
    fn position_and_relative_rhs_agree() {
        for p in [DimerParams::mass(3.0).unwrap(), DimerParams::spring(2.0, 1.0).unwrap()] {
            let mut s = random_state(12, SimCoordinate::Position, &p, 3);
            s.twist = 0.2;
            let a_u = lattice_rhs(&s);
            let mut r = s.clone();
            r.values = s.relative_displacement();
            r.coordinate = SimCoordinate::RelDisp;
            let a_r = lattice_rhs(&r);
            let diff = differences(&a_u, 0.0);
            for (a, b) in diff.iter().zip(&a_r) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dimer_equations_written_out() {
        // Odd site: r'' = w V_2'(r_{j+1}) - (1+w) V_1'(r_j) + V_2'(r_{j-1}).
        let p = DimerParams::new(1.5, 1.0, 2.5).unwrap();
        let s = random_state(8, SimCoordinate::RelDisp, &p, 9);
        let a = lattice_rhs(&s);
        for i in 1..7 {
            let (rm, r0, rp) = (s.values[i - 1], s.values[i], s.values[i + 1]);
            let want = match Parity::of(s.index(i)) {
                Parity::Odd => p.w * p.v2p(rp) - (1.0 + p.w) * p.v1p(r0) + p.v2p(rm),
                Parity::Even => p.v1p(rp) - (1.0 + p.w) * p.v2p(r0) + p.w * p.v1p(rm),
            };
            assert!((a[i] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_state_stays_zero() {
        let s = LatticeState::zeros(16, SimCoordinate::RelDisp, DimerParams::default()).unwrap();
        let tr = integrate(&s, 0.1, 5.0, 10).unwrap();
        assert!(tr.last().values.iter().all(|&x| x == 0.0));
        assert_eq!(tr.max_energy_drift, 0.0);
        assert!(tr.times().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn affine_motion_is_a_symmetry() {
        let p = DimerParams::mass(2.0).unwrap();
        let s = random_state(20, SimCoordinate::Position, &p, 5);
        let mut shifted = s.clone();
        shifted.values.iter_mut().for_each(|x| *x += 0.7);
        shifted.velocities.iter_mut().for_each(|v| *v += 0.3);
        for (a, b) in lattice_rhs(&s).iter().zip(lattice_rhs(&shifted)) {
            assert!((a - b).abs() < 1e-14);
        }
        let a = integrate(&s, 0.01, 5.0, 100).unwrap();
        let b = integrate(&shifted, 0.01, 5.0, 100).unwrap();
        for (x, y) in a.last().values.iter().zip(&b.last().values) {
            assert!((y - x - 0.7 - 0.3 * 5.0).abs() < 1e-10);
        }
    }

    #[test]
    fn verlet_energy_error_is_second_order() {
        let p = DimerParams::mass(2.0).unwrap();
        let s = random_state(32, SimCoordinate::Position, &p, 11);
        let d1 = integrate(&s, 0.02, 4.0, 1000).unwrap().max_energy_drift;
        let d2 = integrate(&s, 0.01, 4.0, 1000).unwrap().max_energy_drift;
        let ratio = d1 / d2;
        assert!((ratio - 4.0).abs() < 0.4, "{ratio}");
    }

    #[test]
    fn position_and_relative_trajectories_agree() {
        let p = DimerParams::spring(2.0, 1.0).unwrap();
        let r = random_state(24, SimCoordinate::RelDisp, &p, 2);
        let mut r = r;
        let mean = r.velocities.iter().sum::<f64>() / 24.0;
        r.velocities.iter_mut().for_each(|v| *v -= mean);
        let u = r.to_position(0.0);
        let tr = integrate(&r, 0.01, 10.0, 1000).unwrap();
        let tu = integrate(&u, 0.01, 10.0, 1000).unwrap();
        let ru = tu.last().relative_displacement();
        for (a, b) in ru.iter().zip(&tr.last().values) {
            assert!((a - b).abs() < 1e-8);
        }
        assert!((tr.last().energy() - tu.last().energy()).abs() < 1e-10);
    }

    #[test]
    fn blowup_is_reported() {
        let p = DimerParams::mass(2.0).unwrap();
        let mut s = LatticeState::zeros(8, SimCoordinate::RelDisp, p).unwrap();
        s.values[3] = -5.0;
        assert!(matches!(integrate(&s, 0.05, 50.0, 10), Err(Error::Blowup(_))));
    }

    #[test]
    fn shifts_and_traveling_error() {
        let n = 64;
        let f = |x: f64| 0.3 / (0.2 * x).cosh().powi(2);
        let r0: Vec<f64> = (0..n).map(|i| f(i as f64 - 32.0)).collect();
        let sh = shift_dimer_field(&r0, 3.3);
        for i in 20..44 {
            assert!((sh[i] - f(i as f64 - 35.3)).abs() < 1e-4);
        }
        let p = DimerParams::mass(2.0).unwrap();
        let mut snaps = Vec::new();
        for k in 0..5 {
            let mut s = LatticeState::zeros(n, SimCoordinate::RelDisp, p.clone()).unwrap();
            s.t = k as f64;
            s.values = shift_dimer_field(&r0, 1.7 * k as f64 + 60.0 * (k / 4) as f64);
            snaps.push(s);
        }
        let trace = SimTrace { energy: snaps.iter().map(|s| (s.t, 0.0)).collect(), snapshots: snaps, max_energy_drift: 0.0, dt: 1.0 };
        let rep = traveling_error(&trace, 1.7).unwrap();
        assert!(rep.max_error < 1e-8, "{}", rep.max_error);
        assert!((rep.shifts[3] - 5.1).abs() < 1e-5);
    }

    #[test]
    fn banded_shift_resolves_a_fast_ripple() {
        let n = 256;
        let w = 2.0 * std::f64::consts::PI * 70.0 / n as f64;
        let g = |x: f64| 0.3 / (0.25 * x).cosh().powi(2) + 0.01 * (w * x).cos();
        let r0: Vec<f64> = (0..n).map(|i| g(i as f64 - 128.0)).collect();
        let err = |sh: &[f64], sigma: f64| {
            (60..200).map(|i| (sh[i] - g(i as f64 - 128.0 - sigma)).abs()).fold(0.0, f64::max)
        };
        for sigma in [0.5, 1.0, 3.3] {
            assert!(err(&shift_dimer_field_banded(&r0, sigma, Some(w)), sigma) < 1e-3);
            // Without the band the ripple is read as its slow alias.
            assert!(err(&shift_dimer_field(&r0, sigma), sigma) > 1e-2);
        }
    }

    #[test]
    fn profile_tracking_of_a_rigid_translate() {
        let p = DimerParams::mass(2.0).unwrap();
        let spec = ProfileSpec::new(0.3, 0.0, p.clone(), Coordinate::RelativeDisplacement).unwrap();
        let core = CoreProfile { spec };
        let c = 1.2;
        let mut snaps = Vec::new();
        for k in 0..4 {
            let mut s = init_from_profile(&core, c, 120, &p).unwrap();
            s.t = 2.5 * k as f64;
            for i in 0..s.len() {
                let j = s.index(i);
                let x = (j as f64 - c * s.t + 60.0).rem_euclid(120.0) - 60.0;
                s.values[i] = core.value(x, Parity::of(j));
            }
            snaps.push(s);
        }
        let trace = SimTrace { energy: snaps.iter().map(|s| (s.t, 0.0)).collect(), snapshots: snaps, max_energy_drift: 0.0, dt: 1.0 };
        let rep = profile_tracking_error(&trace, &core, c + 0.01).unwrap();
        assert!(rep.max_error < 1e-9, "{}", rep.max_error);
        assert!((rep.fitted_speed - c).abs() < 1e-8);
    }

    #[test]
    fn stegoton_ratio_of_leading_core() {
        // Each parity class is interpolated from samples two sites apart, so
        // the sech^2 spectrum beyond pi/2 aliases at the 1e-5 level here.
        let p = DimerParams::spring(2.0, 1.0).unwrap();
        let spec = ProfileSpec::new(0.1, 0.0, p.clone(), Coordinate::RelativeDisplacement).unwrap();
        let s = init_from_profile(&CoreProfile { spec }, 1.0, 200, &p).unwrap();
        let ratio = stegoton_ratio_of(&s.values, s.first_index);
        assert!((ratio - 2.0).abs() < 1e-4, "{ratio}");
        let m = DimerParams::mass(2.0).unwrap();
        let spec = ProfileSpec::new(0.1, 0.0, m.clone(), Coordinate::RelativeDisplacement).unwrap();
        let s = init_from_profile(&CoreProfile { spec }, 1.0, 200, &m).unwrap();
        assert!((stegoton_ratio_of(&s.values, s.first_index) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn leading_profile_source() {
        let p = DimerParams::mass(2.0).unwrap();
        let spec = ProfileSpec::new(0.2, 0.0, p.clone(), Coordinate::RelativeDisplacement).unwrap();
        let lead = profiles::assemble_nanopteron(&spec, 0.0, &profiles::uniform_grid(20.0, 4001)).unwrap();
        let core = CoreProfile { spec };
        for x in [-30.0, -3.3, 0.0, 12.7] {
            assert!((lead.value(x, Parity::Odd) - core.value(x, Parity::Odd)).abs() < 1e-9);
            assert!((lead.derivative(x, Parity::Even) - core.derivative(x, Parity::Even)).abs() < 1e-7);
        }
        assert!((lead.half_length() - 100.0).abs() < 1e-9);
        assert!(matches!(init_from_profile(&lead, 1.0, 220, &p), Err(Error::DomainTooSmall(_))));
        let zero = LatticeState::zeros(8, SimCoordinate::RelDisp, p.clone()).unwrap();
        let spec0 = ProfileSpec::new(0.2, 0.0, p.clone(), Coordinate::RelativeDisplacement).unwrap();
        let mut l0 = profiles::assemble_nanopteron(&spec0, 0.0, &profiles::uniform_grid(20.0, 11)).unwrap();
        l0.values_odd.iter_mut().for_each(|v| *v = 0.0);
        l0.values_even.iter_mut().for_each(|v| *v = 0.0);
        assert_eq!(init_from_profile(&l0, 1.0, 8, &p).unwrap().values, zero.values);
    }
}
