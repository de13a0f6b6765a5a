//! Fourier-collocation solvers for relative-displacement traveling waves.
//!
//! With `r_j(t) = rho_1(j - c t)` on odd sites and `rho_2(j - c t)` on even
//! sites, the profiles satisfy
//!
//! ```text
//! c^2 rho_1'' = -(1+w) V_1'(rho_1) + (w S^1 + S^-1) V_2'(rho_2)
//! c^2 rho_2'' = (S^1 + w S^-1) V_1'(rho_1) - (1+w) V_2'(rho_2),
//! ```
//!
//! whose linear part is the Fourier multiplier `Ltilde(k)` (eigenvalues
//! `-lambda_-(k)`, `-lambda_+(k)`).  The solvers work on a periodic domain
//! `[-L, L)` and split every Fourier mode with the spectral projectors of
//! `Ltilde(k)`:
//!
//! * the acoustic component is divided by `k^2` (the Friesecke–Pego
//!   cancellation), which turns it into
//!   `(c^2 - s(k) Lambda_-(k)) rho - s(k) Lambda_-(k) K^{-1} h(rho)`; at `k = 0`
//!   this is the first-integral closure fixing the mean of the acoustic
//!   component, which the raw equations leave undetermined;
//! * the optical component is normalized by `c^2 k^2 + lambda_+(k)`.
//!
//! Here `K = diag(1, kappa)` and `h` is the nonlinear part of the spring
//! forces.  Reversibility reduces the unknowns to half the grid: for mass
//! dimers `rho_2(x) = rho_1(-x)` (so `rho_1 + rho_2` is even and
//! `rho_1 - rho_2` odd), for spring dimers both profiles are even.  Newton's
//! method with Armijo backtracking solves the collocation equations with a
//! dense LU factorization.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::dispersion::{critical_frequency, lambda_pm, sound_speed};
use crate::error::{Error, Result};
use crate::params::{DimerKind, DimerParams};
use crate::profiles::{self, Coordinate, Parity, ProfileSpec};

type C64 = Complex64;

/// Symbol of the linear relative-displacement operator,
/// `[[-(1+w), kappa (w e^{ik} + e^{-ik})], [e^{ik} + w e^{-ik}, -kappa (1+w)]]`.
pub fn symbol_ltilde(k: f64, p: &DimerParams) -> Matrix2<C64> {
    let e = C64::from_polar(1.0, k);
    let ei = e.conj();
    let (kap, w) = (p.kappa, p.w);
    Matrix2::new(
        C64::new(-(1.0 + w), 0.0),
        (e * w + ei) * kap,
        e + ei * w,
        C64::new(-kap * (1.0 + w), 0.0),
    )
}

/// Symbol of `w S^1 + S^-1` etc. acting on the spring forces (without the
/// factor `K`): `Ltilde(k) = A(k) diag(1, kappa)`.
fn symbol_a(k: f64, p: &DimerParams) -> Matrix2<C64> {
    let e = C64::from_polar(1.0, k);
    let ei = e.conj();
    let w = p.w;
    Matrix2::new(C64::new(-(1.0 + w), 0.0), e * w + ei, e + ei * w, C64::new(-(1.0 + w), 0.0))
}

/// Eigen-decomposition of [`symbol_ltilde`].
#[derive(Debug, Clone, PartialEq)]
pub struct Diagonalization {
    /// Columns are unit eigenvectors for `-lambda_-` and `-lambda_+`.
    pub eigvecs: Matrix2<C64>,
    /// Acoustic branch `lambda_-(k) >= 0`.
    pub lambda_minus: f64,
    /// Optical branch `lambda_+(k) > lambda_-(k)`.
    pub lambda_plus: f64,
}

fn eigvec_for(l: &Matrix2<C64>, e: f64) -> Matrix2<C64> {
    // Two candidate null vectors of L - e I, taken from either row.
    let a = nalgebra::Vector2::new(l[(0, 1)], C64::new(e, 0.0) - l[(0, 0)]);
    let b = nalgebra::Vector2::new(C64::new(e, 0.0) - l[(1, 1)], l[(1, 0)]);
    let v = if a.norm() >= b.norm() { a } else { b };
    let v = v / C64::new(v.norm(), 0.0);
    Matrix2::from_columns(&[v, nalgebra::Vector2::zeros()])
}

/// Diagonalize `Ltilde(k) = Jt diag(-lambda_-, -lambda_+) Jt^{-1}`.
///
/// Eigenvectors have unit norm; their phase makes the largest component of
/// the acoustic vector real and positive, so `v_-(0)` is a positive multiple
/// of `(kappa, 1)`.  Use [`diagonalize_on_grid`] for a continuous choice.
///
/// # Errors
/// [`Error::DegenerateEigenvalues`] if the two branches touch (only for the
/// monatomic chain).
pub fn diagonalize_symbol(k: f64, p: &DimerParams) -> Result<Diagonalization> {
    let (lm, lp) = lambda_pm(k, p);
    if lp - lm <= 1e-12 * lp {
        return Err(Error::DegenerateEigenvalues(k));
    }
    let l = symbol_ltilde(k, p);
    let mut vm = eigvec_for(&l, -lm).column(0).into_owned();
    let mut vp = eigvec_for(&l, -lp).column(0).into_owned();
    for v in [&mut vm, &mut vp] {
        let big = if v[0].norm() >= v[1].norm() { v[0] } else { v[1] };
        let phase = big.conj() / big.norm();
        *v *= phase;
    }
    Ok(Diagonalization { eigvecs: Matrix2::from_columns(&[vm, vp]), lambda_minus: lm, lambda_plus: lp })
}

/// Diagonalize along a grid of wavenumbers, choosing each eigenvector's phase
/// to maximize the overlap with the previous grid point.
pub fn diagonalize_on_grid(ks: &[f64], p: &DimerParams) -> Result<Vec<Diagonalization>> {
    let mut out: Vec<Diagonalization> = Vec::with_capacity(ks.len());
    for &k in ks {
        let mut d = diagonalize_symbol(k, p)?;
        if let Some(prev) = out.last() {
            for col in 0..2 {
                let overlap = prev.eigvecs.column(col).dotc(&d.eigvecs.column(col));
                if overlap.norm() > 0.0 {
                    let phase = overlap.conj() / overlap.norm();
                    let v = d.eigvecs.column(col) * phase;
                    d.eigvecs.set_column(col, &v);
                }
            }
        }
        out.push(d);
    }
    Ok(out)
}

/// `Lambda_-(k) = lambda_-(k) / (2 (1 - cos k))`, continued analytically
/// through `k in 2 pi Z` (where it equals `c_s^2`).
pub fn lambda_minus_factor(k: f64, p: &DimerParams) -> f64 {
    let (_, lp) = lambda_pm(k, p);
    // lambda_- = 4 kappa w sin^2 k / lambda_+ and sin^2 k / (4 sin^2(k/2)) = cos^2(k/2).
    4.0 * p.kappa * p.w * (0.5 * k).cos().powi(2) / lp
}

/// Symbol `s(k) = 2 (1 - cos k) / k^2` of `I_+ I_-`, with `s(0) = 1`.
pub fn s_hat(k: f64) -> f64 {
    let h = 0.5 * k;
    if h == 0.0 {
        1.0
    } else {
        (h.sin() / h).powi(2)
    }
}

/// `s(k) Lambda_-(k) = lambda_-(k) / k^2`.
fn sigma_minus(k: f64, p: &DimerParams, lp: f64) -> f64 {
    let sinc = if k == 0.0 { 1.0 } else { k.sin() / k };
    4.0 * p.kappa * p.w * sinc * sinc / lp
}

/// Friesecke–Pego symbol `s Lambda_- / (c^2 - s Lambda_-)` of
/// `(c^2 - I_+ I_- Lambda_-)^{-1} I_+ I_- Lambda_-`.
///
/// # Errors
/// [`Error::SymbolSingular`] if the denominator is within `1e-8` of zero.
pub fn fp_cancel_symbol(k: f64, p: &DimerParams, c: f64) -> Result<f64> {
    let sl = s_hat(k) * lambda_minus_factor(k, p);
    let den = c * c - sl;
    if den.abs() < 1e-8 {
        return Err(Error::SymbolSingular(k));
    }
    Ok(sl / den)
}

/// Speed `C_nu = (c_s^2 + nu^2)^{1/2}` of the near-sonic parametrization.
pub fn speed_from_nu(nu: f64, p: &DimerParams) -> f64 {
    (sound_speed(p).powi(2) + nu * nu).sqrt()
}

/// Critical ripple frequency `Omega_nu = omega_c / nu` in the long-wave
/// variable, with `omega_c` the positive root of the dispersion relation at
/// `c = (c_s^2 + nu^2)^{1/2}`.
pub fn critical_ripple_frequency(nu: f64, p: &DimerParams) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::InvalidParams(format!("nu must be > 0, got {nu}")));
    }
    Ok(critical_frequency(p, speed_from_nu(nu, p))?.location / nu)
}

/// Reversibility class of the collocation unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Symmetry {
    /// Mass dimer: `rho_1 + rho_2` even, `rho_1 - rho_2` odd (`rho_2(x) = rho_1(-x)`).
    EvenOdd,
    /// Spring dimer: `rho_1` and `rho_2` even.
    EvenEven,
}

impl Symmetry {
    /// Class for the given lattice.
    ///
    /// # Errors
    /// [`Error::Unsupported`] for general dimers and the monatomic chain.
    pub fn for_params(p: &DimerParams) -> Result<Self> {
        match p.kind() {
            DimerKind::Mass => Ok(Symmetry::EvenOdd),
            DimerKind::Spring => Ok(Symmetry::EvenEven),
            DimerKind::General => Err(Error::Unsupported(
                "collocation needs the reversibility of a mass (kappa = 1, V_1 = V_2) or spring (w = 1) dimer".into(),
            )),
            DimerKind::Monatomic => Err(Error::Unsupported("the monatomic chain has no ripple".into())),
        }
    }
}

/// Traveling-wave profile pair on a periodic domain, stored as Fourier
/// coefficients `rho(x) = sum_n coeff_n e^{i k_n x}`, `k_n = pi n / L`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierProfile {
    /// Half period `L`.
    pub half_period: f64,
    /// Number of grid points / Fourier modes.
    pub modes: usize,
    /// Coefficients of `rho_1` in FFT order.
    #[serde(skip)]
    pub coeffs1: Vec<C64>,
    /// Coefficients of `rho_2` in FFT order.
    #[serde(skip)]
    pub coeffs2: Vec<C64>,
    /// Reversibility class.
    pub symmetry: Symmetry,
    /// Wave speed.
    pub wave_speed: f64,
    /// Near-sonic parameter (`c^2 = c_s^2 + nu^2`).
    pub nu: f64,
    /// Max-norm residual of the traveling-wave equations on the grid.
    pub residual: f64,
    /// Lattice parameters.
    pub params: DimerParams,
}

fn wavenumber(n: usize, len: usize, unit: f64) -> f64 {
    if n <= len / 2 {
        n as f64 * unit
    } else {
        (n as f64 - len as f64) * unit
    }
}

impl FourierProfile {
    fn from_values(
        rho: &[Vec<f64>; 2],
        half_period: f64,
        symmetry: Symmetry,
        wave_speed: f64,
        nu: f64,
        residual: f64,
        params: DimerParams,
    ) -> Self {
        let n = rho[0].len();
        let fft = FftPlanner::new().plan_fft_forward(n);
        let unit = std::f64::consts::PI / half_period;
        let coeffs = |v: &[f64]| {
            let mut buf: Vec<C64> = v.iter().map(|&x| C64::new(x, 0.0)).collect();
            fft.process(&mut buf);
            buf.iter()
                .enumerate()
                .map(|(i, z)| z * C64::from_polar(1.0 / n as f64, wavenumber(i, n, unit) * half_period))
                .collect::<Vec<_>>()
        };
        Self {
            half_period,
            modes: n,
            coeffs1: coeffs(&rho[0]),
            coeffs2: coeffs(&rho[1]),
            symmetry,
            wave_speed,
            nu,
            residual,
            params,
        }
    }

    fn coeffs(&self, parity: Parity) -> &[C64] {
        match parity {
            Parity::Odd => &self.coeffs1,
            Parity::Even => &self.coeffs2,
        }
    }

    fn unit(&self) -> f64 {
        std::f64::consts::PI / self.half_period
    }

    /// Trigonometric interpolant of `rho_1` (odd parity) or `rho_2` at `x`.
    pub fn eval(&self, x: f64, parity: Parity) -> f64 {
        self.eval_derivative(x, parity, 0)
    }

    /// `order`-th derivative of the interpolant at `x`.
    pub fn eval_derivative(&self, x: f64, parity: Parity, order: u32) -> f64 {
        let n = self.modes;
        let unit = self.unit();
        let mut acc = 0.0;
        for (i, c) in self.coeffs(parity).iter().enumerate() {
            let k = wavenumber(i, n, unit);
            let factor = C64::new(0.0, k).powu(order);
            if n % 2 == 0 && i == n / 2 {
                // The Nyquist mode contributes its real cosine part only.
                let d = (C64::new(0.0, k).powu(order) * C64::from_polar(1.0, k * x)).re;
                let d_neg = (C64::new(0.0, -k).powu(order) * C64::from_polar(1.0, -k * x)).re;
                acc += c.re * 0.5 * (d + d_neg);
            } else {
                acc += (c * factor * C64::from_polar(1.0, k * x)).re;
            }
        }
        acc
    }

    /// Grid points `x_j = -L + 2 L j / N`.
    pub fn grid(&self) -> Vec<f64> {
        let h = 2.0 * self.half_period / self.modes as f64;
        (0..self.modes).map(|j| -self.half_period + h * j as f64).collect()
    }

    /// Profile values on the grid.
    pub fn values(&self, parity: Parity) -> Vec<f64> {
        let n = self.modes;
        let ifft = FftPlanner::new().plan_fft_inverse(n);
        let unit = self.unit();
        let mut buf: Vec<C64> = self
            .coeffs(parity)
            .iter()
            .enumerate()
            .map(|(i, c)| c * C64::from_polar(1.0, -wavenumber(i, n, unit) * self.half_period))
            .collect();
        ifft.process(&mut buf);
        buf.iter().map(|z| z.re).collect()
    }

    /// Values on a grid refined by `factor` (zero-padded spectrum).
    pub fn refined_values(&self, factor: usize, parity: Parity) -> Vec<f64> {
        let n = self.modes;
        let big = n * factor;
        let unit = self.unit();
        let mut spec = vec![C64::new(0.0, 0.0); big];
        for (i, c) in self.coeffs(parity).iter().enumerate() {
            if n % 2 == 0 && i == n / 2 {
                spec[i] += c.re * 0.5;
                spec[big - i] += c.re * 0.5;
            } else if i < n / 2 + 1 {
                spec[i] += c;
            } else {
                spec[big - (n - i)] += c;
            }
        }
        for (i, z) in spec.iter_mut().enumerate() {
            *z *= C64::from_polar(1.0, -wavenumber(i, big, unit) * self.half_period);
        }
        FftPlanner::new().plan_fft_inverse(big).process(&mut spec);
        spec.iter().map(|z| z.re).collect()
    }

    /// Residual of the traveling-wave equations on a grid refined by `factor`.
    pub fn refined_residual(&self, factor: usize) -> Result<f64> {
        let col = Collocation::new(&self.params, self.wave_speed, self.modes * factor, self.half_period, self.symmetry)?;
        let rho = [self.refined_values(factor, Parity::Odd), self.refined_values(factor, Parity::Even)];
        Ok(col.raw_residual(&rho))
    }

    /// Largest deviation from the reversibility class.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for &x in &[0.37, 1.9, 0.41 * self.half_period] {
            let d = match self.symmetry {
                Symmetry::EvenOdd => (self.eval(x, Parity::Even) - self.eval(-x, Parity::Odd)).abs(),
                Symmetry::EvenEven => (self.eval(x, Parity::Odd) - self.eval(-x, Parity::Odd))
                    .abs()
                    .max((self.eval(x, Parity::Even) - self.eval(-x, Parity::Even)).abs()),
            };
            worst = worst.max(d);
        }
        worst
    }
}

/// One entry of a sparse stencil: (component, full-grid index, coefficient).
type Stencil = Vec<(usize, usize, f64)>;

/// Symmetry-reduced collocation of the preconditioned traveling-wave system.
struct Collocation {
    p: DimerParams,
    c: f64,
    n: usize,
    half: f64,
    sym: Symmetry,
    m_sym: Vec<Matrix2<C64>>,
    n_sym: Vec<Matrix2<C64>>,
    a_sym: Vec<Matrix2<C64>>,
    ksq: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

fn fp_symbols(k: f64, p: &DimerParams, c: f64) -> Result<(Matrix2<C64>, Matrix2<C64>)> {
    let (lm, lp) = lambda_pm(k, p);
    if lp - lm <= 1e-12 * lp {
        return Err(Error::DegenerateEigenvalues(k));
    }
    let l = symbol_ltilde(k, p);
    let id = Matrix2::<C64>::identity();
    let pm = (l + id * C64::new(lp, 0.0)) / C64::new(lp - lm, 0.0);
    let pp = id - pm;
    let sm = sigma_minus(k, p, lp);
    let opt = c * c * k * k + lp;
    let m = pm * C64::new(c * c - sm, 0.0) + pp * C64::new((c * c * k * k - lp) / opt, 0.0);
    let kinv = Matrix2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0 / p.kappa, 0.0));
    let nn = -(pm * C64::new(sm, 0.0) + pp * C64::new(lp / opt, 0.0)) * kinv;
    Ok((m, nn))
}

fn real_part(m: Matrix2<C64>) -> Matrix2<C64> {
    m.map(|z| C64::new(z.re, 0.0))
}

impl Collocation {
    fn new(p: &DimerParams, c: f64, n: usize, half: f64, sym: Symmetry) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidParams(format!("grid size must be even and >= 8, got {n}")));
        }
        let unit = std::f64::consts::PI / half;
        let mut m_sym = Vec::with_capacity(n);
        let mut n_sym = Vec::with_capacity(n);
        let mut a_sym = Vec::with_capacity(n);
        let mut ksq = Vec::with_capacity(n);
        for i in 0..n {
            let k = wavenumber(i, n, unit);
            let (mut m, mut nn) = fp_symbols(k, p, c)?;
            let mut a = symbol_a(k, p);
            if i == n / 2 {
                m = real_part(m);
                nn = real_part(nn);
                a = real_part(a);
            }
            m_sym.push(m);
            n_sym.push(nn);
            a_sym.push(a);
            ksq.push(k * k);
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            p: p.clone(),
            c,
            n,
            half,
            sym,
            m_sym,
            n_sym,
            a_sym,
            ksq,
            fft: planner.plan_fft_forward(n),
            ifft: planner.plan_fft_inverse(n),
        })
    }

    fn half_n(&self) -> usize {
        self.n / 2
    }

    fn idx(&self, m: usize, sign: i64) -> usize {
        let mm = self.half_n() as i64;
        (mm + sign * m as i64).rem_euclid(self.n as i64) as usize
    }

    fn unknown_count(&self) -> usize {
        let m = self.half_n();
        match self.sym {
            Symmetry::EvenEven => 2 * (m + 1),
            Symmetry::EvenOdd => 2 * m,
        }
    }

    fn unknown_stencil(&self, i: usize) -> Stencil {
        let m = self.half_n();
        let interior = |k: usize| k != 0 && k != m;
        match self.sym {
            Symmetry::EvenEven => {
                let (comp, k) = (i / (m + 1), i % (m + 1));
                let mut s = vec![(comp, self.idx(k, 1), 1.0)];
                if interior(k) {
                    s.push((comp, self.idx(k, -1), 1.0));
                }
                s
            }
            Symmetry::EvenOdd => {
                if i <= m {
                    let mut s = vec![(0, self.idx(i, 1), 0.5), (1, self.idx(i, 1), 0.5)];
                    if interior(i) {
                        s.push((0, self.idx(i, -1), 0.5));
                        s.push((1, self.idx(i, -1), 0.5));
                    }
                    s
                } else {
                    let k = i - m;
                    vec![
                        (0, self.idx(k, 1), 0.5),
                        (1, self.idx(k, 1), -0.5),
                        (0, self.idx(k, -1), -0.5),
                        (1, self.idx(k, -1), 0.5),
                    ]
                }
            }
        }
    }

    fn equation_stencil(&self, e: usize) -> Stencil {
        let m = self.half_n();
        match self.sym {
            Symmetry::EvenEven => vec![(e / (m + 1), self.idx(e % (m + 1), 1), 1.0)],
            Symmetry::EvenOdd => {
                if e <= m {
                    vec![(0, self.idx(e, 1), 1.0), (1, self.idx(e, 1), 1.0)]
                } else {
                    vec![(0, self.idx(e - m, 1), 1.0), (1, self.idx(e - m, 1), -1.0)]
                }
            }
        }
    }

    fn expand(&self, u: &[f64]) -> [Vec<f64>; 2] {
        let mut rho = [vec![0.0; self.n], vec![0.0; self.n]];
        for (i, &ui) in u.iter().enumerate() {
            for (comp, j, coef) in self.unknown_stencil(i) {
                rho[comp][j] += coef * ui;
            }
        }
        rho
    }

    fn compress(&self, rho: &[Vec<f64>; 2]) -> Vec<f64> {
        let m = self.half_n();
        match self.sym {
            Symmetry::EvenEven => (0..2).flat_map(|c| (0..=m).map(move |k| (c, k))).map(|(c, k)| rho[c][self.idx(k, 1)]).collect(),
            Symmetry::EvenOdd => {
                let mut u: Vec<f64> = (0..=m).map(|k| rho[0][self.idx(k, 1)] + rho[1][self.idx(k, 1)]).collect();
                u.extend((1..m).map(|k| rho[0][self.idx(k, 1)] - rho[1][self.idx(k, 1)]));
                u
            }
        }
    }

    fn restrict(&self, r: &[Vec<f64>; 2]) -> Vec<f64> {
        (0..self.unknown_count())
            .map(|e| self.equation_stencil(e).iter().map(|&(c, j, coef)| coef * r[c][j]).sum())
            .collect()
    }

    fn nonlinear(&self, rho: &[Vec<f64>; 2]) -> [Vec<f64>; 2] {
        let k = self.p.kappa;
        [
            rho[0].iter().map(|&r| self.p.v1p(r) - r).collect(),
            rho[1].iter().map(|&r| self.p.v2p(r) - k * r).collect(),
        ]
    }

    fn nonlinear_derivative(&self, rho: &[Vec<f64>; 2]) -> [Vec<f64>; 2] {
        let k = self.p.kappa;
        [
            rho[0].iter().map(|&r| self.p.v1pp(r) - 1.0).collect(),
            rho[1].iter().map(|&r| self.p.v2pp(r) - k).collect(),
        ]
    }

    fn forward(&self, v: &[f64]) -> Vec<C64> {
        let mut buf: Vec<C64> = v.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.fft.process(&mut buf);
        buf
    }

    fn inverse(&self, mut buf: Vec<C64>) -> Vec<f64> {
        self.ifft.process(&mut buf);
        let s = 1.0 / self.n as f64;
        buf.iter().map(|z| z.re * s).collect()
    }

    /// Apply a pair of 2x2 symbols to `(f, g)`: `S1 f_hat + S2 g_hat`.
    fn apply_symbols(&self, s1: &[Matrix2<C64>], f: &[Vec<f64>; 2], s2: &[Matrix2<C64>], g: &[Vec<f64>; 2]) -> [Vec<f64>; 2] {
        let f0 = self.forward(&f[0]);
        let f1 = self.forward(&f[1]);
        let g0 = self.forward(&g[0]);
        let g1 = self.forward(&g[1]);
        let mut o0 = vec![C64::new(0.0, 0.0); self.n];
        let mut o1 = vec![C64::new(0.0, 0.0); self.n];
        for i in 0..self.n {
            let (a, b) = (&s1[i], &s2[i]);
            o0[i] = a[(0, 0)] * f0[i] + a[(0, 1)] * f1[i] + b[(0, 0)] * g0[i] + b[(0, 1)] * g1[i];
            o1[i] = a[(1, 0)] * f0[i] + a[(1, 1)] * f1[i] + b[(1, 0)] * g0[i] + b[(1, 1)] * g1[i];
        }
        [self.inverse(o0), self.inverse(o1)]
    }

    fn residual_full(&self, rho: &[Vec<f64>; 2]) -> [Vec<f64>; 2] {
        let h = self.nonlinear(rho);
        self.apply_symbols(&self.m_sym, rho, &self.n_sym, &h)
    }

    fn residual(&self, u: &[f64]) -> Vec<f64> {
        self.restrict(&self.residual_full(&self.expand(u)))
    }

    /// Max-norm of `c^2 rho'' - A V'(rho)` on the grid.
    fn raw_residual(&self, rho: &[Vec<f64>; 2]) -> f64 {
        let g = [
            rho[0].iter().map(|&r| self.p.v1p(r)).collect::<Vec<_>>(),
            rho[1].iter().map(|&r| self.p.v2p(r)).collect::<Vec<_>>(),
        ];
        let c2 = self.c * self.c;
        let lap: Vec<Matrix2<C64>> = self.ksq.iter().map(|&k2| Matrix2::identity() * C64::new(-c2 * k2, 0.0)).collect();
        let neg_a: Vec<Matrix2<C64>> = self.a_sym.iter().map(|a| -a).collect();
        let r = self.apply_symbols(&lap, rho, &neg_a, &g);
        r[0].iter().chain(r[1].iter()).fold(0.0f64, |m, v| m.max(v.abs()))
    }

    fn kernels(&self, sym: &[Matrix2<C64>]) -> [[Vec<f64>; 2]; 2] {
        let mut out: [[Vec<f64>; 2]; 2] = Default::default();
        for a in 0..2 {
            for b in 0..2 {
                out[a][b] = self.inverse(sym.iter().map(|s| s[(a, b)]).collect());
            }
        }
        out
    }

    fn jacobian(&self, u: &[f64]) -> DMatrix<f64> {
        let rho = self.expand(u);
        let hp = self.nonlinear_derivative(&rho);
        let mk = self.kernels(&self.m_sym);
        let nk = self.kernels(&self.n_sym);
        let n = self.n;
        let count = self.unknown_count();
        let eqs: Vec<Stencil> = (0..count).map(|e| self.equation_stencil(e)).collect();
        let uns: Vec<Stencil> = (0..count).map(|i| self.unknown_stencil(i)).collect();
        DMatrix::from_fn(count, count, |e, i| {
            let mut acc = 0.0;
            for &(a, j, ce) in &eqs[e] {
                for &(b, l, cu) in &uns[i] {
                    let d = (j + n - l) % n;
                    acc += ce * cu * (mk[a][b][d] + nk[a][b][d] * hp[b][l]);
                }
            }
            acc
        })
    }

    fn grid(&self) -> Vec<f64> {
        let h = 2.0 * self.half / self.n as f64;
        (0..self.n).map(|j| -self.half + h * j as f64).collect()
    }
}

/// Newton iteration controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonOptions {
    /// Target max-norm residual of the traveling-wave equations.
    pub tol: f64,
    /// Maximum number of Newton steps.
    pub max_iter: usize,
    /// Maximum number of step halvings per line search.
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-11, max_iter: 40, max_halvings: 30 }
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Damped Newton iteration on `f` with Jacobian `jac`; `done` reports whether
/// the current iterate meets the target.
fn newton<F, J, D>(mut u: Vec<f64>, f: F, jac: J, done: D, opts: &NewtonOptions) -> Result<(Vec<f64>, usize)>
where
    F: Fn(&[f64]) -> Vec<f64>,
    J: Fn(&[f64]) -> DMatrix<f64>,
    D: Fn(&[f64]) -> f64,
{
    let mut fu = f(&u);
    let mut merit = norm2(&fu);
    for it in 0..opts.max_iter {
        if done(&u) < opts.tol {
            return Ok((u, it));
        }
        let lu = jac(&u).lu();
        let step = lu.solve(&DVector::from_iterator(fu.len(), fu.iter().map(|x| -x))).ok_or(Error::JacobianSingular)?;
        if step.iter().any(|x| !x.is_finite()) {
            return Err(Error::JacobianSingular);
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(a, b)| a + t * b).collect();
            let ft = f(&trial);
            let mt = norm2(&ft);
            if mt.is_finite() && mt <= (1.0 - 1e-4 * t) * merit {
                u = trial;
                fu = ft;
                merit = mt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // No descent: the iterate is at roundoff level or Newton stalled.
            let r = done(&u);
            if r < opts.tol {
                return Ok((u, it));
            }
            return Err(Error::NewtonDiverged { residual: r, iterations: it });
        }
    }
    let r = done(&u);
    if r < opts.tol {
        Ok((u, opts.max_iter))
    } else {
        Err(Error::NewtonDiverged { residual: r, iterations: opts.max_iter })
    }
}

/// A converged point of the periodic ripple branch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchPoint {
    /// Pinned amplitude `a` (cosine coefficient of the primary harmonic).
    pub amplitude: f64,
    /// Frequency `Omega` in the long-wave variable `X = nu x`.
    pub omega: f64,
    /// Wavenumber `k = nu Omega` in the lattice variable.
    pub wavenumber: f64,
    /// One period of the ripple.
    pub profile: FourierProfile,
    /// Max-norm residual of the traveling-wave equations.
    pub residual: f64,
    /// Newton steps taken.
    pub iterations: usize,
}

/// Null vector of `Ltilde(k) + c^2 k^2` with the phase that puts the ripple
/// `Re(v e^{ikx})` in the reversibility class: `v_1 + v_2` real (mass dimer)
/// or `v` real (spring dimer).
fn ripple_mode(k: f64, p: &DimerParams, c: f64) -> nalgebra::Vector2<C64> {
    let mut l = symbol_ltilde(k, p);
    l[(0, 0)] += c * c * k * k;
    l[(1, 1)] += c * c * k * k;
    let a = nalgebra::Vector2::new(l[(0, 1)], -l[(0, 0)]);
    let b = nalgebra::Vector2::new(-l[(1, 1)], l[(1, 0)]);
    let v = if a.norm() >= b.norm() { a } else { b };
    let s = v[0] + v[1];
    let s = if s.norm() > 1e-12 * v.norm() { s } else { v[0] };
    v * (s.conj() / s.norm())
}

/// Pin functional: cosine coefficient of the primary harmonic of `rho_2`
/// (mass dimer) or `rho_1` (spring dimer), as a row over the unknowns.
fn pin_row(col: &Collocation) -> Vec<f64> {
    let m = col.half_n();
    let n = col.n as f64;
    let h = 2.0 * std::f64::consts::PI / n;
    let weight = |k: usize| if k == 0 || k == m { 1.0 } else { 2.0 };
    let mut row = vec![0.0; col.unknown_count()];
    for k in 0..=m {
        // (1/n) sum_j f(theta_j) cos(theta_j) counts the even samples twice;
        // the cosine coefficient of a component is twice that.
        let base = weight(k) * (k as f64 * h).cos() / n;
        match col.sym {
            // rho_2 = (s - d)/2 and d is odd, so only s contributes: coefficient s_1 / 2.
            Symmetry::EvenOdd => row[k] = base,
            Symmetry::EvenEven => row[k] = 2.0 * base,
        }
    }
    row
}

/// Solve for the periodic ripple of amplitude `a` at `c = (c_s^2 + nu^2)^{1/2}`
/// with `modes` grid points per period.  The wavenumber is an unknown and
/// the primary cosine coefficient of `rho_2` (mass) or `rho_1` (spring) is
/// pinned to `a`.
///
/// # Errors
/// [`Error::InvalidParams`] for `a <= 0` or `a > 1e-2`; errors of Newton's method.
pub fn periodic_branch(nu: f64, a: f64, p: &DimerParams, modes: usize) -> Result<BranchPoint> {
    periodic_branch_with(nu, a, p, modes, &NewtonOptions::default())
}

/// [`periodic_branch`] with explicit Newton options.
pub fn periodic_branch_with(nu: f64, a: f64, p: &DimerParams, modes: usize, opts: &NewtonOptions) -> Result<BranchPoint> {
    if !(a > 0.0 && a <= 1e-2) {
        return Err(Error::InvalidParams(format!("amplitude must lie in (0, 1e-2], got {a}")));
    }
    let sym = Symmetry::for_params(p)?;
    let c = speed_from_nu(nu, p);
    let k0 = critical_frequency(p, c)?.location;
    let pi = std::f64::consts::PI;
    let build = |k: f64| Collocation::new(p, c, modes, pi / k, sym);
    let col0 = build(k0)?;
    // Linear ripple scaled to meet the pin.
    let v = ripple_mode(k0, p, c);
    let grid = col0.grid();
    let lin = |comp: usize| grid.iter().map(|&x| (v[comp] * C64::from_polar(1.0, k0 * x)).re).collect::<Vec<_>>();
    let mut rho = [lin(0), lin(1)];
    let pin = pin_row(&col0);
    let u_lin = col0.compress(&rho);
    let scale = a / pin.iter().zip(&u_lin).map(|(r, u)| r * u).sum::<f64>();
    for comp in rho.iter_mut() {
        comp.iter_mut().for_each(|x| *x *= scale);
    }
    let mut u0 = col0.compress(&rho);
    u0.push(k0);

    let split = |z: &[f64]| -> (Vec<f64>, f64) { (z[..z.len() - 1].to_vec(), z[z.len() - 1]) };
    let f = |z: &[f64]| -> Vec<f64> {
        let (u, k) = split(z);
        match build(k) {
            Ok(col) => {
                let mut r = col.residual(&u);
                r.push(pin.iter().zip(&u).map(|(p, x)| p * x).sum::<f64>() - a);
                r
            }
            Err(_) => vec![f64::NAN; z.len()],
        }
    };
    let jac = |z: &[f64]| -> DMatrix<f64> {
        let (u, k) = split(z);
        let n = z.len();
        let mut j = DMatrix::zeros(n, n);
        if let Ok(col) = build(k) {
            j.view_mut((0, 0), (n - 1, n - 1)).copy_from(&col.jacobian(&u));
        }
        let dk = 1e-6 * k;
        if let (Ok(cp), Ok(cm)) = (build(k + dk), build(k - dk)) {
            let (rp, rm) = (cp.residual(&u), cm.residual(&u));
            for i in 0..n - 1 {
                j[(i, n - 1)] = (rp[i] - rm[i]) / (2.0 * dk);
            }
        }
        for (i, v) in pin.iter().enumerate() {
            j[(n - 1, i)] = *v;
        }
        j
    };
    let done = |z: &[f64]| -> f64 {
        let (u, k) = split(z);
        match build(k) {
            Ok(col) => {
                let pin_err = (pin.iter().zip(&u).map(|(p, x)| p * x).sum::<f64>() - a).abs();
                col.raw_residual(&col.expand(&u)).max(pin_err)
            }
            Err(_) => f64::INFINITY,
        }
    };
    let (z, iterations) = newton(u0, f, jac, done, opts)?;
    let (u, k) = split(&z);
    let col = build(k)?;
    let rho = col.expand(&u);
    let residual = col.raw_residual(&rho);
    let profile = FourierProfile::from_values(&rho, pi / k, sym, c, nu, residual, p.clone());
    Ok(BranchPoint { amplitude: a, omega: k / nu, wavenumber: k, profile, residual, iterations })
}

/// Decay rate `b` of the long-wave core `sech^2(b x)` in the lattice variable.
fn core_rate(nu: f64, p: &DimerParams) -> Result<f64> {
    let eps = eps_from_nu(nu, p);
    let spec = ProfileSpec::new(eps, 0.0, p.clone(), Coordinate::RelativeDisplacement)?;
    Ok(0.5 * spec.decay_rate() * eps)
}

/// Long-wave parameter `eps` with `1/c^2 = 1/c_s^2 - eps^2` for `c^2 = c_s^2 + nu^2`.
pub fn eps_from_nu(nu: f64, p: &DimerParams) -> f64 {
    let cs2 = sound_speed(p).powi(2);
    (1.0 / cs2 - 1.0 / (cs2 + nu * nu)).sqrt()
}

/// Grid size that resolves the core spectrum to roundoff and the ripple
/// with ample margin on `[-L, L)`.
pub fn auto_modes(nu: f64, half_length: f64, p: &DimerParams) -> Result<usize> {
    let b = core_rate(nu, p)?;
    let omega = critical_frequency(p, speed_from_nu(nu, p))?.location;
    let kmax = (24.0 * b).max(2.5 * omega);
    let n = (2.0 * half_length * kmax / std::f64::consts::PI).ceil() as usize;
    Ok(n + n % 2)
}

/// Solve for a nanopteron on the periodic domain `[-L, L)` with `modes` grid
/// points, starting from the long-wave `sech^2` core.
///
/// # Errors
/// * [`Error::InvalidParams`] for `nu <= 0` or `L < 30 / nu`;
/// * [`Error::UnderResolved`] if the ripple wavenumber exceeds 0.8 times the
///   grid cutoff;
/// * [`Error::Unsupported`] for general dimers;
/// * Newton failures.
pub fn nanopteron_solve(nu: f64, half_length: f64, modes: usize, p: &DimerParams) -> Result<FourierProfile> {
    nanopteron_solve_with(nu, half_length, modes, p, &NewtonOptions::default())
}

/// [`nanopteron_solve`] with explicit Newton options.
pub fn nanopteron_solve_with(
    nu: f64,
    half_length: f64,
    modes: usize,
    p: &DimerParams,
    opts: &NewtonOptions,
) -> Result<FourierProfile> {
    if !(nu > 0.0) {
        return Err(Error::InvalidParams(format!("nu must be > 0, got {nu}")));
    }
    if half_length < 30.0 / nu {
        return Err(Error::InvalidParams(format!("half length {half_length} below 30/nu = {}", 30.0 / nu)));
    }
    let sym = Symmetry::for_params(p)?;
    let c = speed_from_nu(nu, p);
    let omega = critical_frequency(p, c)?.location;
    let cutoff = std::f64::consts::PI * modes as f64 / (2.0 * half_length);
    if omega > 0.8 * cutoff {
        return Err(Error::UnderResolved { ripple: omega, cutoff });
    }
    let solve = |nu_j: f64, guess: Option<&[f64]>| -> Result<(Collocation, Vec<f64>)> {
        let col = Collocation::new(p, speed_from_nu(nu_j, p), modes, half_length, sym)?;
        let u0 = match guess {
            Some(u) => u.to_vec(),
            None => {
                let eps = eps_from_nu(nu_j, p);
                let spec = ProfileSpec::new(eps, 0.0, p.clone(), Coordinate::RelativeDisplacement)?;
                let core = |parity: Parity| {
                    col.grid().iter().map(|&x| eps * eps * profiles::sech2_core(&spec, eps * x, parity)).collect::<Vec<_>>()
                };
                col.compress(&[core(Parity::Odd), core(Parity::Even)])
            }
        };
        let (u, _) = newton(u0, |u| col.residual(u), |u| col.jacobian(u), |u| col.raw_residual(&col.expand(u)), opts)?;
        Ok((col, u))
    };
    let (col, u) = match solve(nu, None) {
        Ok(done) => done,
        Err(Error::NewtonDiverged { .. } | Error::JacobianSingular) => {
            // The long-wave core is a poor guess at larger speeds: continue
            // in nu from a slower wave on the same grid.
            let (_, mut u) = solve(0.6 * nu, None)?;
            let steps = 8;
            let mut last = None;
            for j in 1..=steps {
                let nu_j = nu * (0.6 + 0.4 * j as f64 / steps as f64);
                let (col, next) = solve(nu_j, Some(&u))?;
                u = next.clone();
                last = Some((col, next));
            }
            last.expect("at least one continuation step")
        }
        Err(e) => return Err(e),
    };
    let rho = col.expand(&u);
    let residual = col.raw_residual(&rho);
    Ok(FourierProfile::from_values(&rho, half_length, sym, c, nu, residual, p.clone()))
}

/// Ripple measurement in a far-field window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RippleMeasurement {
    /// Half peak-to-trough oscillation (largest over both profiles).
    pub amplitude: f64,
    /// Wavenumber estimated from the spacing of the extrema (NaN if fewer than 3).
    pub wavenumber: f64,
}

fn measure_component(profile: &FourierProfile, lo: f64, hi: f64, parity: Parity) -> (f64, f64) {
    let h = 2.0 * profile.half_period / profile.modes as f64 / 8.0;
    let steps = ((hi - lo) / h).ceil().max(2.0) as usize;
    let xs: Vec<f64> = (0..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect();
    let d: Vec<f64> = xs.iter().map(|&x| profile.eval_derivative(x, parity, 1)).collect();
    let mut extrema = Vec::new();
    for i in 0..steps {
        if d[i] == 0.0 || d[i].signum() != d[i + 1].signum() {
            let (mut a, mut b) = (xs[i], xs[i + 1]);
            let sa = d[i].signum();
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                if profile.eval_derivative(mid, parity, 1).signum() == sa {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let x = 0.5 * (a + b);
            extrema.push((x, profile.eval(x, parity)));
        }
    }
    if extrema.len() < 2 {
        // No oscillation: half the range of the linearly detrended samples.
        let ys: Vec<f64> = xs.iter().map(|&x| profile.eval(x, parity)).collect();
        let (slope, icpt, _) = profiles::linear_fit(&xs, &ys);
        let r: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - slope * x - icpt).collect();
        let amp = 0.5 * (r.iter().cloned().fold(f64::MIN, f64::max) - r.iter().cloned().fold(f64::MAX, f64::min));
        return (amp, f64::NAN);
    }
    let max = extrema.iter().map(|e| e.1).fold(f64::MIN, f64::max);
    let min = extrema.iter().map(|e| e.1).fold(f64::MAX, f64::min);
    let k = if extrema.len() >= 3 {
        std::f64::consts::PI * (extrema.len() - 1) as f64 / (extrema.last().unwrap().0 - extrema[0].0)
    } else {
        f64::NAN
    };
    (0.5 * (max - min), k)
}

/// Half the peak-to-trough oscillation of the profile in the window
/// `(x_lo, x_hi)`, located exactly via the extrema of the interpolant.
///
/// # Errors
/// [`Error::WindowInsideCore`] unless the window lies in `L/2 <= |x| <= L`.
pub fn ripple_amplitude(profile: &FourierProfile, window: (f64, f64)) -> Result<f64> {
    Ok(ripple_measurement(profile, window)?.amplitude)
}

/// Amplitude and wavenumber of the ripple in a far-field window.
pub fn ripple_measurement(profile: &FourierProfile, window: (f64, f64)) -> Result<RippleMeasurement> {
    let (lo, hi) = window;
    let l = profile.half_period;
    let far = |x: f64| x.abs() >= 0.5 * l - 1e-12 && x.abs() <= l + 1e-12;
    if !(lo < hi && far(lo) && far(hi) && lo.signum() == hi.signum()) {
        return Err(Error::WindowInsideCore(lo, hi));
    }
    let (a1, k1) = measure_component(profile, lo, hi, Parity::Odd);
    let (a2, k2) = measure_component(profile, lo, hi, Parity::Even);
    let wavenumber = if a1 >= a2 { k1 } else { k2 };
    Ok(RippleMeasurement { amplitude: a1.max(a2), wavenumber })
}

/// Default far-field window `[L/2, L]`.
pub fn far_field_window(profile: &FourierProfile) -> (f64, f64) {
    (0.5 * profile.half_period, profile.half_period)
}

/// Ripple data of one `nu` in an amplitude scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplitudeRow {
    /// Near-sonic parameter.
    pub nu: f64,
    /// Ripple wavenumber `omega_c` in the lattice variable.
    pub wavenumber: f64,
    /// Domain half lengths used.
    pub half_lengths: Vec<f64>,
    /// Grid sizes used.
    pub modes: Vec<usize>,
    /// Measured ripple amplitude for each domain.
    pub amplitudes: Vec<f64>,
    /// Residual of each solve.
    pub residuals: Vec<f64>,
    /// Minimal ripple amplitude over the domain phase.
    pub amplitude: f64,
    /// `sqrt(b^2 + g^2) / a` of the fit `1/A^2 = a + b cos 2kL + g sin 2kL`
    /// (1 for an exact antiresonance law; NaN with fewer than 3 domains).
    pub fit_consistency: f64,
}

/// Ripple-amplitude scan with decay fits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplitudeScan {
    /// One row per `nu`.
    pub rows: Vec<AmplitudeRow>,
    /// Slope of `log a` against `log nu` (fitted algebraic order).
    pub algebraic_order: Option<f64>,
    /// Slope of `log a` against `1/nu` (minus the exponential constant).
    pub exponential_slope: Option<f64>,
    /// Coefficient of determination of the exponential fit.
    pub exponential_r2: Option<f64>,
}

/// Options of [`amplitude_scan`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanOptions {
    /// Smallest domain half length as a multiple of `1/nu`.
    pub length_factor: f64,
    /// Number of domain lengths, spread over one ripple half-period in `L`
    /// (domains whose solve fails near resonance are dropped).
    pub domains: usize,
    /// Grid size override (automatic when `None`).
    pub modes: Option<usize>,
    /// Newton controls.
    pub newton: NewtonOptions,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { length_factor: 30.0, domains: 8, modes: None, newton: NewtonOptions::default() }
    }
}

/// Minimal ripple amplitude from amplitudes measured at several domain
/// lengths: on a periodic domain the ripple behaves like `a / |sin(kL - phi)|`,
/// so `1/A^2` is a first harmonic in `2kL` whose maximum is `1/a^2`.
/// Returns `(a, consistency)`.
pub fn antiresonant_amplitude(k: f64, lengths: &[f64], amps: &[f64]) -> (f64, f64) {
    if lengths.len() < 3 {
        let a = amps.iter().cloned().fold(f64::INFINITY, f64::min);
        return (a, f64::NAN);
    }
    let a = DMatrix::from_fn(lengths.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => (2.0 * k * lengths[i]).cos(),
        _ => (2.0 * k * lengths[i]).sin(),
    });
    let y = DVector::from_iterator(amps.len(), amps.iter().map(|v| 1.0 / (v * v)));
    let sol = a.clone().svd(true, true).solve(&y, 1e-14).expect("least squares");
    let (al, be, ga) = (sol[0], sol[1], sol[2]);
    let amp = (be * be + ga * ga).sqrt();
    (1.0 / (al + amp).sqrt(), amp / al)
}

fn scan_row(nu: f64, p: &DimerParams, opts: &ScanOptions) -> Result<AmplitudeRow> {
    let c = speed_from_nu(nu, p);
    let k = critical_frequency(p, c)?.location;
    let l0 = opts.length_factor / nu;
    let step = std::f64::consts::PI / (k * opts.domains as f64);
    let lengths: Vec<f64> = (0..opts.domains).map(|j| l0 + step * j as f64).collect();
    let mut amps = Vec::new();
    let mut residuals = Vec::new();
    let mut modes = Vec::new();
    let mut used = Vec::new();
    for &l in &lengths {
        let n = match opts.modes {
            Some(n) => n,
            None => auto_modes(nu, l, p)?,
        };
        // Domains close to resonance carry a huge ripple and may not converge;
        // they are skipped, the remaining ones determine the fit.
        let prof = match nanopteron_solve_with(nu, l, n, p, &opts.newton) {
            Ok(prof) => prof,
            Err(Error::NewtonDiverged { .. } | Error::JacobianSingular) => continue,
            Err(e) => return Err(e),
        };
        amps.push(ripple_amplitude(&prof, far_field_window(&prof))?);
        residuals.push(prof.residual);
        modes.push(n);
        used.push(l);
    }
    if used.len() < 3.min(opts.domains) {
        return Err(Error::NewtonDiverged { residual: f64::NAN, iterations: opts.newton.max_iter });
    }
    let lengths = used;
    let (amplitude, fit_consistency) = antiresonant_amplitude(k, &lengths, &amps);
    Ok(AmplitudeRow { nu, wavenumber: k, half_lengths: lengths, modes, amplitudes: amps, residuals, amplitude, fit_consistency })
}

/// Solve nanopterons over `nu_list` (rows in parallel) and fit the decay of
/// the minimal ripple amplitude.
pub fn amplitude_scan(nu_list: &[f64], p: &DimerParams) -> Result<AmplitudeScan> {
    amplitude_scan_with(nu_list, p, &ScanOptions::default())
}

/// [`amplitude_scan`] with explicit options.
pub fn amplitude_scan_with(nu_list: &[f64], p: &DimerParams, opts: &ScanOptions) -> Result<AmplitudeScan> {
    if nu_list.is_empty() {
        return Err(Error::InvalidParams("empty nu list".into()));
    }
    if nu_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParams("nu list must be strictly decreasing".into()));
    }
    let rows: Vec<Result<AmplitudeRow>> = std::thread::scope(|s| {
        let handles: Vec<_> = nu_list.iter().map(|&nu| s.spawn(move || scan_row(nu, p, opts))).collect();
        handles.into_iter().map(|h| h.join().expect("scan worker panicked")).collect()
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let (mut algebraic_order, mut exponential_slope, mut exponential_r2) = (None, None, None);
    if rows.len() >= 2 {
        let nus: Vec<f64> = rows.iter().map(|r| r.nu).collect();
        let amps: Vec<f64> = rows.iter().map(|r| r.amplitude).collect();
        algebraic_order = Some(profiles::loglog_slope(&nus, &amps));
        let inv: Vec<f64> = nus.iter().map(|v| 1.0 / v).collect();
        let logs: Vec<f64> = amps.iter().map(|v| v.ln()).collect();
        let (slope, _, r2) = profiles::linear_fit(&inv, &logs);
        exponential_slope = Some(slope);
        exponential_r2 = Some(r2);
    }
    Ok(AmplitudeScan { rows, algebraic_order, exponential_slope, exponential_r2 })
}
