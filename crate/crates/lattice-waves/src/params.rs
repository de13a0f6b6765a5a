//! Material data of a diatomic lattice.
//!
//! Masses alternate as `m_j = 1` (odd `j`) and `m_j = 1/w` (even `j`).  The
//! spring forces are polynomials `V_1'(r) = r + r^2 + ...` (odd springs) and
//! `V_2'(r) = kappa r + beta r^2 + ...` (even springs).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Classification of a dimer by which material property alternates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DimerKind {
    /// Identical springs, alternating masses (`kappa = 1`, `V_1 = V_2`).
    Mass,
    /// Identical masses, alternating springs (`w = 1`).
    Spring,
    /// Both properties alternate.
    General,
    /// Neither alternates (`kappa = w = 1`, identical springs).
    Monatomic,
}

/// Dimer parameters `(kappa, beta, w)` plus the full spring-force polynomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimerParams {
    /// Linear stiffness ratio of the even springs.
    pub kappa: f64,
    /// Quadratic coefficient of the even springs.
    pub beta: f64,
    /// Reciprocal mass ratio (`m_even = 1/w`).
    pub w: f64,
    /// Coefficients of `V_1'(r) = sum_n force1[n] r^{n+1}`.
    pub force1: Vec<f64>,
    /// Coefficients of `V_2'(r) = sum_n force2[n] r^{n+1}`.
    pub force2: Vec<f64>,
}

/// Evaluate `sum_n coeffs[n] r^{n+1}` by Horner's rule.
fn poly_force(coeffs: &[f64], r: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c) * r
}

/// Derivative of [`poly_force`].
fn poly_force_d(coeffs: &[f64], r: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .rev()
        .fold(0.0, |acc, (n, &c)| acc * r + (n as f64 + 1.0) * c)
}

/// Potential `sum_n coeffs[n] r^{n+2}/(n+2)`.
fn poly_potential(coeffs: &[f64], r: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .rev()
        .fold(0.0, |acc, (n, &c)| acc * r + c / (n as f64 + 2.0))
        * r
        * r
}

impl DimerParams {
    /// Quadratic-force dimer `V_1' = r + r^2`, `V_2' = kappa r + beta r^2`.
    ///
    /// Fails when `kappa <= 0`, `w <= 0`, or any value is not finite.
    pub fn new(kappa: f64, beta: f64, w: f64) -> Result<Self> {
        let p = Self {
            kappa,
            beta,
            w,
            force1: vec![1.0, 1.0],
            force2: vec![kappa, beta],
        };
        p.validate()?;
        Ok(p)
    }

    /// Mass dimer with identical springs `V' = r + r^2` and mass ratio `w`.
    pub fn mass(w: f64) -> Result<Self> {
        Self::new(1.0, 1.0, w)
    }

    /// Spring dimer with unit masses.
    pub fn spring(kappa: f64, beta: f64) -> Result<Self> {
        Self::new(kappa, beta, 1.0)
    }

    /// Replace the force polynomials, keeping `kappa`/`beta` in sync with them.
    pub fn with_forces(mut self, force1: Vec<f64>, force2: Vec<f64>) -> Result<Self> {
        self.force1 = force1;
        self.force2 = force2;
        if let Some(&b) = self.force2.get(1) {
            self.beta = b;
        }
        self.validate()?;
        Ok(self)
    }

    /// Check the documented invariants.
    pub fn validate(&self) -> Result<()> {
        let all = [self.kappa, self.beta, self.w];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if self.kappa <= 0.0 {
            return Err(Error::InvalidParams(format!("kappa must be > 0, got {}", self.kappa)));
        }
        if self.w <= 0.0 {
            return Err(Error::InvalidParams(format!("w must be > 0, got {}", self.w)));
        }
        if self.force1.first() != Some(&1.0) {
            return Err(Error::InvalidParams("force1[0] must equal 1".into()));
        }
        if self.force2.first() != Some(&self.kappa) {
            return Err(Error::InvalidParams("force2[0] must equal kappa".into()));
        }
        if self.force2.get(1).copied().unwrap_or(0.0) != self.beta {
            return Err(Error::InvalidParams("force2[1] must equal beta".into()));
        }
        Ok(())
    }

    /// Classify the dimer.
    pub fn kind(&self) -> DimerKind {
        let same_springs = self.kappa == 1.0 && self.force1 == self.force2;
        match (same_springs, self.w == 1.0) {
            (true, true) => DimerKind::Monatomic,
            (true, false) => DimerKind::Mass,
            (false, true) => DimerKind::Spring,
            (false, false) => DimerKind::General,
        }
    }

    /// Whether masses or linear stiffnesses alternate (`(kappa, w) != (1, 1)`).
    pub fn is_diatomic(&self) -> bool {
        self.kappa != 1.0 || self.w != 1.0
    }

    /// Odd-spring force `V_1'(r)`.
    pub fn v1p(&self, r: f64) -> f64 {
        poly_force(&self.force1, r)
    }

    /// Even-spring force `V_2'(r)`.
    pub fn v2p(&self, r: f64) -> f64 {
        poly_force(&self.force2, r)
    }

    /// Odd-spring stiffness `V_1''(r)`.
    pub fn v1pp(&self, r: f64) -> f64 {
        poly_force_d(&self.force1, r)
    }

    /// Even-spring stiffness `V_2''(r)`.
    pub fn v2pp(&self, r: f64) -> f64 {
        poly_force_d(&self.force2, r)
    }

    /// Odd-spring potential `V_1(r)` with `V_1(0) = 0`.
    pub fn v1(&self, r: f64) -> f64 {
        poly_potential(&self.force1, r)
    }

    /// Even-spring potential `V_2(r)` with `V_2(0) = 0`.
    pub fn v2(&self, r: f64) -> f64 {
        poly_potential(&self.force2, r)
    }

    /// Force of spring `j` (odd `j` uses `V_1`, even `j` uses `V_2`).
    pub fn force(&self, j: usize, r: f64) -> f64 {
        if j % 2 == 1 {
            self.v1p(r)
        } else {
            self.v2p(r)
        }
    }

    /// Mass of particle `j`.
    pub fn mass_of(&self, j: usize) -> f64 {
        if j % 2 == 1 {
            1.0
        } else {
            1.0 / self.w
        }
    }
}

impl Default for DimerParams {
    fn default() -> Self {
        Self::mass(2.0).expect("default parameters are valid")
    }
}
