//! Scalar fields over which state vectors and Chebyshev functions live.

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{Mul, Neg};

use num_complex::Complex64;
use num_traits::NumAssign;

/// A real or complex scalar.
///
/// The spectral machinery needs complex arithmetic (resolvents, eigenvectors
/// at imaginary eigenvalues) while the invariants and functionals act on real
/// states; this trait lets both share one implementation.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + NumAssign
    + Neg<Output = Self>
    + From<f64>
    + Mul<f64, Output = Self>
    + Sum
{
    /// Modulus.
    fn modulus(self) -> f64;
    /// Real part.
    fn re(self) -> f64;
    /// Promote to a complex number.
    fn to_complex(self) -> Complex64;
    /// Tag used when serializing.
    const FIELD: &'static str;
}

impl Scalar for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn re(self) -> f64 {
        self
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    const FIELD: &'static str = "real";
}

impl Scalar for Complex64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn re(self) -> f64 {
        self.re
    }
    fn to_complex(self) -> Complex64 {
        self
    }
    const FIELD: &'static str = "complex";
}
