//! Error type shared by every module of the toolkit.

use thiserror::Error;

/// Failures reported by the numerical routines.
///
/// Variants fall into two families: configuration problems (the inputs
/// violate a documented precondition) and numerical failures (a solver or
/// root finder did not deliver the requested accuracy).  The CLI maps the
/// first family to exit code 2 and the second to exit code 3 via
/// [`Error::is_config`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter or argument violates a documented invariant.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    /// The requested operation only exists for mass or spring dimers.
    #[error("unsupported for this dimer: {0}")]
    Unsupported(String),
    /// No sign change of the dispersion function was found in the scan window.
    #[error("no root found: {0}")]
    NoRoot(String),
    /// More than one bracket was found where a unique root was expected.
    #[error("multiple roots found: {0}")]
    MultipleRoots(String),
    /// A denominator that must be nonzero vanished.
    #[error("singular denominator: {0}")]
    SingularDenominator(String),
    /// A state is not smooth enough to lie in the operator domain.
    #[error("state not in operator domain: Chebyshev tail {tail:.3e} exceeds {tol:.3e}")]
    NotInDomain { tail: f64, tol: f64 },
    /// The resolvent was requested too close to the spectrum.
    #[error("resolvent requested near the spectrum: |det M(z)| = {0:.3e}")]
    NearSpectrum(f64),
    /// The integration contour passes through (or too close to) the spectrum.
    #[error("contour passes through the spectrum: min |det M| = {0:.3e}")]
    ContourThroughSpectrum(f64),
    /// The near-sonic parameter lies outside its admissible range.
    #[error("mu = {mu} outside [0, {max}]")]
    MuOutOfRange { mu: f64, max: f64 },
    /// The quadratic spring coefficient makes a leading-order profile singular.
    #[error("beta + kappa^3 = 0: spring-dimer profile is singular")]
    SpringSingular,
    /// The tails of a sampled function do not settle to constants.
    #[error("tails do not converge: variance {0:.3e}")]
    NonConvergentTails(f64),
    /// The two eigenvalues of the relative-displacement symbol coincide.
    #[error("degenerate eigenvalues of the symbol at k = {0}")]
    DegenerateEigenvalues(f64),
    /// The cancellation symbol has a vanishing denominator.
    #[error("cancellation symbol singular at k = {0}")]
    SymbolSingular(f64),
    /// Newton's method failed to reach the requested tolerance.
    #[error("Newton iteration diverged: residual {residual:.3e} after {iterations} iterations")]
    NewtonDiverged { residual: f64, iterations: usize },
    /// The Newton linear system was numerically singular.
    #[error("Jacobian is singular")]
    JacobianSingular,
    /// The grid cannot resolve the ripple wavenumber.
    #[error("under-resolved: ripple wavenumber {ripple:.3} exceeds 0.8 x cutoff {cutoff:.3}")]
    UnderResolved { ripple: f64, cutoff: f64 },
    /// The amplitude window overlaps the localized core.
    #[error("measurement window [{0}, {1}] intersects the core region")]
    WindowInsideCore(f64, f64),
    /// The lattice solution left the physically meaningful range.
    #[error("simulation blew up at t = {0}")]
    Blowup(f64),
    /// The profile domain does not cover the requested chain.
    #[error("profile domain too small: {0}")]
    DomainTooSmall(String),
}

impl Error {
    /// True when the error reflects invalid input rather than numerical failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_)
                | Error::Unsupported(_)
                | Error::MuOutOfRange { .. }
                | Error::SpringSingular
                | Error::WindowInsideCore(..)
                | Error::DomainTooSmall(_)
        )
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
