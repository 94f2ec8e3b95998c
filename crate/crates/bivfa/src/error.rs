use alloc::string::String;
use core::fmt;

/// Errors surfaced by oracles, subsolvers and the outer driver.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid configuration or problem data (dimension mismatch, bad radius,
    /// asymmetric quadratic form, malformed instance spec).
    Config(String),
    /// An input point carried non-finite components.
    Domain(String),
    /// The combined prox of `g2 + z·f2` has no registered closed form for
    /// this pair of nonsmooth parts.
    UnsupportedProxPair {
        lower: &'static str,
        upper: &'static str,
    },
    /// An iterate became non-finite or a backtracking line search ran away.
    Numerical(String),
    /// A subsolver exhausted its iteration budget where convergence was
    /// required to proceed.
    NotConverged(String),
    /// A bound guaranteed by the method's theory was violated at runtime,
    /// which signals misconfigured constants rather than bad luck.
    TheoryViolation(String),
    /// The reference oracle could not certify its target tolerance.
    ReferenceUnavailable(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Domain(msg) => write!(f, "input domain error: {msg}"),
            Error::UnsupportedProxPair { lower, upper } => write!(
                f,
                "no combined prox registered for lower part `{lower}` with upper part `{upper}`"
            ),
            Error::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            Error::NotConverged(msg) => write!(f, "subsolver did not converge: {msg}"),
            Error::TheoryViolation(msg) => write!(f, "theory violation: {msg}"),
            Error::ReferenceUnavailable(msg) => write!(f, "reference oracle unavailable: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
