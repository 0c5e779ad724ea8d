use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("resonators {i} and {j} overlap: gap {gap} is not larger than {min_gap}")]
    Overlap {
        i: usize,
        j: usize,
        gap: f64,
        min_gap: f64,
    },

    #[error("lattice sum is singular at alpha*L = {alpha_l} (exclusion radius {radius})")]
    Singular { alpha_l: f64, radius: f64 },

    #[error("argument outside the domain of {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("frequency {omega} sits on a band pole at alpha*L = {alpha_l}")]
    Pole { omega: f64, alpha_l: f64 },

    #[error("spectral parameter {value} lies outside the open band gap ({lo}, {hi})")]
    OutOfGap { value: f64, lo: f64, hi: f64 },

    #[error("no mid-gap frequency: {0}")]
    NoMidGap(String),

    #[error("found {count} zero crossings of the Toeplitz spectrum, expected at most two")]
    BranchAmbiguity { count: usize },

    #[error("{what} did not converge: last change {change:e} exceeds tolerance {tol:e}")]
    NonConvergence {
        what: &'static str,
        change: f64,
        tol: f64,
    },

    #[error("point ({x}, {y}, {z}) lies inside resonator {index}")]
    InsideResonator {
        x: f64,
        y: f64,
        z: f64,
        index: usize,
    },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            what,
            detail: detail.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
