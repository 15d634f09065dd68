use std::fmt;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violated a documented precondition.
    InvalidParameter(String),
    /// Requested wavelength lies beyond the guided-band cutoff.
    BandGap {
        wavelength_nm: f64,
        cutoff_nm: f64,
    },
    /// Not enough samples/points to evaluate the requested statistic.
    InsufficientData(String),
    /// A decay pair with the off-resonance rate above the on-resonance rate.
    InconsistentRates {
        gamma_on_ns_inv: f64,
        gamma_off_ns_inv: f64,
    },
    /// An iterative fit failed beyond its retry budget.
    FitFailure(String),
    /// Reading or writing an artifact failed.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::BandGap {
                wavelength_nm,
                cutoff_nm,
            } => write!(
                f,
                "wavelength {wavelength_nm} nm is beyond the band cutoff {cutoff_nm} nm"
            ),
            Error::InsufficientData(msg) => write!(f, "insufficient data: {msg}"),
            Error::InconsistentRates {
                gamma_on_ns_inv,
                gamma_off_ns_inv,
            } => write!(
                f,
                "inconsistent rates: off-resonance {gamma_off_ns_inv} 1/ns exceeds on-resonance {gamma_on_ns_inv} 1/ns"
            ),
            Error::FitFailure(msg) => write!(f, "fit failure: {msg}"),
            Error::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
