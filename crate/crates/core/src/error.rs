use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A field holds a NaN or infinite sample.
    InvalidField(String),
    /// Grids, component counts or frame times do not line up.
    Structural(String),
    /// A scalar parameter is outside its admissible range.
    Parameter(String),
    /// Evaluation of a kernel at its singular point.
    Singularity(String),
    /// The grid is too coarse to resolve the cutoff.
    Resolution { spacing: f64, required: f64 },
    /// The source field is not curl-free to the requested tolerance.
    NotAGradient { curl_ratio: f64, tolerance: f64 },
    /// Shifted evaluations would leave the declared margin.
    Range { frames: alloc::vec::Vec<usize> },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidField(m) => write!(f, "invalid field: {m}"),
            Error::Structural(m) => write!(f, "structural mismatch: {m}"),
            Error::Parameter(m) => write!(f, "bad parameter: {m}"),
            Error::Singularity(m) => write!(f, "singular evaluation: {m}"),
            Error::Resolution { spacing, required } => write!(
                f,
                "grid spacing {spacing} does not resolve the cutoff (need <= {required})"
            ),
            Error::NotAGradient {
                curl_ratio,
                tolerance,
            } => write!(
                f,
                "source is not curl-free: relative curl {curl_ratio:.3e} exceeds {tolerance:.3e}"
            ),
            Error::Range { frames } => {
                write!(f, "displacement exceeds the declared margin in frames {frames:?}")
            }
        }
    }
}

impl core::error::Error for Error {}

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$variant(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
