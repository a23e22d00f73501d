use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical argument is outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A small-signal expansion was requested outside its validity range.
    #[error("linearization error: modulation depth {depth} exceeds {limit}")]
    Linearization { depth: f64, limit: f64 },

    #[error("config error at line {line}: key `{key}`: {msg}")]
    Config { line: usize, key: String, msg: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("fit did not converge after {iterations} iterations (chi2 = {chi2:e})")]
    NoConvergence { iterations: usize, chi2: f64, best: Vec<f64> },

    #[error("no peak found: {0}")]
    NoPeak(String),

    #[error("calibration tone too weak: {0}")]
    WeakTone(String),

    #[error("transduction vanishes on {count} bins inside the fit window")]
    MaskedBins { count: usize },

    /// Cavity field energy leaks through the domain boundary.
    #[error("open domain: boundary |E|^2 ratio {ratio:e} exceeds {limit:e}")]
    OpenDomain { ratio: f64, limit: f64 },

    #[error("displacement outside linear regime: shift(2a)/shift(a) = {ratio}")]
    Nonlinear { ratio: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::Io(_) | Error::Format(_) => 3,
            _ => 4,
        }
    }
}
