use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("time {t} outside [0, {horizon}]")]
    OutOfDomain { t: f64, horizon: f64 },

    /// A parameter lies outside its admissible open window.
    #[error("parameter window violated: {0}")]
    Window(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("covariance factorization failed (smallest eigenvalue {min_eigenvalue:e})")]
    Factorization { min_eigenvalue: f64 },

    #[error("inadmissible fractional order: {0}")]
    Inadmissible(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("too few samples: need at least {need}, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    /// True for errors caused by a parameter outside its declared window.
    pub fn is_window(&self) -> bool {
        matches!(self, Error::Window(_))
    }
}
