use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("out of range: {what} = {value} not in {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: String,
    },

    #[error("solver did not converge after {iterations} iterations ({what})")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("operation requires a non-lattice model, got {0}")]
    LatticeModel(String),

    #[error("operation requires a lattice model, got {0}")]
    NonLatticeModel(String),

    #[error("n*beta = {0} is not on the lattice of span {1}")]
    OffLattice(f64, f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("n = {n} too small: {reason}")]
    NTooSmall { n: u64, reason: String },

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("resource budget exceeded: {required:.3e} operations > budget {budget:.3e}")]
    Resource { required: f64, budget: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("cannot parse {kind} `{input}`: {reason}")]
    Parse {
        kind: &'static str,
        input: String,
        reason: String,
    },

    #[error("unknown recipe `{0}`")]
    UnknownRecipe(String),

    #[error("recipe step `{step}` failed: {reason}")]
    RecipeStep { step: String, reason: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
