use thiserror::Error;

/// Errors surfaced by game construction, strategy handling, and the
/// certificate pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("alphabet mismatch: ({0}, {1}) questions vs ({2}, {3})")]
    AlphabetMismatch(u32, u32, u32, u32),

    #[error("{what} index {index} out of range (bound {bound})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("search space of {total} questions exceeds bound {bound}")]
    SearchBoundExceeded { total: u32, bound: u32 },

    #[error("game has no perfect classical strategy")]
    NoPerfectStrategy,

    #[error("zero vector cannot be normalized")]
    ZeroVector,

    #[error("strategy failed validation at tolerance {tolerance}: {summary}")]
    ValidationFailed { tolerance: f64, summary: String },

    #[error("numerical degeneracy: no basis vector pairs with {party} question {question} above tolerance {tolerance}")]
    Degenerate {
        party: &'static str,
        question: u32,
        tolerance: f64,
    },

    #[error("extraction inconsistency: {0}")]
    ExtractionInconsistent(String),

    #[error("moment matrix side {side} exceeds configured limit {cap}")]
    SolverCap { side: usize, cap: usize },

    #[error("dual ray does not yield a certificate below tolerance: {0}")]
    ExtractionFailure(String),

    #[error("exact rounding failed to close the certificate identity: {0}")]
    Exactification(String),

    #[error("moment vector has f(1) = {0}, expected 1")]
    MomentIdentity(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("failed to parse {path}: {message}")]
    Parse { path: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
