use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Position-carrying diagnostic produced by the circuit parser.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// 1-based line number.
    pub line: usize,
    /// 1-based column of the offending token.
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownGate(String),
    QubitOutOfRange { index: usize, qubits: usize },
    DuplicateTargets,
    MissingQubits,
    MissingOutput,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax(msg) => write!(f, "syntax error: {msg}"),
            ParseErrorKind::UnknownGate(name) => write!(f, "unknown gate kind `{name}`"),
            ParseErrorKind::QubitOutOfRange { index, qubits } => {
                write!(f, "qubit index {index} out of range for {qubits} qubits")
            }
            ParseErrorKind::DuplicateTargets => write!(f, "duplicate targets"),
            ParseErrorKind::MissingQubits => write!(f, "missing `qubits` declaration"),
            ParseErrorKind::MissingOutput => write!(f, "missing `output` declaration"),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}, column {}: {}",
            self.line, self.column, self.kind
        )
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("register of {requested} qubits exceeds the cap of {cap}")]
    QubitCap { requested: usize, cap: usize },

    #[error("qubit index {index} out of range for {qubits} qubits")]
    QubitOutOfRange { index: usize, qubits: usize },

    #[error("gate {kind} expects {expected} distinct targets, got {found:?}")]
    InvalidTargets {
        kind: &'static str,
        expected: usize,
        found: Vec<usize>,
    },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NonHermitian { deviation: f64 },

    #[error("{what} requires at most {max} qubits, got {qubits}")]
    TooManyQubits {
        what: &'static str,
        qubits: usize,
        max: usize,
    },

    #[error("dimension mismatch: expected {expected} qubits, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Y-basis measurement requested on qubit {qubit}; only X and Z are available")]
    YMeasurement { qubit: usize },

    #[error("Hamiltonian has no terms to sample")]
    EmptyTermList,

    #[error("state is not normalized (norm² = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("state file line {line}: {message}")]
    StateFile { line: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
