use alloc::string::String;

/// Everything that can go wrong inside the core crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("{n} qubits exceeds the dense limit of {limit}")]
    DenseLimit { n: usize, limit: usize },
    #[error("qubit count mismatch: expected {expected}, found {found}")]
    QubitMismatch { expected: usize, found: usize },
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("negative error bound {0}")]
    NegativeError(f64),
    #[error("not a density operator: {0}")]
    NotDensity(String),
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("gate on qubit {qubit} is not unitary (deviation {deviation:e})")]
    NonUnitary { qubit: usize, deviation: f64 },
    #[error("qubit {0} used twice in one layer")]
    OverlappingSupport(usize),
    #[error("no route available: {0}")]
    NoRoute(String),
    #[error("linear program solver failed: {0}")]
    Solver(String),
    #[error("certificate has no explicit form: {0}")]
    NoExplicitForm(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = core::result::Result<T, Error>;
