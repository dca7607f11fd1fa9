use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid qubit count n = {n} (need n >= {min})")]
    InvalidSize { n: usize, min: usize },
    #[error("operator kind {0} is not valid here")]
    WrongKind(&'static str),
    #[error("coefficient {name} violates its bound at x = {x} (value {value})")]
    CoefficientBound { name: &'static str, x: f64, value: f64 },
    #[error("matrix is zero")]
    ZeroMatrix,
    #[error("vector is zero")]
    ZeroVector,
    #[error("unsupported wavelet {family}{index}")]
    UnsupportedWavelet { family: &'static str, index: usize },
    #[error("levels = {levels} outside 1..={n}")]
    LevelsOutOfRange { levels: usize, n: usize },
    #[error("size 2^{bits} exceeds the configured cap 2^{cap}")]
    SizeCap { bits: usize, cap: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("qubit index {index} out of range for {qubits} qubits")]
    QubitOutOfRange { index: usize, qubits: usize },
    #[error("gate touches qubit {0} more than once")]
    OverlappingQubits(usize),
    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error("norm bound violated: ||A/alpha|| = {0}")]
    NormViolation(f64),
    #[error("spectrum outside the admissible interval: {0}")]
    Spectrum(String),
    #[error("t = {t} phase bits is below the required {required}")]
    InsufficientPrecision { t: usize, required: usize },
    #[error("success probability {p:e} below floor {floor:e}")]
    ProbabilityFloor { p: f64, floor: f64 },
    #[error("expectation has imaginary part {0:e}")]
    ImaginaryPart(f64),
    #[error("all singular values fall below the threshold")]
    AllBelowThreshold,
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = core::result::Result<T, Error>;
