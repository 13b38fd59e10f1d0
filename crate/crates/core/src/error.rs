use thiserror::Error;

/// Errors raised across the lab.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("length {0} is not a power of two (>= 2)")]
    NotPowerOfTwo(usize),
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("zero vector cannot be normalized")]
    ZeroVector,
    #[error("operator is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("operator is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error("density operator is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("trace is {found}, expected {expected}")]
    Trace { expected: f64, found: f64 },
    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    InvalidQubit { index: usize, n_qubits: usize },
    #[error("qubit index {0} listed twice")]
    DuplicateQubit(usize),
    #[error("partial trace needs at least one kept qubit")]
    EmptyKeepSet,
    #[error("post-selection failed: probability {0:e} below floor")]
    PostSelectionFailed(f64),
    #[error("fidelity undefined for zero-purity operator")]
    ZeroPurity,
    #[error("superposition weights are not normalized (|a|^2+|b|^2 = {0})")]
    UnnormalizedWeights(f64),
    #[error("referential state orthogonal to both inputs")]
    ReferenceOrthogonalToBoth,
    #[error("input state orthogonal to the referential state; relative phase undefined")]
    ZeroOverlap,
    #[error("invalid molecule: {0}")]
    InvalidMolecule(String),
    #[error("invalid pulse program: {0}")]
    InvalidProgram(String),
    #[error("invalid control pulse: {0}")]
    InvalidPulse(String),
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error("relaxation times violate T2 <= T1 (T1 = {t1}, T2 = {t2})")]
    RelaxationOrder { t1: f64, t2: f64 },
    #[error("pseudo-pure preparation reached fidelity {achieved:.6}, below {required}")]
    PpsFidelity { achieved: f64, required: f64 },
    #[error("all {0} trials failed post-selection")]
    AllTrialsFailed(usize),
    #[error("{0}")]
    Parse(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
