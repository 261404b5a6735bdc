use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid Fock cutoff: {0}")]
    InvalidCutoff(String),
    #[error("atom slot {slot} out of range for register of size {size}")]
    SlotOutOfRange { slot: usize, size: usize },
    #[error("memory budget exceeded: dimension {dim} > {max}")]
    MemoryBudget { dim: usize, max: usize },
    #[error("register cap exceeded: {count} atoms in cavity (cap {cap})")]
    RegisterCap { count: usize, cap: usize },
    #[error("corrupt state: {0}")]
    CorruptState(String),
    #[error("propagator accuracy contract violated: {0}")]
    StepContract(String),
    #[error("Fock tail mass {mass:.3e} exceeds {tol:.1e} at t = {t:.6e}")]
    TailMass { t: f64, mass: f64, tol: f64 },
    #[error("excited-state probability {0} >= 0.5 admits no steady state")]
    NoSteadyState(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dimension {dim} exceeds oracle cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("photon subtraction from a state with zero photon number")]
    VacuumSubtraction,
    #[error("no heralds to aggregate")]
    EmptyHeralds,
    #[error("unstable resonator: L = {length} m, R = {radius} m")]
    UnstableResonator { length: f64, radius: f64 },
    #[error("positivity violated: minimum eigenvalue {0:.3e}")]
    Positivity(f64),
    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
