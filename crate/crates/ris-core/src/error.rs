use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("state is not faithful: smallest eigenvalue {eigenvalue:e}")]
    NonFaithfulState { eigenvalue: f64 },

    #[error("QR iteration did not converge for a {dim}x{dim} matrix after {sweeps} sweeps")]
    EigenNoConvergence { dim: usize, sweeps: usize },

    #[error("map is not CPTP: min Choi eigenvalue {min_choi_eigenvalue:e}, trace residual {trace_residual:e}")]
    CptpViolation {
        min_choi_eigenvalue: f64,
        trace_residual: f64,
    },

    #[error("reducible channel: {0}")]
    ReducibleChannel(String),

    #[error("peripheral eigenvalue {eigenvalue} is not semisimple (residual {residual:e})")]
    NonDiagonalizablePeripheral { eigenvalue: Complex64, residual: f64 },

    #[error("near-degenerate peripheral boundary: non-peripheral modulus {modulus}")]
    NearDegeneratePeripheral { modulus: f64 },

    #[error("peripheral structure changed along the path at sample {k}")]
    PeripheralMismatch { k: usize },

    #[error("no admissible m up to {cap}")]
    NoSuchM { cap: usize },

    #[error("projector increment too large at step {k}: norm {norm}")]
    StepTooLarge { k: usize, norm: f64 },

    #[error("operator is not traceless: trace {trace}")]
    NonTraceless { trace: Complex64 },

    #[error("perturbation norm {norm:e} exceeds admissible {limit:e}")]
    PerturbationTooLarge { norm: f64, limit: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
