use thiserror::Error;

/// Errors produced by graph construction, spectral analysis, evolution and retrieval.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },

    #[error("graph must have at least one vertex")]
    EmptyGraph,

    #[error("edge ({0}, {1}) references a vertex outside 1..={2}")]
    VertexOutOfRange(usize, usize, usize),

    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("negative potential value {value} at vertex {vertex}")]
    NegativePotential { vertex: usize, value: f64 },

    #[error("symmetric eigensolver failed to converge")]
    EigenSolverFailed,

    #[error("spectrum is not totally dissociated (smallest frequency gap {gap:.3e} <= tolerance {tol:.3e})")]
    NotDissociated { gap: f64, tol: f64 },

    #[error("frequency fit is ill-conditioned (condition number {condition:.3e}); sample longer or denser")]
    IllConditioned { condition: f64 },

    #[error("not enough samples: {samples} time samples for {unknowns} unknowns")]
    InsufficientSamples { samples: usize, unknowns: usize },

    #[error("sample times must be finite and pairwise distinct")]
    InvalidTimes,

    #[error("invalid tolerance {0}: must be finite and positive")]
    InvalidTolerance(f64),

    #[error("degenerate pair: f is a unimodular multiple of g")]
    DegeneratePair,

    #[error("pair does not have equal coordinate moduli (max deviation {0:.3e})")]
    UnequalModuli(f64),

    #[error("support graph is complete; no sign-flip counterexample exists")]
    SupportGraphComplete,

    #[error("graph is connected; per-component phases are not available")]
    GraphConnected,

    #[error("expected {expected} component phases, got {found}")]
    PhaseCountMismatch { expected: usize, found: usize },

    #[error("phase {0} is not unimodular")]
    NotUnimodular(usize),

    #[error("complete graph pair requires n >= 3, got {0}")]
    CompleteGraphTooSmall(usize),

    #[error("edge probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("{0}")]
    InvalidInput(String),

    #[error("parse error{}: {message}", .line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<u64>, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
