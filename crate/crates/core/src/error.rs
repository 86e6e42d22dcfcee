use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("tail not converged at cutoff {cutoff}: residual {residual:e} exceeds tolerance {tolerance:e}")]
    TailNotConverged {
        cutoff: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error(
        "small-time expansion inconsistent with trace at t = {t:e}: measured remainder {measured:e}, declared expansion {declared:e}"
    )]
    ExpansionMismatch { t: f64, measured: f64, declared: f64 },

    #[error("zero mode on circle: mu = 0 with trivial holonomy has a kernel")]
    ZeroModeOnCircle,

    #[error("condition A violated: zero modes {modes:?} carry trivial holonomy")]
    ConditionA { modes: Vec<usize> },

    #[error("holonomy list has {got} phases but the fiber has {expected} zero modes")]
    HolonomyMismatch { expected: usize, got: usize },

    #[error("lambda = {lambda} is not in the zero-mode window (first fiber threshold {threshold})")]
    NotInZeroModeWindow { lambda: f64, threshold: f64 },

    #[error("C1(0) and C2(0) share the fixed vector {vector:?} (zero mode {mode})")]
    CommonFixedVector { mode: usize, vector: Vec<(f64, f64)> },

    #[error("fiber regularization did not converge within {cutoff} modes (last term {last_term:e})")]
    FiberNotConverged { cutoff: usize, last_term: f64 },

    #[error("singular Dirichlet-to-Neumann block at fiber mode {mode}")]
    SingularBlock { mode: usize },

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("heat trace argument t = {0:e} outside the representable range")]
    HeatArgument(f64),

    #[error("model operator has a kernel (phase {phase}); use the starred determinant")]
    ModelKernel { phase: f64 },

    #[error("ill-conditioned fit: {0}")]
    IllConditionedFit(String),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
