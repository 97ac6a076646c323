//! Error taxonomy shared by every module of the crate.
//!
//! Numerical routines return `Result<_, Error>`; variants are grouped by the
//! kind of contract violation they report so that callers (and the CLI) can
//! map them onto exit codes without string matching.

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Two objects that must share a discretization do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A grid builder or field constructor was given inconsistent parameters.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// A parameter lies outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// The 2x2 wall system for one wavenumber is numerically singular.
    #[error("wall system singular at k = {k:.6e} (|det| = {det:.3e}, threshold {threshold:.3e})")]
    SingularMode { k: f64, det: f64, threshold: f64 },

    /// The forcing of a mode solve does not vanish near the top of the grid,
    /// so the decay condition at infinity cannot be imposed exactly.
    #[error(
        "source does not vanish near the top of the grid at k = {k:.6e} \
         (tail magnitude {tail:.3e}, scale {scale:.3e})"
    )]
    SourceTail { k: f64, tail: f64, scale: f64 },

    /// One or more per-wavenumber solves failed inside a batch.
    #[error("{} of {total} mode solves failed; first failure at k = {first_k:.6e}: {first_message}",
            failures.len())]
    ModeFailures {
        failures: Vec<(f64, String)>,
        total: usize,
        first_k: f64,
        first_message: String,
    },

    /// The nonlinear fixed-point iteration expanded instead of contracting.
    #[error("fixed-point iteration diverged after {iterations} steps (contraction trace {rho_trace:?})")]
    PicardDiverged { iterations: usize, rho_trace: Vec<f64> },

    /// The fixed-point iteration ran out of its iteration budget.
    #[error(
        "fixed-point iteration did not reach tolerance {tol:.3e} within {max_iter} steps \
         (last increment {last_increment:.3e})"
    )]
    PicardMaxIter { max_iter: usize, last_increment: f64, tol: f64 },

    /// A ratio such as the Hardy quotient has a vanishing denominator.
    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    /// A field that must be discretely divergence-free is not.
    #[error("field is not divergence-free: residual {residual:.3e} exceeds threshold {threshold:.3e}")]
    NotDivergenceFree { residual: f64, threshold: f64 },

    /// A compactly supported object leaks outside its declared support.
    #[error(
        "support contamination: relative magnitude {max_leakage:.3e} at (x, y) = ({x:.4}, {y:.4}) \
         exceeds threshold {threshold:.3e}"
    )]
    SupportContamination { max_leakage: f64, x: f64, y: f64, threshold: f64 },

    /// A decay-fit window is degenerate (too few samples or under one decade).
    #[error("unusable fit window: {0}")]
    FitWindow(String),

    /// A mesh does not resolve the geometry it is asked to represent.
    #[error("mesh too coarse: {cells_across} cells across the body, need at least {required}")]
    MeshTooCoarse { cells_across: usize, required: usize },

    /// The obstacle solver's outer iteration failed to converge.
    #[error("obstacle solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    OracleDiverged { iterations: usize, residual: f64 },

    /// Two force evaluations disagree badly enough to signal under-resolution.
    #[error(
        "force methods inconsistent: stress integral {stress:.6e}, test-function {test_function:.6e} \
         (relative gap {rel_gap:.3e} > {threshold:.3e})"
    )]
    ForceInconsistent { stress: f64, test_function: f64, rel_gap: f64, threshold: f64 },

    /// A direct linear solve produced an unacceptable residual.
    #[error("linear solve unstable: relative residual {residual:.3e} (threshold {threshold:.3e})")]
    LinearSolve { residual: f64, threshold: f64 },

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A serialized artifact does not match the documented layout.
    #[error("format error: {0}")]
    Format(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
