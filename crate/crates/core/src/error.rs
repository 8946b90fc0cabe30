use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("metric is degenerate (smallest/largest singular value = {ratio:.3e})")]
    DegenerateMetric { ratio: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("perturbation broke an invariant: {0}")]
    PerturbationBrokeInvariant(String),

    #[error("witness is not timelike: g(Y,Y) = {value:.6e} at t = {t:.6}")]
    NotTimelike { t: f64, value: f64 },

    #[error("problem has no timelike witness seed")]
    MissingSeed,

    #[error("integration failed at t = {t:.6}: {reason}")]
    IntegrationFailure { t: f64, reason: String },

    #[error("focal root did not converge in bracket [{lo:.10}, {hi:.10}]")]
    UnresolvedRoot { lo: f64, hi: f64 },

    #[error("t = 1 is a focal instant; the Maslov index is undefined")]
    EndpointFocal,

    #[error("g is degenerate on the orthogonal space at the endpoint focal instant")]
    EndpointDegenerate,

    #[error("focal instant at t = {t:.8} is degenerate; use the perturbation-backed count")]
    DegenerateFocalInstant { t: f64 },

    #[error("perturbation trials disagree: {values:?}")]
    NoAgreement { values: Vec<i64> },

    #[error("every perturbation trial produced a degenerate scan")]
    AllTrialsDegenerate,

    #[error("constraint kernel is empty")]
    EmptyKernel,

    #[error("discrete index did not stabilize over the mesh schedule: {history:?}")]
    NotStabilized { history: Vec<(usize, usize)> },

    #[error("geodesic left the chart domain at u = {u:.6}")]
    LeftChart { u: f64 },

    #[error("trivialized curvature is not g-symmetric at u = {u:.6} (relative defect {defect:.3e})")]
    CurvatureAsymmetry { u: f64, defect: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
