use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice {lx}x{ly}: {reason}")]
    InvalidLattice { lx: usize, ly: usize, reason: &'static str },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("{what} requires N <= {cap}, got N = {n}")]
    ResourceGuard { what: &'static str, cap: usize, n: usize },

    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(&'static str),

    #[error("squeezing undefined: Bloch vector norm {norm:e} below {threshold:e}")]
    SqueezingUndefined { norm: f64, threshold: f64 },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("nonpositive value {value} at index {index}")]
    NonPositive { index: usize, value: f64 },

    #[error(
        "trajectory {trajectory}: step control failed after {substeps} substeps per unit time \
         (energy drift {energy_drift:e}, norm drift {norm_drift:e}, Sz drift {sz_drift:e})"
    )]
    StepControl {
        trajectory: u64,
        substeps: usize,
        energy_drift: f64,
        norm_drift: f64,
        sz_drift: f64,
    },

    #[error("{aborted} of {total} trajectories aborted (limit {limit})")]
    TooManyAborts { aborted: usize, total: usize, limit: usize },

    #[error("Krylov propagator did not converge at subspace size {max_dim} (step {dt:e}, error {err:e})")]
    KrylovNonConvergence { max_dim: usize, dt: f64, err: f64 },

    #[error("target {name} = {value} outside attainable range [{min}, {max}]")]
    TargetOutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("root finding for {what} failed: bracket [{lo}, {hi}], residual {residual:e}")]
    RootFinding {
        what: &'static str,
        lo: f64,
        hi: f64,
        residual: f64,
    },

    #[error("term list does not conserve S_z (pair {i},{j})")]
    NotSzConserving { i: usize, j: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}
