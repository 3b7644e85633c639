//! Discrete truncated Wigner sampling and classical trajectory ensembles.

pub mod ensemble;
pub mod integrator;
pub mod sampler;

pub use ensemble::{calibrate_step, run_ensemble, EnsembleResult, MomentAccumulator, MomentSums};
pub use integrator::{integrate_trajectory, DriftReport, StepControl};
pub use sampler::{sample_initial, trajectory_rng, SamplerPolicy, DEFAULT_N_TRAJ};
