//! Exact state-vector engine and its references: Krylov propagation on the
//! full Hilbert space, one-axis twisting in the Dicke basis, constrained
//! thermal ensembles and half-system entanglement entropy.

pub mod dicke;
pub mod entropy;
pub mod hamiltonian;
pub mod krylov;
pub mod state;
pub mod thermal;

pub use dicke::{oat_full_state, oat_reference, oat_tstar, DickeState, OatOptimum, OatPoint};
pub use entropy::{center_cut, entanglement_entropy, entanglement_entropy_cut};
pub use hamiltonian::{pair_couplings, total_spin_terms, PairCoupling, SpinHamiltonian};
pub use krylov::{evolve_state, KrylovOptions};
pub use state::{build_initial_state, collective_moments, StateVector, ED_MAX_SITES};
pub use thermal::{
    thermal_match, SpectrumMethod, ThermalExpectations, ThermalOptions, ThermalSolution, ThermalSpectrum,
    THERMAL_MAX_SITES,
};
