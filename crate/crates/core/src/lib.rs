//! Far-from-equilibrium dynamics of 2D power-law XXZ spin-1/2 lattices.
//!
//! Two engines share one model definition:
//!
//! - [`dtwa`]: discrete truncated Wigner sampling of the +x product state
//!   followed by classical precession of each sample, for large lattices.
//! - [`exact`]: dense state vectors (up to 20 spins), a Dicke-basis
//!   one-axis-twisting reference, a constrained thermal-ensemble matcher and
//!   bipartite entanglement entropy.
//!
//! [`observables`] and [`analysis`] turn moments into squeezing, optimal
//! squeezing, size-scaling exponents and entropy growth rates.

pub mod analysis;
pub mod dtwa;
pub mod error;
pub mod exact;
pub mod lattice;
pub mod model;
pub mod observables;
pub mod timegrid;

pub use error::{Error, Result};
pub use lattice::{build_lattice, coupling_matrix, mean_coupling, CouplingMatrix, LatticeSpec, Site};
pub use model::{ClassicalConfig, ModelParams};
pub use observables::{squeezing_from_moments, CollectiveMoments, SqueezingResult};
pub use timegrid::{time_scale, TimeGrid};
