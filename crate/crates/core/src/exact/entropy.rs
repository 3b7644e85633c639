use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::exact::state::StateVector;

/// Schmidt weights below this are dropped before taking logs.
pub const SCHMIDT_CUTOFF: f64 = 1e-14;

/// Number of sites in the left block of the center cut: the first
/// `ceil(N/2)` sites in row-major order.
pub fn center_cut(n_sites: usize) -> usize {
    n_sites.div_ceil(2)
}

/// Von Neumann entropy (natural log) of the first `n_left` sites.
pub fn entanglement_entropy_cut(psi: &StateVector, n_left: usize) -> f64 {
    let n = psi.n_sites();
    assert!(n_left <= n);
    let rows = 1usize << n_left;
    let cols = 1usize << (n - n_left);
    // index = a + 2^{n_left} b, a on the left block
    let amps = psi.amplitudes();
    let m = DMatrix::<C64>::from_fn(rows, cols, |a, b| amps[a + rows * b]);
    let sv = m.singular_values();
    let total: f64 = sv.iter().map(|s| s * s).sum();
    sv.iter()
        .map(|s| s * s / total)
        .filter(|p| *p > SCHMIDT_CUTOFF)
        .map(|p| -p * p.ln())
        .sum()
}

/// Half-system entropy across the center cut.
pub fn entanglement_entropy(psi: &StateVector) -> f64 {
    entanglement_entropy_cut(psi, center_cut(psi.n_sites()))
}
