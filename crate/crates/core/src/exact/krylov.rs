//! Lanczos time propagation `psi(t) = exp(-i H t) psi(0)`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::exact::hamiltonian::SpinHamiltonian;
use crate::exact::state::{inner, norm, StateVector};
use crate::timegrid::validate_times;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOptions {
    /// Largest Krylov subspace per step.
    pub max_dim: usize,
    /// Local error bound per step, for a normalized state.
    pub tol: f64,
    /// First trial step; later trials adapt to what succeeded.
    pub dt_initial: f64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            max_dim: 40,
            tol: 1e-12,
            dt_initial: 0.5,
        }
    }
}

struct TridiagExp {
    theta: Vec<f64>,
    vecs: DMatrix<f64>,
}

impl TridiagExp {
    fn new(alpha: &[f64], beta: &[f64]) -> Self {
        let m = alpha.len();
        let t = DMatrix::from_fn(m, m, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        Self {
            theta: eig.eigenvalues.iter().copied().collect(),
            vecs: eig.eigenvectors,
        }
    }

    /// Component `r` of `exp(-i T dt) e_1`.
    fn component(&self, r: usize, dt: f64) -> C64 {
        self.theta
            .iter()
            .enumerate()
            .map(|(j, th)| C64::from_polar(1.0, -th * dt) * (self.vecs[(r, j)] * self.vecs[(0, j)]))
            .sum()
    }
}

/// One Lanczos step from `psi` over at most `dt`. Returns the step taken.
fn krylov_step(h: &SpinHamiltonian, psi: &mut [C64], dt: f64, opts: &KrylovOptions) -> Result<f64> {
    let dim = psi.len();
    let nrm = norm(psi);
    let mut basis: Vec<Vec<C64>> = vec![psi.iter().map(|a| a / nrm).collect()];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![C64::default(); dim];
    let max_dim = opts.max_dim.min(dim).max(1);

    loop {
        let j = basis.len() - 1;
        h.apply(&basis[j], &mut w);
        let a = inner(&basis[j], &w).re;
        alpha.push(a);
        // full reorthogonalization, two passes
        for _ in 0..2 {
            for v in &basis {
                let c = inner(v, &w);
                for (x, y) in w.iter_mut().zip(v) {
                    *x -= c * y;
                }
            }
        }
        let b = norm(&w);
        let m = alpha.len();
        let tri = TridiagExp::new(&alpha, &beta);
        let breakdown = b <= 1e-13 * (a.abs() + beta.last().copied().unwrap_or(0.0)).max(1e-300);
        let err_at = |t: f64| b * tri.component(m - 1, t).norm();

        let accept = if breakdown {
            Some(dt)
        } else if err_at(dt) <= opts.tol {
            Some(dt)
        } else if m >= max_dim {
            let mut t = dt;
            let mut found = None;
            for _ in 0..60 {
                t *= 0.5;
                if err_at(t) <= opts.tol {
                    found = Some(t);
                    break;
                }
            }
            if found.is_none() {
                return Err(Error::KrylovNonConvergence {
                    max_dim,
                    dt,
                    err: err_at(t),
                });
            }
            found
        } else {
            None
        };

        if let Some(t) = accept {
            let coeffs: Vec<C64> = (0..m).map(|r| tri.component(r, t) * nrm).collect();
            for (k, out) in psi.iter_mut().enumerate() {
                *out = coeffs.iter().zip(&basis).map(|(c, v)| c * v[k]).sum();
            }
            return Ok(t);
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
}

/// Evolve `psi` under `h` and return the state at every time in `times`
/// (which must start at 0 and increase strictly).
pub fn evolve_state(
    psi: &StateVector,
    h: &SpinHamiltonian,
    times: &[f64],
    opts: &KrylovOptions,
) -> Result<Vec<StateVector>> {
    validate_times(times)?;
    if psi.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: psi.dim(),
        });
    }
    let mut cur = psi.clone();
    let mut out = Vec::with_capacity(times.len());
    out.push(cur.clone());
    let mut hint = opts.dt_initial;
    for w in times.windows(2) {
        let mut remaining = w[1] - w[0];
        let eps = 1e-14 * w[1].abs().max(1.0);
        while remaining > eps {
            let trial = hint.min(remaining);
            let taken = krylov_step(h, cur.amplitudes_mut(), trial, opts)?;
            remaining -= taken;
            hint = if taken < trial { taken } else { (1.5 * taken).max(hint) };
        }
        out.push(cur.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Channel, TwoSiteTerm};

    #[test]
    fn two_spin_exchange_oracle() {
        // H = J (sx sx + sy sy) on |up,down> oscillates with frequency J/2:
        // amplitude of |down,up> is -i sin(J t / 2).
        let terms = vec![
            TwoSiteTerm { i: 0, j: 1, channel: Channel::X, coeff: 1.0 },
            TwoSiteTerm { i: 0, j: 1, channel: Channel::Y, coeff: 1.0 },
        ];
        let h = SpinHamiltonian::from_terms(&terms, 2).unwrap();
        let mut amps = vec![C64::default(); 4];
        amps[0b01] = C64::new(1.0, 0.0); // site 0 up, site 1 down
        let psi = StateVector::from_amplitudes(2, amps).unwrap();
        let times = [0.0, 0.7, 3.1, 9.4];
        let path = evolve_state(&psi, &h, &times, &KrylovOptions::default()).unwrap();
        for (t, s) in times.iter().zip(&path) {
            let a = s.amplitudes();
            assert!((a[0b01] - C64::new((t / 2.0).cos(), 0.0)).norm() < 1e-12);
            assert!((a[0b10] - C64::new(0.0, -(t / 2.0).sin())).norm() < 1e-12);
        }
    }

    #[test]
    fn diagonal_hamiltonian_gives_phases() {
        let terms = vec![TwoSiteTerm { i: 0, j: 2, channel: Channel::Z, coeff: 2.0 }];
        let h = SpinHamiltonian::from_terms(&terms, 3).unwrap();
        let psi = crate::exact::state::x_polarized(3);
        let path = evolve_state(&psi, &h, &[0.0, 5.0], &KrylovOptions::default()).unwrap();
        let diag: Vec<f64> = h.diagonal().collect();
        for (k, a) in path[1].amplitudes().iter().enumerate() {
            let want = C64::from_polar(psi.amplitudes()[k].re, -diag[k] * 5.0);
            assert!((a - want).norm() < 1e-12);
        }
    }

    #[test]
    fn norm_preserved_on_long_step() {
        let mut terms = Vec::new();
        for (i, j) in [(0, 1), (1, 2), (2, 3), (0, 3), (0, 2)] {
            for (c, v) in [(Channel::X, -1.0), (Channel::Y, -1.0), (Channel::Z, 0.4)] {
                terms.push(TwoSiteTerm { i, j, channel: c, coeff: v });
            }
        }
        let h = SpinHamiltonian::from_terms(&terms, 4).unwrap();
        let psi = crate::exact::state::x_polarized(4);
        let path = evolve_state(&psi, &h, &[0.0, 40.0], &KrylovOptions::default()).unwrap();
        assert!((path[1].norm() - 1.0).abs() < 1e-11);
        let e0 = h.expectation(psi.amplitudes());
        let e1 = h.expectation(path[1].amplitudes());
        assert!((e0 - e1).abs() < 1e-11);
    }
}
