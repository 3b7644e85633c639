//! The power-law XXZ Hamiltonian
//!
//! ```text
//! H = - sum_{i<j} J_ij ( s_i . s_j + Delta s_z,i s_z,j )
//! ```
//!
//! in two forms: a list of two-site operator terms for the exact engine, and
//! its classical symbol (energy and precession drift) for phase-space
//! trajectories. `J_ij` already carries the `J_perp` prefactor, so only
//! `Delta` is read from [`ModelParams`] here.

use crate::error::{Error, Result};
use crate::lattice::CouplingMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub j_perp: f64,
    pub delta: f64,
    pub alpha: f64,
}

impl ModelParams {
    pub fn new(j_perp: f64, delta: f64, alpha: f64) -> Result<Self> {
        if !j_perp.is_finite() || j_perp <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "Jperp",
                value: j_perp,
                reason: "must be finite and > 0",
            });
        }
        if !delta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "Delta",
                value: delta,
                reason: "must be finite",
            });
        }
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
                reason: "must be finite and >= 0",
            });
        }
        Ok(Self { j_perp, delta, alpha })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    X,
    Y,
    Z,
}

/// `coeff * s_{channel,i} s_{channel,j}` with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSiteTerm {
    pub i: usize,
    pub j: usize,
    pub channel: Channel,
    pub coeff: f64,
}

/// Three channel terms per unordered pair, pairs in lexicographic order.
pub fn hamiltonian_terms(cm: &CouplingMatrix, p: &ModelParams) -> Vec<TwoSiteTerm> {
    let mut terms = Vec::with_capacity(3 * cm.n_sites() * (cm.n_sites() - 1) / 2);
    for (i, j, jij) in cm.pairs() {
        terms.push(TwoSiteTerm { i, j, channel: Channel::X, coeff: -jij });
        terms.push(TwoSiteTerm { i, j, channel: Channel::Y, coeff: -jij });
        terms.push(TwoSiteTerm {
            i,
            j,
            channel: Channel::Z,
            coeff: -jij * (1.0 + p.delta),
        });
    }
    terms
}

/// Classical spin vectors stored component-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalConfig {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl ClassicalConfig {
    pub fn zeros(n: usize) -> Self {
        Self {
            x: vec![0.0; n],
            y: vec![0.0; n],
            z: vec![0.0; n],
        }
    }

    pub fn uniform(n: usize, s: [f64; 3]) -> Self {
        Self {
            x: vec![s[0]; n],
            y: vec![s[1]; n],
            z: vec![s[2]; n],
        }
    }

    pub fn from_spins(spins: &[[f64; 3]]) -> Self {
        Self {
            x: spins.iter().map(|s| s[0]).collect(),
            y: spins.iter().map(|s| s[1]).collect(),
            z: spins.iter().map(|s| s[2]).collect(),
        }
    }

    pub fn n_sites(&self) -> usize {
        self.x.len()
    }

    pub fn spin(&self, i: usize) -> [f64; 3] {
        [self.x[i], self.y[i], self.z[i]]
    }

    pub fn norm_sq(&self, i: usize) -> f64 {
        self.x[i] * self.x[i] + self.y[i] * self.y[i] + self.z[i] * self.z[i]
    }

    /// Collective vector `sum_i S_i`.
    pub fn total(&self) -> [f64; 3] {
        [
            self.x.iter().sum(),
            self.y.iter().sum(),
            self.z.iter().sum(),
        ]
    }
}

/// `-sum_{i<j} J_ij (S_i . S_j + Delta S_z,i S_z,j)`.
pub fn classical_energy(cfg: &ClassicalConfig, cm: &CouplingMatrix, p: &ModelParams) -> f64 {
    let n = cfg.n_sites();
    let zz = 1.0 + p.delta;
    let mut e = 0.0;
    for i in 0..n {
        let row = cm.row(i);
        let (mut fx, mut fy, mut fz) = (0.0, 0.0, 0.0);
        for j in (i + 1)..n {
            fx += row[j] * cfg.x[j];
            fy += row[j] * cfg.y[j];
            fz += row[j] * cfg.z[j];
        }
        e -= cfg.x[i] * fx + cfg.y[i] * fy + zz * cfg.z[i] * fz;
    }
    e
}

/// `dH/dS_i = -sum_j J_ij (S_x,j, S_y,j, (1 + Delta) S_z,j)`, written into `field`.
pub fn effective_field(cfg: &ClassicalConfig, cm: &CouplingMatrix, p: &ModelParams, field: &mut ClassicalConfig) {
    let n = cfg.n_sites();
    let zz = 1.0 + p.delta;
    for i in 0..n {
        let row = cm.row(i);
        let (mut fx, mut fy, mut fz) = (0.0, 0.0, 0.0);
        for j in 0..n {
            let w = row[j];
            fx += w * cfg.x[j];
            fy += w * cfg.y[j];
            fz += w * cfg.z[j];
        }
        field.x[i] = -fx;
        field.y[i] = -fy;
        field.z[i] = -zz * fz;
    }
}

/// Time derivative `dS_i/dt = {H, S_i}`.
///
/// With `{S_mu,i, S_nu,j} = -delta_ij eps_{mu nu rho} S_rho,i` the bracket
/// evaluates to `{H, S_mu,i} = eps_{mu nu rho} (dH/dS_nu,i) S_rho,i`, i.e.
/// `dS_i/dt = (dH/dS_i) x S_i`. This agrees with the Heisenberg equation
/// `ds/dt = i[H, s]` for `H = B . s`, which gives `ds/dt = B x s`.
pub fn classical_drift_into(
    cfg: &ClassicalConfig,
    cm: &CouplingMatrix,
    p: &ModelParams,
    out: &mut ClassicalConfig,
) {
    effective_field(cfg, cm, p, out);
    for i in 0..cfg.n_sites() {
        let (bx, by, bz) = (out.x[i], out.y[i], out.z[i]);
        let (sx, sy, sz) = (cfg.x[i], cfg.y[i], cfg.z[i]);
        out.x[i] = by * sz - bz * sy;
        out.y[i] = bz * sx - bx * sz;
        out.z[i] = bx * sy - by * sx;
    }
}

pub fn classical_drift(cfg: &ClassicalConfig, cm: &CouplingMatrix, p: &ModelParams) -> ClassicalConfig {
    let mut out = ClassicalConfig::zeros(cfg.n_sites());
    classical_drift_into(cfg, cm, p, &mut out);
    out
}

/// Magnitude used to normalise energy drift when the energy itself is near
/// zero: `(1 + |Delta|) / 4 * sum_{i<j} J_ij`.
pub fn energy_scale(cm: &CouplingMatrix, p: &ModelParams) -> f64 {
    let s: f64 = cm.pairs().map(|(_, _, v)| v).sum();
    0.25 * (1.0 + p.delta.abs()) * s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, coupling_matrix, LatticeSpec};

    fn cm(lx: usize, ly: usize, alpha: f64) -> CouplingMatrix {
        coupling_matrix(&build_lattice(LatticeSpec::new(lx, ly)).unwrap(), 1.0, alpha).unwrap()
    }

    fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ModelParams::new(0.0, 0.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, f64::NAN, 1.0).is_err());
        assert!(ModelParams::new(1.0, 0.0, -1.0).is_err());
        assert!(ModelParams::new(1.0, -1.8, 3.0).is_ok());
    }

    #[test]
    fn heisenberg_pair_terms() {
        let c = cm(1, 2, 2.5);
        let p = ModelParams::new(1.0, 0.0, 2.5).unwrap();
        let terms = hamiltonian_terms(&c, &p);
        assert_eq!(terms.len(), 3);
        for t in &terms {
            assert_eq!((t.i, t.j), (0, 1));
            assert!((t.coeff + 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn xx_limit_has_no_zz() {
        let c = cm(3, 2, 3.0);
        let p = ModelParams::new(1.0, -1.0, 3.0).unwrap();
        for t in hamiltonian_terms(&c, &p) {
            if t.channel == Channel::Z {
                assert_eq!(t.coeff, 0.0);
            }
        }
    }

    #[test]
    fn two_by_two_term_table() {
        let c = cm(2, 2, 2.0);
        let delta = 0.4;
        let p = ModelParams::new(1.0, delta, 2.0).unwrap();
        let terms = hamiltonian_terms(&c, &p);
        assert_eq!(terms.len(), 18);
        let mut zz: Vec<f64> = terms
            .iter()
            .filter(|t| t.channel == Channel::Z)
            .map(|t| -t.coeff / (1.0 + delta))
            .collect();
        zz.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect = [0.5, 0.5, 1.0, 1.0, 1.0, 1.0];
        for (a, b) in zz.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn energy_of_x_polarized_config() {
        let c = cm(3, 3, 1.5);
        for delta in [-1.8, 0.0, 2.0] {
            let p = ModelParams::new(1.0, delta, 1.5).unwrap();
            let cfg = ClassicalConfig::uniform(9, [0.5, 0.0, 0.0]);
            let sum: f64 = c.pairs().map(|(_, _, v)| v).sum();
            let e = classical_energy(&cfg, &c, &p);
            assert!((e + 0.25 * sum).abs() < 1e-13);
        }
    }

    #[test]
    fn antiparallel_z_pair_energy() {
        let c = cm(1, 2, 3.0);
        let delta = -0.6;
        let p = ModelParams::new(1.0, delta, 3.0).unwrap();
        let cfg = ClassicalConfig::from_spins(&[[0.0, 0.0, 0.5], [0.0, 0.0, -0.5]]);
        assert!((classical_energy(&cfg, &c, &p) - (1.0 + delta) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn parallel_spins_do_not_move_at_delta_zero() {
        let c = cm(3, 2, 2.0);
        let p = ModelParams::new(1.0, 0.0, 2.0).unwrap();
        let cfg = ClassicalConfig::uniform(6, [0.3, -0.2, 0.4]);
        let d = classical_drift(&cfg, &c, &p);
        for i in 0..6 {
            for v in d.spin(i) {
                assert!(v.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn hand_computed_pair_drift() {
        let c = cm(1, 2, 1.0);
        let p = ModelParams::new(1.0, 0.0, 1.0).unwrap();
        let cfg = ClassicalConfig::from_spins(&[[0.5, 0.0, 0.0], [0.0, 0.0, 0.5]]);
        let d = classical_drift(&cfg, &c, &p);
        // B_1 = -(0, 0, 1/2); B_1 x S_1 = (0, -1/4, 0).
        let s = d.spin(0);
        assert!(s[0].abs() < 1e-16 && s[2].abs() < 1e-16);
        assert!((s[1] + 0.25).abs() < 1e-16);
    }

    #[test]
    fn drift_matches_generic_bracket() {
        // Oracle: evaluate {H, S_mu,i} = sum_{nu,rho} eps_{mu nu rho} dH/dS_nu S_rho
        // with dH/dS from central finite differences of the energy.
        let c = cm(2, 3, 2.0);
        let p = ModelParams::new(1.0, -1.3, 2.0).unwrap();
        let spins: Vec<[f64; 3]> = (0..6)
            .map(|k| {
                let a = 0.7 * k as f64 + 0.3;
                [0.5 * a.cos(), 0.5 * a.sin(), 0.5 - 0.1 * k as f64]
            })
            .collect();
        let cfg = ClassicalConfig::from_spins(&spins);
        let drift = classical_drift(&cfg, &c, &p);
        let h = 1e-5;
        for i in 0..6 {
            let mut grad = [0.0; 3];
            for (mu, g) in grad.iter_mut().enumerate() {
                let mut up = spins.clone();
                let mut dn = spins.clone();
                up[i][mu] += h;
                dn[i][mu] -= h;
                let eu = classical_energy(&ClassicalConfig::from_spins(&up), &c, &p);
                let ed = classical_energy(&ClassicalConfig::from_spins(&dn), &c, &p);
                *g = (eu - ed) / (2.0 * h);
            }
            let expect = cross(grad, spins[i]);
            for mu in 0..3 {
                assert!((drift.spin(i)[mu] - expect[mu]).abs() < 1e-9);
            }
        }
    }
}
