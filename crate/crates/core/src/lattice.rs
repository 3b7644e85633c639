//! Open-boundary rectangular lattices and power-law couplings.
//!
//! Sites are enumerated row-major, `i = y * lx + x`. Every other module
//! (in particular the bipartition used for entanglement entropy) relies on
//! this ordering.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatticeSpec {
    pub lx: usize,
    pub ly: usize,
}

impl LatticeSpec {
    pub fn new(lx: usize, ly: usize) -> Self {
        Self { lx, ly }
    }

    pub fn square(l: usize) -> Self {
        Self { lx: l, ly: l }
    }

    pub fn n_sites(&self) -> usize {
        self.lx * self.ly
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Site {
    pub x: usize,
    pub y: usize,
}

impl Site {
    pub fn distance(&self, other: &Site) -> f64 {
        let dx = self.x as f64 - other.x as f64;
        let dy = self.y as f64 - other.y as f64;
        dx.hypot(dy)
    }
}

/// Row-major site coordinates of an open `lx` x `ly` lattice.
pub fn build_lattice(spec: LatticeSpec) -> Result<Vec<Site>> {
    if spec.lx == 0 || spec.ly == 0 {
        return Err(Error::InvalidLattice {
            lx: spec.lx,
            ly: spec.ly,
            reason: "both dimensions must be positive",
        });
    }
    if spec.n_sites() < 2 {
        return Err(Error::InvalidLattice {
            lx: spec.lx,
            ly: spec.ly,
            reason: "need at least two sites",
        });
    }
    Ok((0..spec.ly)
        .flat_map(|y| (0..spec.lx).map(move |x| Site { x, y }))
        .collect())
}

/// Dense symmetric matrix `J_ij = J_perp |r_i - r_j|^-alpha` with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    n: usize,
    alpha: f64,
    j_perp: f64,
    entries: Vec<f64>,
    j_bar: f64,
}

impl CouplingMatrix {
    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn j_perp(&self) -> f64 {
        self.j_perp
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// Row `i` of the matrix.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Row-major flat storage, length `n * n`.
    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    /// Mean coupling over ordered pairs `i != j`.
    pub fn j_bar(&self) -> f64 {
        self.j_bar
    }

    /// Unordered pairs `(i, j, J_ij)` with `i < j`, in lexicographic order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| ((i + 1)..self.n).map(move |j| (i, j, self.get(i, j))))
    }
}

pub fn coupling_matrix(sites: &[Site], j_perp: f64, alpha: f64) -> Result<CouplingMatrix> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            reason: "must be finite and >= 0",
        });
    }
    if !j_perp.is_finite() || j_perp <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "Jperp",
            value: j_perp,
            reason: "must be finite and > 0",
        });
    }
    let n = sites.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let r = sites[i].distance(&sites[j]);
            let v = if alpha == 0.0 { j_perp } else { j_perp * r.powf(-alpha) };
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    let mut cm = CouplingMatrix {
        n,
        alpha,
        j_perp,
        entries,
        j_bar: 0.0,
    };
    cm.j_bar = mean_coupling(&cm);
    Ok(cm)
}

/// `sum_{i != j} J_ij / (N (N - 1))`.
pub fn mean_coupling(cm: &CouplingMatrix) -> f64 {
    let n = cm.n;
    // Sum unordered pairs and double, so the alpha = 0 case is a sum of
    // identical terms.
    let s: f64 = cm.pairs().map(|(_, _, v)| v).sum();
    2.0 * s / (n * (n - 1)) as f64
}

/// `J_bar / J_perp` for an `l` x `l` lattice.
pub fn mean_coupling_ratio(l: usize, alpha: f64) -> Result<f64> {
    let sites = build_lattice(LatticeSpec::square(l))?;
    let cm = coupling_matrix(&sites, 1.0, alpha)?;
    Ok(cm.j_bar())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_two_by_two() {
        let sites = build_lattice(LatticeSpec::new(2, 2)).unwrap();
        let xy: Vec<_> = sites.iter().map(|s| (s.x, s.y)).collect();
        assert_eq!(xy, vec![(0, 0), (1, 0), (0, 1), (1, 1)]);
    }

    #[test]
    fn six_by_six_has_36_sites() {
        assert_eq!(build_lattice(LatticeSpec::square(6)).unwrap().len(), 36);
    }

    #[test]
    fn rejects_degenerate_lattices() {
        assert!(build_lattice(LatticeSpec::new(1, 1)).is_err());
        assert!(build_lattice(LatticeSpec::new(0, 5)).is_err());
        assert!(build_lattice(LatticeSpec::new(3, 0)).is_err());
        assert!(build_lattice(LatticeSpec::new(1, 2)).is_ok());
    }

    #[test]
    fn rejects_bad_couplings() {
        let sites = build_lattice(LatticeSpec::new(2, 2)).unwrap();
        assert!(coupling_matrix(&sites, 1.0, -0.1).is_err());
        assert!(coupling_matrix(&sites, 1.0, f64::INFINITY).is_err());
        assert!(coupling_matrix(&sites, 1.0, f64::NAN).is_err());
        assert!(coupling_matrix(&sites, 0.0, 1.0).is_err());
        assert!(coupling_matrix(&sites, -1.0, 1.0).is_err());
    }

    #[test]
    fn alpha_zero_is_uniform() {
        let sites = build_lattice(LatticeSpec::new(3, 2)).unwrap();
        let cm = coupling_matrix(&sites, 0.7, 0.0).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let expect = if i == j { 0.0 } else { 0.7 };
                assert_eq!(cm.get(i, j), expect);
            }
        }
        assert!((cm.j_bar() - 0.7).abs() <= 1e-12 * 0.7);
    }

    #[test]
    fn two_by_two_alpha_two() {
        let sites = build_lattice(LatticeSpec::new(2, 2)).unwrap();
        let cm = coupling_matrix(&sites, 1.0, 2.0).unwrap();
        // 0-1, 0-2, 1-3, 2-3 are nearest neighbours; 0-3, 1-2 diagonal.
        assert!((cm.get(0, 1) - 1.0).abs() < 1e-15);
        assert!((cm.get(0, 2) - 1.0).abs() < 1e-15);
        assert!((cm.get(0, 3) - 0.5).abs() < 1e-15);
        assert!((cm.get(1, 2) - 0.5).abs() < 1e-15);
        assert!((cm.j_bar() - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn single_pair_unit_distance() {
        let sites = build_lattice(LatticeSpec::new(1, 2)).unwrap();
        let cm = coupling_matrix(&sites, 1.3, 3.0).unwrap();
        assert!((cm.get(0, 1) - 1.3).abs() < 1e-15);
        assert!((cm.j_bar() - 1.3).abs() < 1e-15);
    }

    #[test]
    fn unit_distance_pairs_are_alpha_independent() {
        let sites = build_lattice(LatticeSpec::square(3)).unwrap();
        let a = coupling_matrix(&sites, 1.0, 1.0).unwrap();
        let b = coupling_matrix(&sites, 1.0, 5.0).unwrap();
        for (i, j, v) in a.pairs() {
            let r = sites[i].distance(&sites[j]);
            if r == 1.0 {
                assert_eq!(v, b.get(i, j));
            } else {
                assert!(v > b.get(i, j));
            }
        }
    }

    #[test]
    fn mean_coupling_sweep_is_monotone() {
        for alpha in [1.0, 2.0, 3.0, 4.0, 5.0, 6.0] {
            let ratios: Vec<f64> = (2..=8).map(|l| mean_coupling_ratio(l, alpha).unwrap()).collect();
            for w in ratios.windows(2) {
                assert!(w[1] < w[0], "alpha {alpha}: {ratios:?}");
            }
        }
        for l in 2..=8 {
            assert!((mean_coupling_ratio(l, 0.0).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
