use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Channel, TwoSiteTerm};

/// Per-pair couplings `c_xx s^x s^x + c_yy s^y s^y + c_zz s^z s^z`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PairCoupling {
    pub i: usize,
    pub j: usize,
    pub cxx: f64,
    pub cyy: f64,
    pub czz: f64,
}

/// Merge a term list into one entry per unordered pair, sorted by `(i, j)`.
pub fn pair_couplings(terms: &[TwoSiteTerm], n_sites: usize) -> Result<Vec<PairCoupling>> {
    let mut map: BTreeMap<(usize, usize), PairCoupling> = BTreeMap::new();
    for t in terms {
        if t.i == t.j || t.i >= n_sites || t.j >= n_sites {
            return Err(Error::InvalidParameter {
                name: "term site",
                value: t.i.max(t.j) as f64,
                reason: "two-site terms need distinct sites inside the lattice",
            });
        }
        let (i, j) = if t.i < t.j { (t.i, t.j) } else { (t.j, t.i) };
        let e = map.entry((i, j)).or_insert(PairCoupling {
            i,
            j,
            ..PairCoupling::default()
        });
        match t.channel {
            Channel::X => e.cxx += t.coeff,
            Channel::Y => e.cyy += t.coeff,
            Channel::Z => e.czz += t.coeff,
        }
    }
    Ok(map.into_values().collect())
}

/// Heisenberg coupling of every pair with weight 2, so that
/// `S^2 = 3N/4 + (these terms)`.
pub fn total_spin_terms(n_sites: usize) -> Vec<TwoSiteTerm> {
    let mut out = Vec::with_capacity(3 * n_sites * n_sites.saturating_sub(1) / 2);
    for i in 0..n_sites {
        for j in i + 1..n_sites {
            for channel in [Channel::X, Channel::Y, Channel::Z] {
                out.push(TwoSiteTerm { i, j, channel, coeff: 2.0 });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
struct FlipTerm {
    mask: usize,
    bi: usize,
    bj: usize,
    // element when the two bits agree / differ
    same: f64,
    diff: f64,
}

/// Matrix-free real symmetric operator on the full `2^N` space built from
/// two-site terms.
#[derive(Debug, Clone)]
pub struct SpinHamiltonian {
    n_sites: usize,
    diag: Vec<f64>,
    flips: Vec<FlipTerm>,
    constant: f64,
}

const PAR_BLOCK: usize = 1 << 12;

impl SpinHamiltonian {
    pub fn from_terms(terms: &[TwoSiteTerm], n_sites: usize) -> Result<Self> {
        crate::exact::state::check_sites(n_sites, crate::exact::ED_MAX_SITES, "exact Hamiltonian")?;
        let pairs = pair_couplings(terms, n_sites)?;
        let dim = 1usize << n_sites;
        let mut diag = vec![0.0; dim];
        let mut flips = Vec::new();
        for p in &pairs {
            let (bi, bj) = (1usize << p.i, 1usize << p.j);
            if p.czz != 0.0 {
                let q = 0.25 * p.czz;
                for (k, d) in diag.iter_mut().enumerate() {
                    let aligned = ((k & bi) != 0) == ((k & bj) != 0);
                    *d += if aligned { q } else { -q };
                }
            }
            let same = 0.25 * (p.cxx - p.cyy);
            let diff = 0.25 * (p.cxx + p.cyy);
            if same != 0.0 || diff != 0.0 {
                flips.push(FlipTerm {
                    mask: bi | bj,
                    bi,
                    bj,
                    same,
                    diff,
                });
            }
        }
        Ok(Self {
            n_sites,
            diag,
            flips,
            constant: 0.0,
        })
    }

    /// Add `c * identity`.
    pub fn with_constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// `out = H psi`
    pub fn apply(&self, psi: &[C64], out: &mut [C64]) {
        assert_eq!(psi.len(), self.dim());
        assert_eq!(out.len(), self.dim());
        out.par_chunks_mut(PAR_BLOCK).enumerate().for_each(|(blk, chunk)| {
            let base = blk * PAR_BLOCK;
            for (off, o) in chunk.iter_mut().enumerate() {
                let k = base + off;
                let mut acc = psi[k] * (self.diag[k] + self.constant);
                for f in &self.flips {
                    let aligned = ((k & f.bi) != 0) == ((k & f.bj) != 0);
                    let c = if aligned { f.same } else { f.diff };
                    if c != 0.0 {
                        acc += psi[k ^ f.mask] * c;
                    }
                }
                *o = acc;
            }
        });
    }

    /// `<psi|H|psi>` (real for a Hermitian operator).
    pub fn expectation(&self, psi: &[C64]) -> f64 {
        let mut tmp = vec![C64::default(); psi.len()];
        self.apply(psi, &mut tmp);
        crate::exact::state::inner(psi, &tmp).re
    }

    /// Diagonal part only (the `zz` energies plus constant).
    pub fn diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        self.diag.iter().map(move |d| d + self.constant)
    }

    /// `2^{-N} Tr H`
    pub fn mean_trace(&self) -> f64 {
        self.diag.iter().sum::<f64>() / self.dim() as f64 + self.constant
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::state::{apply_sx, apply_sy, apply_sz};

    fn single(i: usize, j: usize, channel: Channel) -> Vec<TwoSiteTerm> {
        vec![TwoSiteTerm { i, j, channel, coeff: 1.0 }]
    }

    fn site_op(psi: &[C64], site: usize, op: usize) -> Vec<C64> {
        let dim = psi.len();
        let mut out = vec![C64::default(); dim];
        for k in 0..dim {
            let b = 1usize << site;
            let up = k & b != 0;
            out[k] = match op {
                0 => 0.5 * psi[k ^ b],
                1 => {
                    if up {
                        C64::new(0.0, -0.5) * psi[k ^ b]
                    } else {
                        C64::new(0.0, 0.5) * psi[k ^ b]
                    }
                }
                _ => psi[k] * if up { 0.5 } else { -0.5 },
            };
        }
        out
    }

    #[test]
    fn two_site_terms_match_operator_products() {
        let n = 3;
        let dim = 8;
        let psi: Vec<C64> = (0..dim).map(|k| C64::new(0.3 + k as f64, 0.7 - 0.2 * k as f64)).collect();
        for (ch, op) in [(Channel::X, 0), (Channel::Y, 1), (Channel::Z, 2)] {
            let h = SpinHamiltonian::from_terms(&single(0, 2, ch), n).unwrap();
            let mut out = vec![C64::default(); dim];
            h.apply(&psi, &mut out);
            let want = site_op(&site_op(&psi, 2, op), 0, op);
            for (a, b) in out.iter().zip(&want) {
                assert!((a - b).norm() < 1e-14, "{ch:?}");
            }
        }
    }

    #[test]
    fn total_spin_terms_reproduce_collective_s2() {
        let n = 4;
        let dim = 16;
        let psi: Vec<C64> = (0..dim).map(|k| C64::new((k as f64).sin(), (2.0 * k as f64).cos())).collect();
        let s2 = SpinHamiltonian::from_terms(&total_spin_terms(n), n)
            .unwrap()
            .with_constant(0.75 * n as f64);
        let mut got = vec![C64::default(); dim];
        s2.apply(&psi, &mut got);
        let mut want = vec![C64::default(); dim];
        let mut a = vec![C64::default(); dim];
        let mut b = vec![C64::default(); dim];
        for f in [apply_sx, apply_sy, apply_sz] {
            f(&psi, n, &mut a);
            f(&a, n, &mut b);
            for (w, x) in want.iter_mut().zip(&b) {
                *w += x;
            }
        }
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-12);
        }
    }

    #[test]
    fn traceless_and_merged() {
        let terms = vec![
            TwoSiteTerm { i: 1, j: 0, channel: Channel::Z, coeff: 0.5 },
            TwoSiteTerm { i: 0, j: 1, channel: Channel::Z, coeff: 0.25 },
        ];
        let pairs = pair_couplings(&terms, 2).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].czz, 0.75);
        let h = SpinHamiltonian::from_terms(&terms, 2).unwrap();
        assert!(h.mean_trace().abs() < 1e-15);
        assert!(pair_couplings(&single(0, 0, Channel::X), 2).is_err());
    }
}
