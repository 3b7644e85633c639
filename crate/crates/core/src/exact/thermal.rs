//! Constrained Gibbs ensembles `rho ~ exp(-beta H + mu S_z^2)` matched to a
//! target energy and `S_z` variance. `lambda = mu / beta` is the multiplier
//! of `H - lambda S_z^2`.
//!
//! Spectra are built per `S_z` sector. Small sectors are diagonalized
//! densely; large ones use finite-temperature Lanczos with seeded random
//! vectors. Only `n_up >= N/2` is computed, the rest follows from the
//! global spin flip.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exact::hamiltonian::{pair_couplings, total_spin_terms, PairCoupling};
use crate::model::TwoSiteTerm;

pub const THERMAL_MAX_SITES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalOptions {
    /// Sectors up to this dimension are diagonalized densely.
    pub dense_max_dim: usize,
    pub ftlm_vectors: usize,
    pub lanczos_steps: usize,
    pub seed: u64,
}

impl Default for ThermalOptions {
    fn default() -> Self {
        Self {
            dense_max_dim: 1024,
            ftlm_vectors: 24,
            lanczos_steps: 120,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumMethod {
    Dense,
    Lanczos,
}

/// One Boltzmann-weighted level: `Tr[O e^{-beta H}]` is approximated by
/// `sum weight_O e^{-beta energy}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    pub energy: f64,
    pub weight: f64,
    pub s2_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorSpectrum {
    pub n_up: usize,
    pub magnetization: f64,
    /// 2 when the mirrored sector is folded in, otherwise 1.
    pub multiplicity: f64,
    pub method: SpectrumMethod,
    pub points: Vec<SpectralPoint>,
}

/// Sparse real symmetric operator restricted to one `S_z` sector.
struct SectorOperator {
    diag: Vec<f64>,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SectorOperator {
    fn build(pairs: &[PairCoupling], states: &[usize], constant: f64) -> Self {
        let mut diag = Vec::with_capacity(states.len());
        let mut row_start = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for &k in states {
            let mut d = constant;
            for p in pairs {
                let up_i = k >> p.i & 1 == 1;
                let up_j = k >> p.j & 1 == 1;
                if up_i == up_j {
                    d += 0.25 * p.czz;
                } else {
                    d -= 0.25 * p.czz;
                    let c = 0.25 * (p.cxx + p.cyy);
                    if c != 0.0 {
                        let target = k ^ (1 << p.i) ^ (1 << p.j);
                        let col = states.binary_search(&target).expect("flip-flop stays in sector");
                        cols.push(col);
                        vals.push(c);
                    }
                }
            }
            diag.push(d);
            row_start.push(cols.len());
        }
        Self {
            diag,
            row_start,
            cols,
            vals,
        }
    }

    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = self.diag[r] * x[r];
            for e in self.row_start[r]..self.row_start[r + 1] {
                acc += self.vals[e] * x[self.cols[e]];
            }
            *out = acc;
        }
    }

    fn dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for r in 0..n {
            m[(r, r)] = self.diag[r];
            for e in self.row_start[r]..self.row_start[r + 1] {
                m[(r, self.cols[e])] += self.vals[e];
            }
        }
        m
    }
}

fn sector_states(n_sites: usize, n_up: usize) -> Vec<usize> {
    (0..1usize << n_sites).filter(|k| k.count_ones() as usize == n_up).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dense_sector(h: &SectorOperator, s2: &SectorOperator) -> Vec<SpectralPoint> {
    let eig = SymmetricEigen::new(h.dense());
    let n = h.dim();
    let mut tmp = vec![0.0; n];
    (0..n)
        .map(|j| {
            let v: Vec<f64> = eig.eigenvectors.column(j).iter().copied().collect();
            s2.apply(&v, &mut tmp);
            SpectralPoint {
                energy: eig.eigenvalues[j],
                weight: 1.0,
                s2_weight: dot(&v, &tmp),
            }
        })
        .collect()
}

fn lanczos_sector(
    h: &SectorOperator,
    s2: &SectorOperator,
    opts: &ThermalOptions,
    stream: u64,
) -> Vec<SpectralPoint> {
    let d = h.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(stream);
    let r_count = opts.ftlm_vectors.max(1);
    let scale = d as f64 / r_count as f64;
    let amp = (d as f64).sqrt().recip();
    let mut points = Vec::new();
    let mut w = vec![0.0; d];
    for _ in 0..r_count {
        let mut r = Vec::with_capacity(d);
        let mut bits = 0u64;
        for k in 0..d {
            if k % 64 == 0 {
                bits = rng.next_u64();
            }
            r.push(if bits >> (k % 64) & 1 == 1 { amp } else { -amp });
        }
        let mut s2r = vec![0.0; d];
        s2.apply(&r, &mut s2r);

        let mut basis = vec![r];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let steps = opts.lanczos_steps.min(d).max(1);
        loop {
            let j = basis.len() - 1;
            h.apply(&basis[j], &mut w);
            alpha.push(dot(&basis[j], &w));
            for _ in 0..2 {
                for v in &basis {
                    let c = dot(v, &w);
                    for (x, y) in w.iter_mut().zip(v) {
                        *x -= c * y;
                    }
                }
            }
            let b = dot(&w, &w).sqrt();
            if alpha.len() >= steps || b <= 1e-12 * alpha.iter().map(|a| a.abs()).fold(1e-300, f64::max) {
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
        let m = alpha.len();
        let t = DMatrix::from_fn(m, m, |a, c| {
            if a == c {
                alpha[a]
            } else if a + 1 == c {
                beta[a]
            } else if c + 1 == a {
                beta[c]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let c: Vec<f64> = basis.iter().map(|v| dot(v, &s2r)).collect();
        for j in 0..m {
            let y = eig.eigenvectors.column(j);
            let y0 = y[0];
            let proj: f64 = (0..m).map(|k| y[k] * c[k]).sum();
            points.push(SpectralPoint {
                energy: eig.eigenvalues[j],
                weight: scale * y0 * y0,
                s2_weight: scale * y0 * proj,
            });
        }
    }
    points
}

/// Per-sector spectral data of `H` together with `S^2` weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalSpectrum {
    n_sites: usize,
    sectors: Vec<SectorSpectrum>,
    e_min: f64,
    e_max: f64,
}

/// Thermal averages and the (co)variances used by the root finders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalExpectations {
    pub energy: f64,
    pub sz2: f64,
    pub s2: f64,
    pub var_energy: f64,
    pub cov_energy_sz2: f64,
    pub var_sz2: f64,
}

impl ThermalSpectrum {
    pub fn build(terms: &[TwoSiteTerm], n_sites: usize, opts: &ThermalOptions) -> Result<Self> {
        crate::exact::state::check_sites(n_sites, THERMAL_MAX_SITES, "thermal matcher")?;
        let pairs = pair_couplings(terms, n_sites)?;
        for p in &pairs {
            if (p.cxx - p.cyy).abs() > 1e-12 * p.cxx.abs().max(p.cyy.abs()) {
                return Err(Error::NotSzConserving { i: p.i, j: p.j });
            }
        }
        let s2_pairs = pair_couplings(&total_spin_terms(n_sites), n_sites)?;
        let s2_const = 0.75 * n_sites as f64;
        let mut sectors = Vec::new();
        for n_up in n_sites.div_ceil(2)..=n_sites {
            let states = sector_states(n_sites, n_up);
            let h = SectorOperator::build(&pairs, &states, 0.0);
            let s2 = SectorOperator::build(&s2_pairs, &states, s2_const);
            let (method, points) = if states.len() <= opts.dense_max_dim {
                (SpectrumMethod::Dense, dense_sector(&h, &s2))
            } else {
                (SpectrumMethod::Lanczos, lanczos_sector(&h, &s2, opts, n_up as u64))
            };
            let mirrored = 2 * n_up != n_sites;
            sectors.push(SectorSpectrum {
                n_up,
                magnetization: n_up as f64 - n_sites as f64 / 2.0,
                multiplicity: if mirrored { 2.0 } else { 1.0 },
                method,
                points,
            });
        }
        let energies = sectors.iter().flat_map(|s| s.points.iter().map(|p| p.energy));
        let (e_min, e_max) = energies.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), e| (a.min(e), b.max(e)));
        Ok(Self {
            n_sites,
            sectors,
            e_min,
            e_max,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn sectors(&self) -> &[SectorSpectrum] {
        &self.sectors
    }

    pub fn energy_range(&self) -> (f64, f64) {
        (self.e_min, self.e_max)
    }

    /// True when every sector was diagonalized densely.
    pub fn is_exact(&self) -> bool {
        self.sectors.iter().all(|s| s.method == SpectrumMethod::Dense)
    }

    /// Energy unit used for bracketing and residual normalization.
    pub fn energy_unit(&self) -> f64 {
        ((self.e_max - self.e_min) / self.n_sites as f64).max(1e-300)
    }

    pub fn expectations(&self, beta: f64, mu: f64) -> ThermalExpectations {
        let expo = |e: f64, m: f64| -beta * e + mu * m * m;
        let shift = self
            .sectors
            .iter()
            .flat_map(|s| {
                s.points
                    .iter()
                    .filter(|p| p.weight > 0.0)
                    .map(move |p| expo(p.energy, s.magnetization))
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        let (mut e1, mut m1, mut s2) = (0.0, 0.0, 0.0);
        for s in &self.sectors {
            let m2 = s.magnetization * s.magnetization;
            for p in &s.points {
                let b = s.multiplicity * (expo(p.energy, s.magnetization) - shift).exp();
                z += b * p.weight;
                e1 += b * p.weight * p.energy;
                m1 += b * p.weight * m2;
                s2 += b * p.s2_weight;
            }
        }
        let (energy, sz2) = (e1 / z, m1 / z);
        let (mut vee, mut vem, mut vmm) = (0.0, 0.0, 0.0);
        for s in &self.sectors {
            let dm = s.magnetization * s.magnetization - sz2;
            for p in &s.points {
                let b = s.multiplicity * (expo(p.energy, s.magnetization) - shift).exp() * p.weight;
                let de = p.energy - energy;
                vee += b * de * de;
                vem += b * de * dm;
                vmm += b * dm * dm;
            }
        }
        ThermalExpectations {
            energy,
            sz2,
            s2: s2 / z,
            var_energy: vee / z,
            cov_energy_sz2: vem / z,
            var_sz2: vmm / z,
        }
    }

    /// Checks that `<H - lambda S_z^2>` strictly decreases on a uniform
    /// `beta` grid at fixed `lambda`.
    pub fn shifted_energy_is_monotone(&self, lambda: f64, beta_lo: f64, beta_hi: f64, n: usize) -> bool {
        let mut prev = f64::INFINITY;
        for k in 0..=n {
            let b = beta_lo + (beta_hi - beta_lo) * k as f64 / n as f64;
            let ex = self.expectations(b, b * lambda);
            let e = ex.energy - lambda * ex.sz2;
            if !(e < prev) {
                return false;
            }
            prev = e;
        }
        true
    }

    fn solve_beta(&self, mu: f64, e_target: f64, tol: f64) -> Result<(f64, ThermalExpectations)> {
        let unit = self.energy_unit();
        let f = |b: f64| self.expectations(b, mu);
        let at0 = f(0.0);
        if (at0.energy - e_target).abs() <= tol {
            return Ok((0.0, at0));
        }
        // <H> decreases with beta
        let dir = if at0.energy > e_target { 1.0 } else { -1.0 };
        let mut inner = 0.0;
        let mut outer = dir / unit;
        loop {
            let ex = f(outer);
            if (ex.energy - e_target) * dir < 0.0 {
                break;
            }
            if (ex.energy - e_target).abs() <= tol {
                return Ok((outer, ex));
            }
            inner = outer;
            outer *= 2.0;
            if outer.abs() > 1e6 / unit {
                let (lo, hi) = (f(1e6 / unit).energy, f(-1e6 / unit).energy);
                return Err(Error::TargetOutOfRange {
                    name: "energy",
                    value: e_target,
                    min: lo,
                    max: hi,
                });
            }
        }
        let (mut lo, mut hi) = if inner < outer { (inner, outer) } else { (outer, inner) };
        let mut b = 0.5 * (lo + hi);
        for _ in 0..200 {
            let ex = f(b);
            let r = ex.energy - e_target;
            if r.abs() <= tol {
                return Ok((b, ex));
            }
            if r > 0.0 {
                lo = b;
            } else {
                hi = b;
            }
            let newton = if ex.var_energy > 0.0 { b + r / ex.var_energy } else { f64::NAN };
            b = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo <= 4.0 * f64::EPSILON * b.abs().max(1.0 / unit) {
                return Ok((b, f(b)));
            }
        }
        let ex = f(b);
        Err(Error::RootFinding {
            what: "inverse temperature",
            lo,
            hi,
            residual: ex.energy - e_target,
        })
    }

    /// Find `(beta, mu)` reproducing `e_target` and `sz2_target`.
    pub fn solve(&self, e_target: f64, sz2_target: f64) -> Result<ThermalSolution> {
        let n = self.n_sites as f64;
        let m2_max = n * n / 4.0;
        let m2_min = if self.n_sites % 2 == 0 { 0.0 } else { 0.25 };
        if !(sz2_target > m2_min && sz2_target < m2_max) {
            return Err(Error::TargetOutOfRange {
                name: "sz2",
                value: sz2_target,
                min: m2_min,
                max: m2_max,
            });
        }
        let e_norm = e_target.abs().max(self.energy_unit());
        let e_tol = 1e-13 * e_norm;
        let m_tol = 1e-13 * sz2_target;
        let g = |mu: f64| -> Result<(f64, ThermalExpectations)> { self.solve_beta(mu, e_target, e_tol) };

        let (beta0, ex0) = g(0.0)?;
        let mut result = (0.0, beta0, ex0);
        let r0 = ex0.sz2 - sz2_target;
        if r0.abs() > m_tol {
            // sz2 increases with mu along the constant-energy curve
            let dir = if r0 < 0.0 { 1.0 } else { -1.0 };
            let mut inner = 0.0;
            let mut outer = dir * 4.0 / n;
            loop {
                let (_, ex) = g(outer)?;
                if (ex.sz2 - sz2_target) * dir > 0.0 {
                    break;
                }
                inner = outer;
                outer *= 2.0;
                if outer.abs() > 1e4 {
                    return Err(Error::TargetOutOfRange {
                        name: "sz2",
                        value: sz2_target,
                        min: m2_min,
                        max: m2_max,
                    });
                }
            }
            let (mut lo, mut hi) = if inner < outer { (inner, outer) } else { (outer, inner) };
            let mut mu = 0.5 * (lo + hi);
            let mut done = false;
            for _ in 0..200 {
                let (beta, ex) = g(mu)?;
                let r = ex.sz2 - sz2_target;
                result = (mu, beta, ex);
                if r.abs() <= m_tol || hi - lo <= 4.0 * f64::EPSILON * mu.abs().max(1.0 / n) {
                    done = true;
                    break;
                }
                if r < 0.0 {
                    lo = mu;
                } else {
                    hi = mu;
                }
                let slope = if ex.var_energy > 0.0 {
                    ex.var_sz2 - ex.cov_energy_sz2 * ex.cov_energy_sz2 / ex.var_energy
                } else {
                    ex.var_sz2
                };
                let newton = if slope > 0.0 { mu - r / slope } else { f64::NAN };
                mu = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            }
            if !done {
                return Err(Error::RootFinding {
                    what: "S_z^2 multiplier",
                    lo,
                    hi,
                    residual: result.2.sz2 - sz2_target,
                });
            }
        }
        let (mu, beta, ex) = result;
        let lambda = if beta != 0.0 {
            mu / beta
        } else if mu == 0.0 {
            0.0
        } else {
            mu.signum() * f64::INFINITY
        };
        Ok(ThermalSolution {
            beta,
            mu,
            lambda,
            temperature: if beta != 0.0 { beta.recip() } else { f64::INFINITY },
            energy: ex.energy,
            sz2: ex.sz2,
            s2: ex.s2,
            sperp2: ex.s2 - ex.sz2,
            residual_energy: (ex.energy - e_target).abs() / e_norm,
            residual_sz2: (ex.sz2 - sz2_target).abs() / sz2_target,
            exact: self.is_exact(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalSolution {
    pub beta: f64,
    /// `beta * lambda`
    pub mu: f64,
    pub lambda: f64,
    pub temperature: f64,
    pub energy: f64,
    pub sz2: f64,
    pub s2: f64,
    pub sperp2: f64,
    /// `|<H> - E| / max(|E|, (E_max - E_min)/N)`
    pub residual_energy: f64,
    /// `|<S_z^2> - target| / target`
    pub residual_sz2: f64,
    /// False when any sector used the Lanczos estimate.
    pub exact: bool,
}

/// Build the spectrum of `terms` and match it to `(e_target, sz2_target)`.
pub fn thermal_match(
    terms: &[TwoSiteTerm],
    n_sites: usize,
    e_target: f64,
    sz2_target: f64,
    opts: &ThermalOptions,
) -> Result<ThermalSolution> {
    ThermalSpectrum::build(terms, n_sites, opts)?.solve(e_target, sz2_target)
}
