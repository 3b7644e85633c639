//! One-axis twisting `H = chi S_z^2` in the maximal-spin (Dicke) sector.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::exact::state::{inner, StateVector};
use crate::observables::{squeezing_from_moments, CollectiveMoments, SqueezingResult};
use crate::timegrid::validate_times;

/// Amplitudes `c_q` over `|S=N/2, m = q - N/2>`, `q = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DickeState {
    n_sites: usize,
    amps: Vec<C64>,
}

impl DickeState {
    /// Coherent state along +x: `c_q = sqrt(binom(N, q)) / 2^(N/2)`.
    pub fn x_polarized(n_sites: usize) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::InvalidParameter {
                name: "n_sites",
                value: n_sites as f64,
                reason: "one-axis twisting needs at least two spins",
            });
        }
        // c_{q+1} / c_q = sqrt((N - q) / (q + 1))
        let n = n_sites as f64;
        let mut ln_c = -0.5 * n * std::f64::consts::LN_2;
        let mut amps = Vec::with_capacity(n_sites + 1);
        for q in 0..=n_sites {
            amps.push(C64::new(ln_c.exp(), 0.0));
            ln_c += 0.5 * ((n - q as f64) / (q as f64 + 1.0)).ln();
        }
        Ok(Self { n_sites, amps })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    fn m(&self, q: usize) -> f64 {
        q as f64 - self.n_sites as f64 / 2.0
    }

    /// `exp(-i chi S_z^2 t)` applied to `self`.
    pub fn evolved(&self, chi: f64, t: f64) -> Self {
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(q, c)| {
                let m = self.m(q);
                c * C64::from_polar(1.0, -chi * m * m * t)
            })
            .collect();
        Self {
            n_sites: self.n_sites,
            amps,
        }
    }

    fn raise(&self) -> Vec<C64> {
        let s = self.n_sites as f64 / 2.0;
        let mut out = vec![C64::default(); self.amps.len()];
        for q in 0..self.n_sites {
            let m = self.m(q);
            out[q + 1] = self.amps[q] * (s * (s + 1.0) - m * (m + 1.0)).sqrt();
        }
        out
    }

    fn lower(&self) -> Vec<C64> {
        let s = self.n_sites as f64 / 2.0;
        let mut out = vec![C64::default(); self.amps.len()];
        for q in 1..=self.n_sites {
            let m = self.m(q);
            out[q - 1] = self.amps[q] * (s * (s + 1.0) - m * (m - 1.0)).sqrt();
        }
        out
    }

    pub fn moments(&self) -> CollectiveMoments {
        let up = self.raise();
        let dn = self.lower();
        let sx: Vec<C64> = up.iter().zip(&dn).map(|(a, b)| 0.5 * (a + b)).collect();
        let sy: Vec<C64> = up.iter().zip(&dn).map(|(a, b)| C64::new(0.0, -0.5) * (a - b)).collect();
        let sz: Vec<C64> = self.amps.iter().enumerate().map(|(q, c)| c * self.m(q)).collect();
        let ops = [sx, sy, sz];
        let mut out = CollectiveMoments::default();
        for mu in 0..3 {
            out.first[mu] = inner(&self.amps, &ops[mu]).re;
            for nu in mu..3 {
                let v = inner(&ops[mu], &ops[nu]).re;
                out.second[mu][nu] = v;
                out.second[nu][mu] = v;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OatPoint {
    pub t: f64,
    pub moments: CollectiveMoments,
    pub squeezing: Option<SqueezingResult>,
}

/// Dicke-basis OAT trajectory from the +x coherent state.
pub fn oat_reference(n_sites: usize, chi: f64, times: &[f64]) -> Result<Vec<OatPoint>> {
    validate_times(times)?;
    let psi0 = DickeState::x_polarized(n_sites)?;
    Ok(times
        .iter()
        .map(|&t| {
            let moments = psi0.evolved(chi, t).moments();
            let squeezing = squeezing_from_moments(&moments, n_sites).ok().map(|s| s.at(t, t));
            OatPoint { t, moments, squeezing }
        })
        .collect())
}

/// Optimal OAT squeezing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OatOptimum {
    pub t_star: f64,
    pub xi2_min: f64,
}

/// Locate the first minimum of `xi2(t)` for `H = chi S_z^2` on `n_sites`
/// spins, using any function `xi2(t)` that evaluates the squeezing.
pub fn locate_first_minimum<F>(chi: f64, n_sites: usize, mut xi2: F) -> Result<OatOptimum>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(chi.is_finite() && chi > 0.0) {
        return Err(Error::InvalidParameter {
            name: "chi",
            value: chi,
            reason: "twisting strength must be positive",
        });
    }
    // The first minimum lies near chi t ~ N^(-2/3); scan in steps that
    // resolve that scale, up to chi t = pi/2.
    let n = n_sites as f64;
    let h = (0.02 * n.powf(-2.0 / 3.0)).min(0.01) / chi;
    let t_end = std::f64::consts::FRAC_PI_2 / chi;
    let mut prev = (0.0, xi2(0.0)?);
    let mut cur = (h, xi2(h)?);
    let mut bracket = None;
    while cur.0 < t_end {
        let next_t = cur.0 + h;
        let next = (next_t, xi2(next_t)?);
        if cur.1 <= prev.1 && cur.1 <= next.1 {
            bracket = Some((prev.0, next.0));
            break;
        }
        prev = cur;
        cur = next;
    }
    let (mut a, mut b) = bracket.ok_or(Error::RootFinding {
        what: "OAT squeezing minimum",
        lo: 0.0,
        hi: t_end,
        residual: f64::NAN,
    })?;

    // golden section
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = xi2(c)?;
    let mut fd = xi2(d)?;
    while (b - a) > 0.5e-6 * (a + b) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = xi2(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = xi2(d)?;
        }
    }

    // Polish by bisection on the central-difference slope. Near the flat
    // minimum the slope has a far better signal-to-noise ratio than the
    // function values golden section compares, so the bracket is widened
    // until the slope changes sign.
    let mut slope = |t: f64| -> Result<f64> {
        let e = 1e-4 * t;
        Ok(xi2(t + e)? - xi2(t - e)?)
    };
    let width = b - a;
    let (mut lo, mut hi) = (a, b);
    let mut bracketed = false;
    for k in 0..20 {
        if slope(lo)? < 0.0 && slope(hi)? > 0.0 {
            bracketed = true;
            break;
        }
        let grow = width * (1u64 << k) as f64;
        lo = (a - grow).max(0.5 * a);
        hi = b + grow;
    }
    if bracketed {
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 1e-14 * mid {
                break;
            }
            if slope(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    } else {
        lo = a;
        hi = b;
    }
    let t_star = 0.5 * (lo + hi);
    Ok(OatOptimum {
        t_star,
        xi2_min: xi2(t_star)?,
    })
}

/// `t*` and `xi2_min` of the Dicke-basis OAT dynamics.
pub fn oat_tstar(n_sites: usize, chi: f64) -> Result<OatOptimum> {
    let psi0 = DickeState::x_polarized(n_sites)?;
    locate_first_minimum(chi, n_sites, |t| {
        Ok(squeezing_from_moments(&psi0.evolved(chi, t).moments(), n_sites)?.xi2)
    })
}

/// Full `2^N` state after `exp(-i chi S_z^2 t)` on the +x product state.
/// Diagonal, so each amplitude only picks up a phase.
pub fn oat_full_state(n_sites: usize, chi: f64, t: f64) -> Result<StateVector> {
    let psi = crate::exact::state::build_initial_state(n_sites)?;
    let half = n_sites as f64 / 2.0;
    let amps = psi
        .into_amplitudes()
        .into_iter()
        .enumerate()
        .map(|(k, a)| {
            let m = k.count_ones() as f64 - half;
            a * C64::from_polar(1.0, -chi * m * m * t)
        })
        .collect();
    StateVector::from_amplitudes(n_sites, amps)
}
