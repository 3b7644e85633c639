//! Collective-spin moments and the Wineland squeezing parameter.

use crate::error::{Error, Result};

/// First moments `<S_mu>` and symmetrized second moments
/// `<{S_mu, S_nu}> / 2` of the collective spin.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CollectiveMoments {
    pub first: [f64; 3],
    pub second: [[f64; 3]; 3],
}

impl CollectiveMoments {
    /// `<S^2>`
    pub fn total_spin_sq(&self) -> f64 {
        self.second[0][0] + self.second[1][1] + self.second[2][2]
    }

    /// `<S_x^2 + S_y^2>`
    pub fn transverse_spin_sq(&self) -> f64 {
        self.second[0][0] + self.second[1][1]
    }

    pub fn covariance(&self) -> [[f64; 3]; 3] {
        let mut c = [[0.0; 3]; 3];
        for (mu, row) in c.iter_mut().enumerate() {
            for (nu, v) in row.iter_mut().enumerate() {
                *v = self.second[mu][nu] - self.first[mu] * self.first[nu];
            }
        }
        c
    }

    /// Moments after applying the rotation `r` (row-major) to the spin.
    pub fn rotated(&self, r: &[[f64; 3]; 3]) -> Self {
        let mut out = Self::default();
        for a in 0..3 {
            out.first[a] = (0..3).map(|k| r[a][k] * self.first[k]).sum();
            for b in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    for l in 0..3 {
                        s += r[a][k] * r[b][l] * self.second[k][l];
                    }
                }
                out.second[a][b] = s;
            }
        }
        out
    }
}

/// `<S^2>` of the fully polarized state, `(N/2)(N/2 + 1)`.
pub fn total_spin_sq_initial(n: usize) -> f64 {
    let s = n as f64 / 2.0;
    s * (s + 1.0)
}

/// `<S_x^2 + S_y^2>` of the x-polarized state, `N (N + 1) / 4`.
pub fn transverse_spin_sq_initial(n: usize) -> f64 {
    let n = n as f64;
    n * (n + 1.0) / 4.0
}

pub fn to_db(xi2: f64) -> f64 {
    10.0 * xi2.log10()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingResult {
    pub xi2: f64,
    pub xi2_db: f64,
    /// Unit vector of the minimal-variance axis.
    pub axis: [f64; 3],
    /// Angle of `axis` in the transverse frame `(e1, e2)`, in (-pi/2, pi/2].
    pub axis_angle: f64,
    pub frame: [[f64; 3]; 2],
    pub bloch: [f64; 3],
    pub t: f64,
    pub tau: f64,
}

impl SqueezingResult {
    pub fn at(mut self, t: f64, tau: f64) -> Self {
        self.t = t;
        self.tau = tau;
        self
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Orthonormal pair spanning the plane orthogonal to the unit vector `n`.
///
/// The reference direction is the coordinate axis least aligned with `n`
/// (lowest index wins ties), projected out by Gram-Schmidt.
pub fn transverse_frame(n: [f64; 3]) -> [[f64; 3]; 2] {
    let mut k = 0;
    for c in 1..3 {
        if n[c].abs() < n[k].abs() {
            k = c;
        }
    }
    let mut e1 = [0.0; 3];
    e1[k] = 1.0;
    let proj = n[k];
    for c in 0..3 {
        e1[c] -= proj * n[c];
    }
    let norm = dot(e1, e1).sqrt();
    for v in &mut e1 {
        *v /= norm;
    }
    let e2 = cross(n, e1);
    [e1, e2]
}

/// `xi^2 = N * min_n Var(S_n) / |<S>|^2` over axes `n` orthogonal to `<S>`.
pub fn squeezing_from_moments(m: &CollectiveMoments, n_sites: usize) -> Result<SqueezingResult> {
    let bloch = m.first;
    let len = dot(bloch, bloch).sqrt();
    let threshold = 1e-9 * n_sites as f64;
    if !(len >= threshold) {
        return Err(Error::SqueezingUndefined { norm: len, threshold });
    }
    let unit = [bloch[0] / len, bloch[1] / len, bloch[2] / len];
    let frame = transverse_frame(unit);
    let cov = m.covariance();
    let quad = |a: [f64; 3], b: [f64; 3]| -> f64 {
        let mut s = 0.0;
        for mu in 0..3 {
            for nu in 0..3 {
                s += a[mu] * cov[mu][nu] * b[nu];
            }
        }
        s
    };
    let c11 = quad(frame[0], frame[0]);
    let c22 = quad(frame[1], frame[1]);
    let c12 = quad(frame[0], frame[1]);
    let mean = 0.5 * (c11 + c22);
    let radius = (0.25 * (c11 - c22).powi(2) + c12 * c12).sqrt();
    let lambda_min = mean - radius;

    // Major axis sits at 0.5 atan2(2 c12, c11 - c22); the minor axis is
    // perpendicular to it.
    let mut angle = 0.5 * (2.0 * c12).atan2(c11 - c22) + std::f64::consts::FRAC_PI_2;
    if angle > std::f64::consts::FRAC_PI_2 {
        angle -= std::f64::consts::PI;
    }
    let (s, c) = angle.sin_cos();
    let axis = [
        c * frame[0][0] + s * frame[1][0],
        c * frame[0][1] + s * frame[1][1],
        c * frame[0][2] + s * frame[1][2],
    ];
    let xi2 = n_sites as f64 * lambda_min / (len * len);
    Ok(SqueezingResult {
        xi2,
        xi2_db: to_db(xi2),
        axis,
        axis_angle: angle,
        frame,
        bloch,
        t: 0.0,
        tau: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coherent(n: usize) -> CollectiveMoments {
        let nf = n as f64;
        let mut m = CollectiveMoments::default();
        m.first = [nf / 2.0, 0.0, 0.0];
        m.second[0][0] = nf * nf / 4.0;
        m.second[1][1] = nf / 4.0;
        m.second[2][2] = nf / 4.0;
        m
    }

    #[test]
    fn coherent_state_is_unsqueezed() {
        let r = squeezing_from_moments(&coherent(10), 10).unwrap();
        assert!((r.xi2 - 1.0).abs() < 1e-14);
        assert!(r.xi2_db.abs() < 1e-12);
        assert!(dot(r.axis, r.bloch).abs() < 1e-12);
    }

    #[test]
    fn zero_bloch_vector_is_an_error() {
        let mut m = coherent(4);
        m.first = [0.0; 3];
        assert!(matches!(
            squeezing_from_moments(&m, 4),
            Err(Error::SqueezingUndefined { .. })
        ));
    }

    #[test]
    fn frame_is_orthonormal() {
        for n in [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.6, 0.0, 0.8], [0.48, 0.6, 0.64]] {
            let [e1, e2] = transverse_frame(n);
            assert!(dot(e1, n).abs() < 1e-15);
            assert!(dot(e2, n).abs() < 1e-15);
            assert!(dot(e1, e2).abs() < 1e-15);
            assert!((dot(e1, e1) - 1.0).abs() < 1e-15);
            assert!((dot(e2, e2) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn squeezed_along_tilted_axis() {
        // Bloch vector along x; variance 0.5 along (y+z)/sqrt2, 2 along (y-z)/sqrt2.
        let mut m = CollectiveMoments::default();
        m.first = [2.0, 0.0, 0.0];
        let (a, b) = (0.5, 2.0);
        m.second[0][0] = 4.0;
        m.second[1][1] = 0.5 * (a + b);
        m.second[2][2] = 0.5 * (a + b);
        m.second[1][2] = 0.5 * (a - b);
        m.second[2][1] = 0.5 * (a - b);
        let r = squeezing_from_moments(&m, 4).unwrap();
        assert!((r.xi2 - 4.0 * 0.5 / 4.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((r.axis[1].abs() - s).abs() < 1e-12);
        assert!((r.axis[2].abs() - s).abs() < 1e-12);
        assert!(r.axis[1] * r.axis[2] > 0.0);
    }

    #[test]
    fn db_sign_tracks_xi2() {
        assert!(to_db(0.5) < 0.0);
        assert!(to_db(2.0) > 0.0);
        assert_eq!(to_db(1.0), 0.0);
    }
}
