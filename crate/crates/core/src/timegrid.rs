//! Uniform time grids, in physical units or in the scaled time
//! `tau = t * J_bar * |Delta|` (`tau = t * J_bar` when `Delta = 0`).

use crate::error::{Error, Result};

/// Rate converting physical time to scaled time.
pub fn time_scale(j_bar: f64, delta: f64) -> f64 {
    if delta == 0.0 {
        j_bar
    } else {
        j_bar * delta.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    t: Vec<f64>,
    tau: Vec<f64>,
    scale: f64,
}

impl TimeGrid {
    /// `n_points` uniformly spaced points from 0 to `max`. With `scaled`,
    /// `max` is a scaled time; otherwise it is in units of `1/J_perp`.
    pub fn uniform(max: f64, n_points: usize, scaled: bool, scale: f64) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::InvalidTimeGrid("need at least two points"));
        }
        if !(max.is_finite() && max > 0.0) {
            return Err(Error::InvalidTimeGrid("maximum time must be finite and positive"));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidTimeGrid("time scale must be finite and positive"));
        }
        let step = max / (n_points - 1) as f64;
        let raw: Vec<f64> = (0..n_points).map(|k| k as f64 * step).collect();
        Ok(if scaled {
            Self {
                t: raw.iter().map(|tau| tau / scale).collect(),
                tau: raw,
                scale,
            }
        } else {
            Self {
                tau: raw.iter().map(|t| t * scale).collect(),
                t: raw,
                scale,
            }
        })
    }

    /// Explicit physical times; must start at 0 and increase strictly.
    pub fn from_times(t: Vec<f64>, scale: f64) -> Result<Self> {
        validate_times(&t)?;
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidTimeGrid("time scale must be finite and positive"));
        }
        let tau = t.iter().map(|t| t * scale).collect();
        Ok(Self { t, tau, scale })
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn scaled_times(&self) -> &[f64] {
        &self.tau
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

pub(crate) fn validate_times(t: &[f64]) -> Result<()> {
    if t.is_empty() {
        return Err(Error::InvalidTimeGrid("empty"));
    }
    if t[0] != 0.0 {
        return Err(Error::InvalidTimeGrid("must start at 0"));
    }
    if t.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidTimeGrid("non-finite time"));
    }
    if t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidTimeGrid("must be strictly increasing"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_grid_converts() {
        let g = TimeGrid::uniform(2.0, 5, true, 0.5).unwrap();
        assert_eq!(g.scaled_times(), &[0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(g.times(), &[0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn delta_zero_fallback() {
        assert_eq!(time_scale(0.3, 0.0), 0.3);
        assert!((time_scale(0.3, -1.8) - 0.54).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::uniform(1.0, 1, true, 1.0).is_err());
        assert!(TimeGrid::uniform(-1.0, 3, true, 1.0).is_err());
        assert!(TimeGrid::from_times(vec![0.1, 0.2], 1.0).is_err());
        assert!(TimeGrid::from_times(vec![0.0, 0.2, 0.2], 1.0).is_err());
        assert!(TimeGrid::from_times(vec![0.0, 0.2, 0.3], 1.0).is_ok());
    }
}
