//! Figures of merit extracted from time series: optimal squeezing,
//! finite-size scaling exponent and entanglement growth rate.

use crate::error::{Error, Result};

/// Default upper edge of the entropy-rate fit window, in scaled time.
pub const DEFAULT_ENTROPY_WINDOW: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalSqueezing {
    pub t_opt: f64,
    pub xi2_min: f64,
    /// False when the grid minimum is the final sample, i.e. the series has
    /// not turned around yet.
    pub reached: bool,
    pub index: usize,
}

/// Grid minimum of `(t, xi2)` samples, refined by the parabola through the
/// bracketing triple.
pub fn optimal_squeezing(series: &[(f64, f64)]) -> Result<OptimalSqueezing> {
    if series.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: series.len(),
        });
    }
    let mut k = 0;
    for (i, &(_, v)) in series.iter().enumerate() {
        if v < series[k].1 {
            k = i;
        }
    }
    let last = series.len() - 1;
    if k == last || k == 0 {
        return Ok(OptimalSqueezing {
            t_opt: series[k].0,
            xi2_min: series[k].1,
            reached: k != last,
            index: k,
        });
    }
    let (x0, y0) = series[k - 1];
    let (x1, y1) = series[k];
    let (x2, y2) = series[k + 1];
    // Newton divided differences of the interpolating parabola.
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curv = (d12 - d01) / (x2 - x0);
    if !(curv > 0.0) {
        return Ok(OptimalSqueezing {
            t_opt: x1,
            xi2_min: y1,
            reached: true,
            index: k,
        });
    }
    // p(x) = y0 + d01 (x - x0) + curv (x - x0)(x - x1)
    let t_opt = 0.5 * (x0 + x1) - d01 / (2.0 * curv);
    let xi2_min = y0 + d01 * (t_opt - x0) + curv * (t_opt - x0) * (t_opt - x1);
    Ok(OptimalSqueezing {
        t_opt,
        xi2_min,
        reached: true,
        index: k,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub nu: f64,
    pub intercept: f64,
    /// Standard error of `nu`; only reported with three or more points.
    pub stderr: Option<f64>,
    pub max_residual: f64,
    pub points: Vec<(f64, f64)>,
}

/// Least-squares line through `(ln N, ln xi2)`; the slope is `nu`.
pub fn scaling_fit(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: points.len(),
        });
    }
    for (index, &(n, xi2)) in points.iter().enumerate() {
        if !(xi2 > 0.0) {
            return Err(Error::NonPositive { index, value: xi2 });
        }
        if !(n > 0.0) {
            return Err(Error::NonPositive { index, value: n });
        }
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / m;
    let ym = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: 1,
        });
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let nu = sxy / sxx;
    let intercept = ym - nu * xm;
    let residuals: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - intercept - nu * x).collect();
    let max_residual = residuals.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    let stderr = (points.len() >= 3).then(|| {
        let ssr: f64 = residuals.iter().map(|r| r * r).sum();
        (ssr / (m - 2.0) / sxx).sqrt()
    });
    Ok(ScalingFit {
        nu,
        intercept,
        stderr,
        max_residual,
        points: points.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyRate {
    pub rate: f64,
    pub n_points: usize,
    pub window: f64,
}

/// Through-origin least-squares slope of `S_vN(tau)` over `tau <= window`.
pub fn entropy_rate(series: &[(f64, f64)], window: f64) -> Result<EntropyRate> {
    // Grid points generated as k * step can overshoot the edge by an ulp.
    let edge = window + 1e-12 * window.abs().max(1.0);
    let inside: Vec<&(f64, f64)> = series.iter().filter(|(tau, _)| *tau <= edge).collect();
    let informative = inside.iter().filter(|(tau, _)| *tau != 0.0).count();
    if inside.len() < 3 || informative == 0 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: inside.len(),
        });
    }
    let sts: f64 = inside.iter().map(|(t, s)| t * s).sum();
    let stt: f64 = inside.iter().map(|(t, _)| t * t).sum();
    Ok(EntropyRate {
        rate: sts / stt,
        n_points: inside.len(),
        window,
    })
}
