//! Fixed-substep RK4 for the classical precession equations, with a
//! conservation audit at every output time.

use crate::error::{Error, Result};
use crate::lattice::CouplingMatrix;
use crate::model::{classical_drift_into, classical_energy, energy_scale, ClassicalConfig, ModelParams};
use crate::timegrid::validate_times;

/// Drift budgets and step-size policy for one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    /// Upper bound on the RK4 step, in units of `1/J_perp`.
    pub dt_max: f64,
    /// Relative energy drift budget, measured against
    /// `max(|E0|, energy_scale)`.
    pub energy_tol: f64,
    /// Absolute per-site spin-length drift budget.
    pub norm_tol: f64,
    /// Absolute drift budget of `sum_i S_z,i`.
    pub sz_tol: f64,
    /// Number of step halvings attempted before giving up.
    pub max_refinements: u32,
    /// Hard cap on RK4 steps per trajectory.
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            dt_max: 0.02,
            energy_tol: 1e-8,
            norm_tol: 1e-8,
            sz_tol: 1e-10,
            max_refinements: 4,
            max_steps: 1 << 24,
        }
    }
}

impl StepControl {
    /// Initial step guess `0.1 / omega`, with `omega` the largest local
    /// precession rate a spin of length `sqrt(3)/2` can see.
    pub fn for_model(cm: &CouplingMatrix, p: &ModelParams) -> Self {
        let aniso = 1f64.max((1.0 + p.delta).abs());
        let omega = (0..cm.n_sites())
            .map(|i| cm.row(i).iter().sum::<f64>())
            .fold(0.0f64, f64::max)
            * aniso
            * 0.75f64.sqrt();
        Self {
            dt_max: (0.1 / omega.max(1e-12)).min(0.05),
            ..Self::default()
        }
    }
}

/// Conservation diagnostics of one integrated trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DriftReport {
    pub energy: f64,
    pub norm: f64,
    pub sz: f64,
    pub dt: f64,
    pub steps: usize,
}

impl DriftReport {
    fn within(&self, c: &StepControl) -> bool {
        self.energy <= c.energy_tol && self.norm <= c.norm_tol && self.sz <= c.sz_tol
    }
}

pub(crate) struct Rk4 {
    k1: ClassicalConfig,
    k2: ClassicalConfig,
    k3: ClassicalConfig,
    k4: ClassicalConfig,
    tmp: ClassicalConfig,
}

fn axpy_into(out: &mut ClassicalConfig, base: &ClassicalConfig, h: f64, k: &ClassicalConfig) {
    for (o, (b, d)) in out.x.iter_mut().zip(base.x.iter().zip(&k.x)) {
        *o = b + h * d;
    }
    for (o, (b, d)) in out.y.iter_mut().zip(base.y.iter().zip(&k.y)) {
        *o = b + h * d;
    }
    for (o, (b, d)) in out.z.iter_mut().zip(base.z.iter().zip(&k.z)) {
        *o = b + h * d;
    }
}

impl Rk4 {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            k1: ClassicalConfig::zeros(n),
            k2: ClassicalConfig::zeros(n),
            k3: ClassicalConfig::zeros(n),
            k4: ClassicalConfig::zeros(n),
            tmp: ClassicalConfig::zeros(n),
        }
    }

    pub(crate) fn step(&mut self, s: &mut ClassicalConfig, cm: &CouplingMatrix, p: &ModelParams, h: f64) {
        classical_drift_into(s, cm, p, &mut self.k1);
        axpy_into(&mut self.tmp, s, 0.5 * h, &self.k1);
        classical_drift_into(&self.tmp, cm, p, &mut self.k2);
        axpy_into(&mut self.tmp, s, 0.5 * h, &self.k2);
        classical_drift_into(&self.tmp, cm, p, &mut self.k3);
        axpy_into(&mut self.tmp, s, h, &self.k3);
        classical_drift_into(&self.tmp, cm, p, &mut self.k4);
        let w = h / 6.0;
        let comps = [
            (&mut s.x, &self.k1.x, &self.k2.x, &self.k3.x, &self.k4.x),
            (&mut s.y, &self.k1.y, &self.k2.y, &self.k3.y, &self.k4.y),
            (&mut s.z, &self.k1.z, &self.k2.z, &self.k3.z, &self.k4.z),
        ];
        for (v, a, b, c, d) in comps {
            for i in 0..v.len() {
                v[i] += w * (a[i] + 2.0 * (b[i] + c[i]) + d[i]);
            }
        }
    }
}

/// Integrate with a fixed maximal step `dt`, calling `visit(k, cfg)` at
/// every output time (including `t = 0`). Returns drift diagnostics.
pub(crate) fn integrate_fixed<F>(
    initial: &ClassicalConfig,
    cm: &CouplingMatrix,
    p: &ModelParams,
    times: &[f64],
    dt: f64,
    max_steps: usize,
    mut visit: F,
) -> Option<DriftReport>
where
    F: FnMut(usize, &ClassicalConfig, f64),
{
    let n = initial.n_sites();
    let mut s = initial.clone();
    let mut rk = Rk4::new(n);
    let e0 = classical_energy(&s, cm, p);
    let escale = e0.abs().max(energy_scale(cm, p));
    let norms0: Vec<f64> = (0..n).map(|i| initial.norm_sq(i).sqrt()).collect();
    let sz0: f64 = initial.z.iter().sum();
    let mut report = DriftReport {
        dt,
        ..DriftReport::default()
    };

    visit(0, &s, e0);
    for k in 1..times.len() {
        let span = times[k] - times[k - 1];
        let sub = (span / dt).ceil().max(1.0) as usize;
        report.steps += sub;
        if report.steps > max_steps {
            return None;
        }
        let h = span / sub as f64;
        for _ in 0..sub {
            rk.step(&mut s, cm, p, h);
        }
        let e = classical_energy(&s, cm, p);
        report.energy = report.energy.max((e - e0).abs() / escale);
        for (i, n0) in norms0.iter().enumerate() {
            report.norm = report.norm.max((s.norm_sq(i).sqrt() - n0).abs());
        }
        let sz: f64 = s.z.iter().sum();
        report.sz = report.sz.max((sz - sz0).abs());
        if !report.energy.is_finite() {
            return None;
        }
        visit(k, &s, e);
    }
    Some(report)
}

/// Step-refining driver shared by [`integrate_trajectory`] and the
/// ensemble: retries with halved steps until the drift budgets hold.
pub(crate) fn integrate_audited<F>(
    initial: &ClassicalConfig,
    cm: &CouplingMatrix,
    p: &ModelParams,
    times: &[f64],
    control: &StepControl,
    trajectory: u64,
    mut visit: F,
) -> Result<DriftReport>
where
    F: FnMut(usize, &ClassicalConfig, f64),
{
    let mut dt = control.dt_max;
    let mut last = DriftReport::default();
    for _ in 0..=control.max_refinements {
        match integrate_fixed(initial, cm, p, times, dt, control.max_steps, &mut visit) {
            Some(report) if report.within(control) => return Ok(report),
            Some(report) => last = report,
            None => break,
        }
        dt *= 0.5;
    }
    Err(Error::StepControl {
        trajectory,
        substeps: (1.0 / dt).ceil() as usize,
        energy_drift: last.energy,
        norm_drift: last.norm,
        sz_drift: last.sz,
    })
}

/// Classical trajectory sampled at `times`, which must start at 0 and
/// increase strictly.
pub fn integrate_trajectory(
    initial: &ClassicalConfig,
    cm: &CouplingMatrix,
    p: &ModelParams,
    times: &[f64],
    control: &StepControl,
) -> Result<(Vec<ClassicalConfig>, DriftReport)> {
    validate_times(times)?;
    let mut out = Vec::with_capacity(times.len());
    let report = integrate_audited(initial, cm, p, times, control, 0, |k, s, _| {
        out.truncate(k);
        out.push(s.clone());
    })?;
    Ok((out, report))
}
