//! Trajectory ensembles and their collective-spin moments.
//!
//! Trajectories are integrated in parallel in fixed-size chunks. Each chunk
//! fills its own [`MomentAccumulator`]; chunk accumulators are combined by a
//! pairwise tree in chunk order, so the floating-point summation order (and
//! therefore the output) does not depend on the worker count.

use rayon::prelude::*;

use super::integrator::{integrate_audited, integrate_fixed, DriftReport, StepControl};
use super::sampler::{sample_initial, SamplerPolicy};
use crate::error::{Error, Result};
use crate::lattice::CouplingMatrix;
use crate::model::{ClassicalConfig, ModelParams};
use crate::observables::{squeezing_from_moments, CollectiveMoments, SqueezingResult};
use crate::timegrid::TimeGrid;

/// Trajectories per parallel work unit.
pub const CHUNK: usize = 64;
/// Chunks integrated between two merges into the running total.
const WINDOW: usize = 64;
/// Jackknife blocks; trajectory `k` lands in block `k % JACKKNIFE_BLOCKS`.
pub const JACKKNIFE_BLOCKS: usize = 20;
/// Pilot trajectories used to calibrate the step before the full run.
const PILOT: usize = 4;

/// Sums over trajectories at one time point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentSums {
    pub count: f64,
    pub s: [f64; 3],
    /// `S_x S_x, S_x S_y, S_x S_z, S_y S_y, S_y S_z, S_z S_z`
    pub ss: [f64; 6],
    pub energy: f64,
    pub energy_sq: f64,
}

const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

impl MomentSums {
    fn add_sample(&mut self, s: [f64; 3], energy: f64) {
        self.count += 1.0;
        for mu in 0..3 {
            self.s[mu] += s[mu];
        }
        for (slot, (a, b)) in self.ss.iter_mut().zip(PAIRS) {
            *slot += s[a] * s[b];
        }
        self.energy += energy;
        self.energy_sq += energy * energy;
    }

    fn add(&mut self, other: &MomentSums) {
        self.count += other.count;
        for mu in 0..3 {
            self.s[mu] += other.s[mu];
        }
        for k in 0..6 {
            self.ss[k] += other.ss[k];
        }
        self.energy += other.energy;
        self.energy_sq += other.energy_sq;
    }

    fn sub(&self, other: &MomentSums) -> MomentSums {
        let mut out = *self;
        out.count -= other.count;
        for mu in 0..3 {
            out.s[mu] -= other.s[mu];
        }
        for k in 0..6 {
            out.ss[k] -= other.ss[k];
        }
        out.energy -= other.energy;
        out.energy_sq -= other.energy_sq;
        out
    }

    /// Ensemble averages. On-site terms enter through the trajectory-wise
    /// products `S_mu S_nu` of the collective vector.
    pub fn moments(&self) -> CollectiveMoments {
        let inv = 1.0 / self.count;
        let mut m = CollectiveMoments::default();
        for mu in 0..3 {
            m.first[mu] = self.s[mu] * inv;
        }
        for (v, (a, b)) in self.ss.iter().zip(PAIRS) {
            m.second[a][b] = v * inv;
            m.second[b][a] = v * inv;
        }
        m
    }

    pub fn mean_energy(&self) -> f64 {
        self.energy / self.count
    }
}

/// Per-time, per-block trajectory sums.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentAccumulator {
    n_times: usize,
    /// `blocks[b][k]`
    blocks: Vec<Vec<MomentSums>>,
}

impl MomentAccumulator {
    pub fn new(n_times: usize) -> Self {
        Self {
            n_times,
            blocks: vec![vec![MomentSums::default(); n_times]; JACKKNIFE_BLOCKS],
        }
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    /// Record one trajectory's collective vectors and energies.
    pub fn push(&mut self, trajectory: u64, record: &[([f64; 3], f64)]) {
        let block = &mut self.blocks[(trajectory % JACKKNIFE_BLOCKS as u64) as usize];
        for (slot, &(s, e)) in block.iter_mut().zip(record) {
            slot.add_sample(s, e);
        }
    }

    pub fn merge(&mut self, other: &MomentAccumulator) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            for (x, y) in a.iter_mut().zip(b) {
                x.add(y);
            }
        }
    }

    /// Sums over all blocks at time index `k`.
    pub fn total(&self, k: usize) -> MomentSums {
        let mut out = MomentSums::default();
        for b in &self.blocks {
            out.add(&b[k]);
        }
        out
    }

    pub fn n_traj(&self) -> usize {
        if self.n_times == 0 {
            0
        } else {
            self.total(0).count as usize
        }
    }

    /// Delete-one-block jackknife estimate of `(value, standard error)` of
    /// a statistic computed from the sums at time index `k`.
    pub fn jackknife<F>(&self, k: usize, f: F) -> (f64, f64)
    where
        F: Fn(&MomentSums) -> f64,
    {
        self.jackknife_span(&[k], |s| f(&s[0]))
    }

    /// Jackknife of a statistic that combines several time indices, such
    /// as a finite difference. Blocks are deleted jointly at every index.
    pub fn jackknife_span<F>(&self, ks: &[usize], f: F) -> (f64, f64)
    where
        F: Fn(&[MomentSums]) -> f64,
    {
        let totals: Vec<MomentSums> = ks.iter().map(|&k| self.total(k)).collect();
        let value = f(&totals);
        let leave_out: Vec<f64> = self
            .blocks
            .iter()
            .filter(|b| b[ks[0]].count > 0.0)
            .map(|b| {
                let reduced: Vec<MomentSums> = ks.iter().zip(&totals).map(|(&k, t)| t.sub(&b[k])).collect();
                f(&reduced)
            })
            .collect();
        let g = leave_out.len();
        if g < 2 {
            return (value, f64::NAN);
        }
        let mean = leave_out.iter().sum::<f64>() / g as f64;
        let var = leave_out.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * (g as f64 - 1.0) / g as f64;
        (value, var.sqrt())
    }

    fn reduce_tree(mut parts: Vec<MomentAccumulator>, n_times: usize) -> MomentAccumulator {
        if parts.is_empty() {
            return MomentAccumulator::new(n_times);
        }
        while parts.len() > 1 {
            let mut next = Vec::with_capacity(parts.len().div_ceil(2));
            let mut it = parts.into_iter();
            while let Some(mut a) = it.next() {
                if let Some(b) = it.next() {
                    a.merge(&b);
                }
                next.push(a);
            }
            parts = next;
        }
        parts.pop().unwrap()
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub grid: TimeGrid,
    pub n_sites: usize,
    pub policy: SamplerPolicy,
    pub accumulator: MomentAccumulator,
    /// RK4 step selected by the pilot calibration.
    pub dt: f64,
    /// Largest drifts over all accepted trajectories.
    pub max_drift: DriftReport,
    pub aborted: Vec<(u64, Error)>,
}

impl EnsembleResult {
    pub fn moments(&self, k: usize) -> CollectiveMoments {
        self.accumulator.total(k).moments()
    }

    pub fn squeezing(&self, k: usize) -> Result<SqueezingResult> {
        Ok(squeezing_from_moments(&self.moments(k), self.n_sites)?
            .at(self.grid.times()[k], self.grid.scaled_times()[k]))
    }

    /// Jackknife standard error of `xi^2` at time index `k`.
    pub fn xi2_stderr(&self, k: usize) -> f64 {
        let n = self.n_sites;
        self.accumulator
            .jackknife(k, |s| squeezing_from_moments(&s.moments(), n).map_or(f64::NAN, |r| r.xi2))
            .1
    }

    pub fn n_accepted(&self) -> usize {
        self.accumulator.n_traj()
    }
}

fn collective_record(times: usize) -> Vec<([f64; 3], f64)> {
    vec![([0.0; 3], 0.0); times]
}

/// Largest step (halving from `control.dt_max`) for which the pilot
/// trajectories meet a tenth of each drift budget.
pub fn calibrate_step(
    cm: &CouplingMatrix,
    p: &ModelParams,
    times: &[f64],
    policy: &SamplerPolicy,
    control: &StepControl,
) -> f64 {
    let n = cm.n_sites();
    let pilots = PILOT.min(policy.n_traj.max(1));
    let mut dt = control.dt_max;
    for _ in 0..=control.max_refinements {
        let ok = (0..pilots as u64).all(|k| {
            let cfg = sample_initial(n, k, policy);
            match integrate_fixed(&cfg, cm, p, times, dt, control.max_steps, |_, _, _| {}) {
                Some(r) => {
                    r.energy <= 0.1 * control.energy_tol
                        && r.norm <= 0.1 * control.norm_tol
                        && r.sz <= 0.1 * control.sz_tol
                }
                None => false,
            }
        });
        if ok {
            return dt;
        }
        dt *= 0.5;
    }
    dt
}

/// Integrate `policy.n_traj` sampled trajectories on `grid` and accumulate
/// collective moments at every grid time.
pub fn run_ensemble(
    cm: &CouplingMatrix,
    p: &ModelParams,
    grid: &TimeGrid,
    policy: &SamplerPolicy,
    control: &StepControl,
) -> Result<EnsembleResult> {
    if policy.n_traj == 0 {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let n = cm.n_sites();
    let times = grid.times();
    let nt = times.len();
    let dt = calibrate_step(cm, p, times, policy, control);
    let run_control = StepControl { dt_max: dt, ..*control };

    let n_chunks = policy.n_traj.div_ceil(CHUNK);
    let mut total = MomentAccumulator::new(nt);
    let mut aborted: Vec<(u64, Error)> = Vec::new();
    let mut max_drift = DriftReport::default();

    for window_start in (0..n_chunks).step_by(WINDOW) {
        let window_end = (window_start + WINDOW).min(n_chunks);
        let parts: Vec<(MomentAccumulator, Vec<(u64, Error)>, DriftReport)> = (window_start..window_end)
            .into_par_iter()
            .map(|chunk| {
                let mut acc = MomentAccumulator::new(nt);
                let mut failures = Vec::new();
                let mut worst = DriftReport::default();
                let mut record = collective_record(nt);
                let lo = chunk * CHUNK;
                let hi = ((chunk + 1) * CHUNK).min(policy.n_traj);
                for k in lo as u64..hi as u64 {
                    let cfg = sample_initial(n, k, policy);
                    let outcome = integrate_audited(&cfg, cm, p, times, &run_control, k, |idx, s: &ClassicalConfig, e| {
                        record[idx] = (s.total(), e);
                    });
                    match outcome {
                        Ok(report) => {
                            acc.push(k, &record);
                            worst.energy = worst.energy.max(report.energy);
                            worst.norm = worst.norm.max(report.norm);
                            worst.sz = worst.sz.max(report.sz);
                            worst.dt = if worst.dt == 0.0 { report.dt } else { worst.dt.min(report.dt) };
                            worst.steps = worst.steps.max(report.steps);
                        }
                        Err(e) => failures.push((k, e)),
                    }
                }
                (acc, failures, worst)
            })
            .collect();

        let mut accs = Vec::with_capacity(parts.len());
        for (acc, failures, worst) in parts {
            accs.push(acc);
            aborted.extend(failures);
            max_drift.energy = max_drift.energy.max(worst.energy);
            max_drift.norm = max_drift.norm.max(worst.norm);
            max_drift.sz = max_drift.sz.max(worst.sz);
            max_drift.steps = max_drift.steps.max(worst.steps);
            if worst.dt > 0.0 {
                max_drift.dt = if max_drift.dt == 0.0 { worst.dt } else { max_drift.dt.min(worst.dt) };
            }
        }
        total.merge(&MomentAccumulator::reduce_tree(accs, nt));
    }

    let limit = policy.n_traj / 1000;
    if aborted.len() > limit {
        return Err(Error::TooManyAborts {
            aborted: aborted.len(),
            total: policy.n_traj,
            limit,
        });
    }
    Ok(EnsembleResult {
        grid: grid.clone(),
        n_sites: n,
        policy: *policy,
        accumulator: total,
        dt,
        max_drift,
        aborted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, coupling_matrix, LatticeSpec};
    use rand::{Rng, SeedableRng};

    fn setup(l: usize, alpha: f64, delta: f64) -> (CouplingMatrix, ModelParams) {
        let cm = coupling_matrix(&build_lattice(LatticeSpec::square(l)).unwrap(), 1.0, alpha).unwrap();
        (cm, ModelParams::new(1.0, delta, alpha).unwrap())
    }

    #[test]
    fn sz_squared_is_constant() {
        let (cm, p) = setup(2, 3.0, -1.8);
        let grid = TimeGrid::uniform(1.0, 11, true, cm.j_bar() * 1.8).unwrap();
        let policy = SamplerPolicy::new(3, 500);
        let res = run_ensemble(&cm, &p, &grid, &policy, &StepControl::for_model(&cm, &p)).unwrap();
        let z2_0 = res.moments(0).second[2][2];
        let z_0 = res.moments(0).first[2];
        for k in 0..grid.len() {
            assert!((res.moments(k).second[2][2] - z2_0).abs() < 1e-10);
            assert!((res.moments(k).first[2] - z_0).abs() < 1e-12);
        }
        assert!(res.max_drift.energy <= 1e-8);
        assert!(res.aborted.is_empty());
    }

    #[test]
    fn jackknife_of_mean_matches_standard_error() {
        // For a plain mean the delete-one-block jackknife reduces to the
        // between-block standard error; compare against a direct estimate.
        let mut acc = MomentAccumulator::new(1);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let values: Vec<f64> = (0..2000).map(|_| rng.random::<f64>() - 0.5).collect();
        for (k, v) in values.iter().enumerate() {
            acc.push(k as u64, &[([0.0, 0.0, *v], 0.0)]);
        }
        let (mean, se) = acc.jackknife(0, |s| s.s[2] / s.count);
        let direct_mean = values.iter().sum::<f64>() / 2000.0;
        let var = values.iter().map(|v| (v - direct_mean).powi(2)).sum::<f64>() / 1999.0;
        assert!((mean - direct_mean).abs() < 1e-14);
        let direct_se = (var / 2000.0).sqrt();
        assert!((se / direct_se - 1.0).abs() < 0.5, "{se} vs {direct_se}");
    }

    #[test]
    fn tree_reduction_handles_odd_counts() {
        let mut parts = Vec::new();
        for k in 0..5u64 {
            let mut a = MomentAccumulator::new(1);
            a.push(k, &[([1.0, 0.0, 0.0], 0.0)]);
            parts.push(a);
        }
        let r = MomentAccumulator::reduce_tree(parts, 1);
        assert_eq!(r.n_traj(), 5);
    }
}
