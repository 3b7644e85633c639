//! Experiment execution: resolve, compute, then write everything at once.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde_json::{json, Value};

use xxzsim::analysis::{entropy_rate, optimal_squeezing, scaling_fit, DEFAULT_ENTROPY_WINDOW};
use xxzsim::dtwa::ensemble::{CHUNK, JACKKNIFE_BLOCKS};
use xxzsim::dtwa::{run_ensemble, SamplerPolicy, StepControl};
use xxzsim::exact::{
    build_initial_state, collective_moments, entanglement_entropy, evolve_state, oat_reference, oat_tstar,
    KrylovOptions, SpinHamiltonian, ThermalOptions, ThermalSpectrum, ED_MAX_SITES, THERMAL_MAX_SITES,
};
use xxzsim::lattice::mean_coupling_ratio;
use xxzsim::model::hamiltonian_terms;
use xxzsim::observables::{to_db, total_spin_sq_initial, transverse_spin_sq_initial};
use xxzsim::{build_lattice, coupling_matrix, time_scale, CollectiveMoments, CouplingMatrix, LatticeSpec, ModelParams};

use crate::config::{resolve, Engine, ExperimentConfig, Kind, Model, OutputConfig, Plan, SamplerConfig, TimeSpec};
use crate::output::{self, csv_bytes, int, num, opt, DynamicsRow};

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Computed output, not yet on disk.
#[derive(Debug, Clone)]
pub struct Artifacts {
    /// `(file name suffix, contents)`; the first entry is the primary CSV.
    pub files: Vec<(String, Vec<u8>)>,
    pub results: Value,
    pub caps_hit: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub wall_time: f64,
}

pub fn apply_overrides(cfg: &ExperimentConfig, ov: &Overrides) -> ExperimentConfig {
    let mut cfg = cfg.clone();
    if let Some(seed) = ov.seed {
        let s = cfg.sampler.get_or_insert_with(SamplerConfig::default);
        s.master_seed = Some(seed);
    }
    if let Some(out) = &ov.out {
        let o = cfg.output.get_or_insert_with(OutputConfig::default);
        o.dir = Some(out.clone());
    }
    cfg
}

/// Validate, compute, and write `<dir>/<name>.csv` (plus any secondary
/// CSVs) and `<dir>/<name>.json`. Nothing is written unless the whole run
/// succeeds.
pub fn run(kind: Kind, cfg: &ExperimentConfig, ov: &Overrides) -> Result<RunOutcome> {
    let cfg = apply_overrides(cfg, ov);
    let (plan, echo) = resolve(kind, &cfg)?;
    let out = cfg.output.clone().unwrap_or_default();
    let dir = out.dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let name = out.name.clone().unwrap_or_else(|| kind.name().to_string());
    if name.is_empty() || name.contains(['/', '\\']) {
        return Err(crate::config::ConfigError::Field {
            field: "output.name",
            message: format!("`{name}` is not a plain file stem"),
        }
        .into());
    }

    let start = Instant::now();
    let artifacts = execute(&plan)?;
    let wall_time = start.elapsed().as_secs_f64();

    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::new();
    for (suffix, bytes) in &artifacts.files {
        let path = dir.join(format!("{name}{suffix}"));
        output::write_atomic(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        files.push(path);
    }
    let manifest = manifest_json(kind, &echo, &plan, &artifacts, &files, wall_time);
    let manifest_path = dir.join(format!("{name}.json"));
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    output::write_atomic(&manifest_path, text.as_bytes()).with_context(|| format!("writing {}", manifest_path.display()))?;
    Ok(RunOutcome {
        files,
        manifest: manifest_path,
        wall_time,
    })
}

/// Re-run the config recorded in a manifest, writing into `out`.
pub fn replay(manifest: &Path, out: &Path) -> Result<RunOutcome> {
    let text = std::fs::read_to_string(manifest).with_context(|| format!("reading {}", manifest.display()))?;
    let m: Value = serde_json::from_str(&text)?;
    let kind: Kind = serde_json::from_value(m["kind"].clone()).context("manifest `kind`")?;
    let cfg: ExperimentConfig = serde_json::from_value(m["config"].clone()).context("manifest `config`")?;
    run(
        kind,
        &cfg,
        &Overrides {
            out: Some(out.to_path_buf()),
            seed: None,
        },
    )
}

fn manifest_json(kind: Kind, echo: &ExperimentConfig, plan: &Plan, a: &Artifacts, files: &[PathBuf], wall: f64) -> Value {
    let seed = match plan {
        Plan::Dynamics { engine: Engine::Dtwa, sampler, .. } => Some(sampler.master_seed),
        Plan::Sweep { engine: Engine::Dtwa, sampler, .. } => Some(sampler.master_seed),
        Plan::FitScaling { engine: Engine::Dtwa, sampler, .. } => Some(sampler.master_seed),
        Plan::Thermal { options, .. } => Some(options.seed),
        _ => None,
    };
    let outputs: Vec<String> = files
        .iter()
        .map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default())
        .collect();
    json!({
        "kind": kind,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "threads": rayon::current_num_threads(),
        "wall_time_s": wall,
        "config": echo,
        "outputs": outputs,
        "caps": {
            "ed_max_sites": ED_MAX_SITES,
            "thermal_max_sites": THERMAL_MAX_SITES,
        },
        "caps_hit": a.caps_hit,
        "constants": constants(),
        "results": a.results,
    })
}

fn constants() -> Value {
    let step = StepControl::default();
    let krylov = KrylovOptions::default();
    let thermal = ThermalOptions::default();
    json!({
        "db_convention": "xi2_db = 10 log10(xi2)",
        "squeezing": "xi2 = N min_{n perp <S>} Var(S_n) / |<S>|^2",
        "time_scale": "tau = t J_bar |Delta|, tau = t J_bar when Delta = 0",
        "S2_norm": "<S^2> / ((N/2)(N/2 + 1))",
        "Sperp2_norm": "<S_x^2 + S_y^2> / (N(N + 1)/4)",
        "entropy": "von Neumann, natural log, left block = first ceil(N/2) sites in row-major order",
        "entropy_window": DEFAULT_ENTROPY_WINDOW,
        "entropy_fit": "least squares S = r tau through the origin over tau <= window",
        "optimal_squeezing": "grid minimum of xi2(tau) refined by the parabola through its neighbours",
        "scaling_fit": "unweighted least squares of ln xi2_min against ln N",
        "oat_chi": "chi = J_bar |Delta| / 2",
        "dtwa": {
            "initial_state": "S_x = 1/2, (S_y, S_z) uniform on {+-1/2}^2 per site",
            "rng": "ChaCha8 seeded by master_seed, stream = trajectory index",
            "chunk": CHUNK,
            "jackknife_blocks": JACKKNIFE_BLOCKS,
            "integrator": "RK4, fixed step from pilot calibration, halved on audit failure",
            "energy_tol": step.energy_tol,
            "norm_tol": step.norm_tol,
            "sz_tol": step.sz_tol,
            "max_refinements": step.max_refinements,
            "max_steps": step.max_steps,
            "abort_limit": "n_traj / 1000",
        },
        "krylov": {
            "max_dim": krylov.max_dim,
            "tol": krylov.tol,
            "dt_initial": krylov.dt_initial,
        },
        "thermal": {
            "ensemble": "rho ~ exp(-beta H + mu S_z^2), lambda = mu / beta",
            "dense_max_dim": thermal.dense_max_dim,
            "ftlm_vectors": thermal.ftlm_vectors,
            "lanczos_steps": thermal.lanczos_steps,
        },
    })
}

struct Setup {
    cm: CouplingMatrix,
    p: ModelParams,
    n: usize,
}

fn setup(lattice: LatticeSpec, j_perp: f64, delta: f64, alpha: f64) -> Result<Setup> {
    let sites = build_lattice(lattice)?;
    let cm = coupling_matrix(&sites, j_perp, alpha)?;
    let p = ModelParams::new(j_perp, delta, alpha)?;
    Ok(Setup { n: sites.len(), cm, p })
}

struct Series {
    rows: Vec<DynamicsRow>,
    results: Value,
    caps_hit: Vec<String>,
}

fn row(engine: Engine, lattice: LatticeSpec, model: &Model, n: usize, t: f64, tau: f64, m: &CollectiveMoments) -> DynamicsRow {
    let sq = xxzsim::squeezing_from_moments(m, n).ok();
    DynamicsRow {
        engine: engine.name(),
        lx: lattice.lx,
        ly: lattice.ly,
        alpha: model.alpha,
        delta: model.delta,
        t,
        tau,
        xi2: sq.map(|s| s.xi2),
        xi2_db: sq.map(|s| s.xi2_db),
        s2_norm: m.total_spin_sq() / total_spin_sq_initial(n),
        sperp2_norm: m.transverse_spin_sq() / transverse_spin_sq_initial(n),
        bloch: m.first,
        entropy: None,
        n_traj: None,
        seed: None,
    }
}

fn dynamics(engine: Engine, lattice: LatticeSpec, model: &Model, time: &TimeSpec, sampler: &SamplerPolicy) -> Result<Series> {
    let s = setup(lattice, model.j_perp, model.delta, model.alpha)?;
    let scale = time_scale(s.cm.j_bar(), model.delta);
    let grid = time.grid(scale)?;
    let (t, tau) = (grid.times(), grid.scaled_times());
    let mut caps_hit = Vec::new();
    let (rows, results) = match engine {
        Engine::Dtwa => {
            let control = StepControl::for_model(&s.cm, &s.p);
            let res = run_ensemble(&s.cm, &s.p, &grid, sampler, &control)?;
            if !res.aborted.is_empty() {
                caps_hit.push(format!("dtwa: {} trajectories aborted by step control", res.aborted.len()));
            }
            let rows: Vec<DynamicsRow> = (0..grid.len())
                .map(|k| DynamicsRow {
                    n_traj: Some(sampler.n_traj),
                    seed: Some(sampler.master_seed),
                    ..row(engine, lattice, model, s.n, t[k], tau[k], &res.moments(k))
                })
                .collect();
            let stderr: Vec<Option<f64>> = (0..grid.len())
                .map(|k| Some(res.xi2_stderr(k)).filter(|v| v.is_finite()))
                .collect();
            let results = json!({
                "j_bar": s.cm.j_bar(),
                "time_scale": scale,
                "xi2_stderr": stderr,
                "dt": res.dt,
                "dt_max": control.dt_max,
                "n_accepted": res.n_accepted(),
                "n_aborted": res.aborted.len(),
                "max_energy_drift": res.max_drift.energy,
                "max_norm_drift": res.max_drift.norm,
                "max_sz_drift": res.max_drift.sz,
            });
            (rows, results)
        }
        Engine::Ed => {
            let h = SpinHamiltonian::from_terms(&hamiltonian_terms(&s.cm, &s.p), s.n)?;
            let psi0 = build_initial_state(s.n)?;
            let krylov = KrylovOptions::default();
            let path = evolve_state(&psi0, &h, t, &krylov)?;
            let e0 = h.expectation(psi0.amplitudes());
            let mut norm_drift = 0.0f64;
            let mut energy_drift = 0.0f64;
            let rows: Vec<DynamicsRow> = path
                .iter()
                .enumerate()
                .map(|(k, psi)| {
                    norm_drift = norm_drift.max((psi.norm() - 1.0).abs());
                    energy_drift = energy_drift.max((h.expectation(psi.amplitudes()) - e0).abs());
                    DynamicsRow {
                        entropy: Some(entanglement_entropy(psi)),
                        ..row(engine, lattice, model, s.n, t[k], tau[k], &collective_moments(psi))
                    }
                })
                .collect();
            let results = json!({
                "j_bar": s.cm.j_bar(),
                "time_scale": scale,
                "energy": e0,
                "max_norm_drift": norm_drift,
                "max_energy_drift": energy_drift,
            });
            (rows, results)
        }
        Engine::Oat => {
            let chi = s.cm.j_bar() * model.delta.abs() / 2.0;
            let pts = oat_reference(s.n, chi, t)?;
            let opt = oat_tstar(s.n, chi)?;
            let rows = pts
                .iter()
                .enumerate()
                .map(|(k, pt)| row(engine, lattice, model, s.n, t[k], tau[k], &pt.moments))
                .collect();
            let results = json!({
                "j_bar": s.cm.j_bar(),
                "time_scale": scale,
                "chi": chi,
                "t_star": opt.t_star,
                "tau_star": opt.t_star * scale,
                "xi2_min": opt.xi2_min,
                "xi2_min_db": to_db(opt.xi2_min),
            });
            (rows, results)
        }
    };
    Ok(Series { rows, results, caps_hit })
}

fn optimum(rows: &[DynamicsRow]) -> Option<xxzsim::analysis::OptimalSqueezing> {
    let series: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.xi2.map(|x| (r.tau, x))).collect();
    optimal_squeezing(&series).ok()
}

/// Run a validated plan without touching the filesystem.
pub fn execute(plan: &Plan) -> Result<Artifacts> {
    match plan {
        Plan::Dynamics {
            engine,
            lattice,
            model,
            time,
            sampler,
        } => {
            let s = dynamics(*engine, *lattice, model, time, sampler)?;
            let records: Vec<Vec<String>> = s.rows.iter().map(DynamicsRow::record).collect();
            Ok(Artifacts {
                files: vec![(".csv".into(), csv_bytes(&output::DYNAMICS_HEADER, &records))],
                results: s.results,
                caps_hit: s.caps_hit,
            })
        }
        Plan::EntropyRate {
            lattice,
            model,
            time,
            window,
        } => {
            let s = dynamics(Engine::Ed, *lattice, model, time, &SamplerPolicy::default())?;
            let series: Vec<(f64, f64)> = s.rows.iter().map(|r| (r.tau, r.entropy.unwrap_or(0.0))).collect();
            let rate = entropy_rate(&series, *window)?;
            let records: Vec<Vec<String>> = s.rows.iter().map(DynamicsRow::record).collect();
            let mut results = s.results;
            results["entropy_rate"] = json!({
                "rate": rate.rate,
                "n_points": rate.n_points,
                "window": rate.window,
                "units": "dS/dtau",
            });
            Ok(Artifacts {
                files: vec![(".csv".into(), csv_bytes(&output::DYNAMICS_HEADER, &records))],
                results,
                caps_hit: s.caps_hit,
            })
        }
        Plan::Sweep {
            engine,
            lattice,
            j_perp,
            deltas,
            alphas,
            time,
            sampler,
        } => {
            let mut records = Vec::new();
            let mut caps_hit = Vec::new();
            for &alpha in alphas {
                for &delta in deltas {
                    let model = Model {
                        j_perp: *j_perp,
                        delta,
                        alpha,
                    };
                    let s = dynamics(*engine, *lattice, &model, time, sampler)?;
                    caps_hit.extend(s.caps_hit.into_iter().map(|c| format!("alpha={alpha} Delta={delta}: {c}")));
                    let o = optimum(&s.rows);
                    let dtwa = *engine == Engine::Dtwa;
                    records.push(vec![
                        engine.name().to_string(),
                        int(lattice.lx),
                        int(lattice.ly),
                        num(alpha),
                        num(delta),
                        opt(o.map(|o| o.t_opt)),
                        opt(o.map(|o| o.xi2_min)),
                        opt(o.map(|o| to_db(o.xi2_min))),
                        o.map(|o| o.reached.to_string()).unwrap_or_default(),
                        if dtwa { int(sampler.n_traj) } else { String::new() },
                        if dtwa { int(sampler.master_seed) } else { String::new() },
                    ]);
                }
            }
            Ok(Artifacts {
                files: vec![(".csv".into(), csv_bytes(&output::SWEEP_HEADER, &records))],
                results: json!({ "points": records.len() }),
                caps_hit,
            })
        }
        Plan::FitScaling {
            engine,
            sizes,
            j_perp,
            deltas,
            alphas,
            time,
            sampler,
        } => fit_scaling(*engine, sizes, *j_perp, deltas, alphas, time.as_ref(), sampler),
        Plan::Thermal {
            lattice,
            model,
            energy,
            sz2,
            options,
        } => thermal(*lattice, model, *energy, *sz2, options),
        Plan::CouplingSweep { sizes, alphas, .. } => {
            let mut records = Vec::new();
            for &alpha in alphas {
                for &l in sizes {
                    records.push(vec![int(l), int(l * l), num(alpha), num(mean_coupling_ratio(l, alpha)?)]);
                }
            }
            Ok(Artifacts {
                files: vec![(".csv".into(), csv_bytes(&output::COUPLING_HEADER, &records))],
                results: json!({ "points": records.len() }),
                caps_hit: Vec::new(),
            })
        }
    }
}

fn fit_scaling(
    engine: Engine,
    sizes: &[usize],
    j_perp: f64,
    deltas: &[f64],
    alphas: &[f64],
    time: Option<&TimeSpec>,
    sampler: &SamplerPolicy,
) -> Result<Artifacts> {
    let mut fits = Vec::new();
    let mut points = Vec::new();
    let mut caps_hit = Vec::new();
    let mut fit_row = |alpha: Option<f64>, delta: Option<f64>, pts: &[(f64, f64)]| {
        let f = scaling_fit(pts).ok();
        fits.push(vec![
            engine.name().to_string(),
            opt(alpha),
            opt(delta),
            opt(f.as_ref().map(|f| f.nu)),
            opt(f.as_ref().and_then(|f| f.stderr)),
            opt(f.as_ref().map(|f| f.intercept)),
            opt(f.as_ref().map(|f| f.max_residual)),
            int(pts.len()),
        ]);
    };
    if engine == Engine::Oat {
        // chi = 1, so tau = 2 chi t = 2 t
        let mut pts = Vec::new();
        for &n in sizes {
            let o = oat_tstar(n, 1.0)?;
            pts.push((n as f64, o.xi2_min));
            points.push(vec![
                engine.name().to_string(),
                String::new(),
                String::new(),
                String::new(),
                int(n),
                num(2.0 * o.t_star),
                num(o.xi2_min),
                num(to_db(o.xi2_min)),
                "true".to_string(),
            ]);
        }
        fit_row(None, None, &pts);
    } else {
        let time = time.expect("lattice engines carry a time grid");
        for &alpha in alphas {
            for &delta in deltas {
                let model = Model { j_perp, delta, alpha };
                let mut pts = Vec::new();
                for &l in sizes {
                    let s = dynamics(engine, LatticeSpec::square(l), &model, time, sampler)?;
                    caps_hit.extend(s.caps_hit.into_iter().map(|c| format!("L={l} alpha={alpha} Delta={delta}: {c}")));
                    let o = optimum(&s.rows);
                    if let Some(o) = o {
                        if o.reached {
                            pts.push(((l * l) as f64, o.xi2_min));
                        } else {
                            caps_hit.push(format!(
                                "L={l} alpha={alpha} Delta={delta}: squeezing minimum not reached within the time grid"
                            ));
                        }
                    }
                    points.push(vec![
                        engine.name().to_string(),
                        num(alpha),
                        num(delta),
                        int(l),
                        int(l * l),
                        opt(o.map(|o| o.t_opt)),
                        opt(o.map(|o| o.xi2_min)),
                        opt(o.map(|o| to_db(o.xi2_min))),
                        o.map(|o| o.reached.to_string()).unwrap_or_default(),
                    ]);
                }
                fit_row(Some(alpha), Some(delta), &pts);
            }
        }
    }
    Ok(Artifacts {
        files: vec![
            (".csv".into(), csv_bytes(&output::SCALING_HEADER, &fits)),
            ("_points.csv".into(), csv_bytes(&output::SCALING_POINTS_HEADER, &points)),
        ],
        results: json!({ "fits": fits.len(), "points": points.len() }),
        caps_hit,
    })
}

fn thermal(lattice: LatticeSpec, model: &Model, energy: Option<f64>, sz2: Option<f64>, options: &ThermalOptions) -> Result<Artifacts> {
    let s = setup(lattice, model.j_perp, model.delta, model.alpha)?;
    let terms = hamiltonian_terms(&s.cm, &s.p);
    let e_target = match energy {
        Some(e) => e,
        None => {
            let h = SpinHamiltonian::from_terms(&terms, s.n)?;
            h.expectation(build_initial_state(s.n)?.amplitudes())
        }
    };
    let sz2_target = sz2.unwrap_or(s.n as f64 / 4.0);
    let spec = ThermalSpectrum::build(&terms, s.n, options)?;
    let sol = spec.solve(e_target, sz2_target)?;
    let (lo, hi) = if sol.beta == 0.0 {
        let b = 1.0 / spec.energy_unit();
        (-b, b)
    } else {
        (0f64.min(2.0 * sol.beta), 0f64.max(2.0 * sol.beta))
    };
    let monotone = spec.shifted_energy_is_monotone(sol.lambda, lo, hi, 200);
    let caps_hit = if sol.exact {
        Vec::new()
    } else {
        vec![format!(
            "thermal: sectors above dimension {} use stochastic Lanczos ({} vectors, {} steps)",
            options.dense_max_dim, options.ftlm_vectors, options.lanczos_steps
        )]
    };
    let j_bar = s.cm.j_bar();
    let record = vec![
        int(lattice.lx),
        int(lattice.ly),
        num(model.alpha),
        num(model.delta),
        num(e_target),
        num(sz2_target),
        num(sol.beta),
        num(sol.lambda),
        num(sol.temperature),
        num(sol.temperature / j_bar),
        num(sol.energy),
        num(sol.sz2),
        num(sol.s2 / total_spin_sq_initial(s.n)),
        num(sol.sperp2 / transverse_spin_sq_initial(s.n)),
        num(sol.residual_energy),
        num(sol.residual_sz2),
        sol.exact.to_string(),
    ];
    Ok(Artifacts {
        files: vec![(".csv".into(), csv_bytes(&output::THERMAL_HEADER, &[record]))],
        results: json!({
            "j_bar": j_bar,
            "beta": sol.beta,
            "mu": sol.mu,
            "lambda": sol.lambda,
            "residual_energy": sol.residual_energy,
            "residual_sz2": sol.residual_sz2,
            "monotone_bracket": [lo, hi],
            "monotone": monotone,
            "exact": sol.exact,
            "energy_range": spec.energy_range(),
        }),
        caps_hit,
    })
}
