//! Experiment configuration: TOML in, validated run plan out.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use xxzsim::dtwa::{SamplerPolicy, DEFAULT_N_TRAJ};
use xxzsim::exact::{ThermalOptions, ED_MAX_SITES, THERMAL_MAX_SITES};
use xxzsim::LatticeSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    DynamicsDtwa,
    DynamicsEd,
    OatRef,
    ThermalMatch,
    Sweep,
    FitScaling,
    EntropyRate,
    CouplingSweep,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::DynamicsDtwa => "dynamics-dtwa",
            Kind::DynamicsEd => "dynamics-ed",
            Kind::OatRef => "oat-ref",
            Kind::ThermalMatch => "thermal-match",
            Kind::Sweep => "sweep",
            Kind::FitScaling => "fit-scaling",
            Kind::EntropyRate => "entropy-rate",
            Kind::CouplingSweep => "coupling-sweep",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Dtwa,
    Ed,
    Oat,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Dtwa => "dtwa",
            Engine::Ed => "ed",
            Engine::Oat => "oat",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<Kind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy: Option<EntropyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thermal: Option<ThermalConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub lx: usize,
    pub ly: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_perp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

/// Either a uniform grid (`tau_max`, `n_points`) or explicit `points`.
/// With `scaled` (the default) times are `tau = t J_bar |Delta|`,
/// otherwise `t` in units of `1/J_perp`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaled: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_traj: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// File stem; defaults to the experiment kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engine: Option<Engine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
}

/// `sizes` are spin counts for the `oat` engine and square-lattice side
/// lengths for `dtwa` and `ed`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engine: Option<Engine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
}

/// Targets default to the quench values: the energy of the +x product
/// state and `<S_z^2> = N/4`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sz2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense_max_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ftlm_vectors: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lanczos_steps: Option<usize>,
}

pub const DEFAULT_ALPHAS: [f64; 5] = [1.0, 2.0, 3.0, 4.0, 6.0];
pub const DEFAULT_COUPLING_SIZES: [usize; 9] = [2, 3, 4, 5, 6, 7, 8, 9, 10];

/// `-4.0, -3.8, ..., 2.0`, built from integers so every value is the
/// nearest double to its decimal.
pub fn default_sweep_deltas() -> Vec<f64> {
    (-20..=10).map(|k| k as f64 / 5.0).collect()
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config field `{field}`: {message}")]
    Field { field: &'static str, message: String },
    #[error("resource guard: {0}")]
    Resource(xxzsim::Error),
}

fn field(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field,
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub j_perp: f64,
    pub delta: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TimeSpec {
    Uniform { max: f64, n_points: usize, scaled: bool },
    Points { points: Vec<f64>, scaled: bool },
}

impl TimeSpec {
    pub fn grid(&self, scale: f64) -> xxzsim::Result<xxzsim::TimeGrid> {
        match self {
            TimeSpec::Uniform { max, n_points, scaled } => xxzsim::TimeGrid::uniform(*max, *n_points, *scaled, scale),
            TimeSpec::Points { points, scaled } => {
                let t = if *scaled {
                    points.iter().map(|tau| tau / scale).collect()
                } else {
                    points.clone()
                };
                xxzsim::TimeGrid::from_times(t, scale)
            }
        }
    }
}

/// Validated, fully resolved work description of one run.
#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    Dynamics {
        engine: Engine,
        lattice: LatticeSpec,
        model: Model,
        time: TimeSpec,
        sampler: SamplerPolicy,
    },
    Thermal {
        lattice: LatticeSpec,
        model: Model,
        energy: Option<f64>,
        sz2: Option<f64>,
        options: ThermalOptions,
    },
    Sweep {
        engine: Engine,
        lattice: LatticeSpec,
        j_perp: f64,
        deltas: Vec<f64>,
        alphas: Vec<f64>,
        time: TimeSpec,
        sampler: SamplerPolicy,
    },
    FitScaling {
        engine: Engine,
        sizes: Vec<usize>,
        j_perp: f64,
        deltas: Vec<f64>,
        alphas: Vec<f64>,
        time: Option<TimeSpec>,
        sampler: SamplerPolicy,
    },
    EntropyRate {
        lattice: LatticeSpec,
        model: Model,
        time: TimeSpec,
        window: f64,
    },
    CouplingSweep {
        j_perp: f64,
        sizes: Vec<usize>,
        alphas: Vec<f64>,
    },
}

fn finite(name: &'static str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(field(name, format!("must be finite, got {v}")))
    }
}

fn check_alpha(name: &'static str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(field(name, format!("must be finite and >= 0, got {v}")))
    }
}

fn nonempty<T>(name: &'static str, v: &[T]) -> Result<(), ConfigError> {
    if v.is_empty() {
        Err(field(name, "must not be empty"))
    } else {
        Ok(())
    }
}

fn lattice_of(cfg: &ExperimentConfig) -> Result<LatticeSpec, ConfigError> {
    let l = cfg.lattice.ok_or_else(|| field("lattice", "missing section (needs lx, ly)"))?;
    if l.lx == 0 || l.ly == 0 || l.lx * l.ly < 2 {
        return Err(field("lattice", format!("{}x{} has fewer than two sites", l.lx, l.ly)));
    }
    Ok(LatticeSpec::new(l.lx, l.ly))
}

fn j_perp_of(cfg: &ExperimentConfig) -> Result<f64, ConfigError> {
    let j = cfg.model.and_then(|m| m.j_perp).unwrap_or(1.0);
    if j.is_finite() && j > 0.0 {
        Ok(j)
    } else {
        Err(field("model.j_perp", format!("must be finite and > 0, got {j}")))
    }
}

fn model_of(cfg: &ExperimentConfig) -> Result<Model, ConfigError> {
    let m = cfg.model.ok_or_else(|| field("model", "missing section (needs delta, alpha)"))?;
    let delta = finite("model.delta", m.delta.ok_or_else(|| field("model.delta", "required"))?)?;
    let alpha = check_alpha("model.alpha", m.alpha.ok_or_else(|| field("model.alpha", "required"))?)?;
    Ok(Model {
        j_perp: j_perp_of(cfg)?,
        delta,
        alpha,
    })
}

fn time_of(cfg: &ExperimentConfig) -> Result<TimeSpec, ConfigError> {
    let t = cfg
        .time
        .as_ref()
        .ok_or_else(|| field("time", "missing section (needs tau_max and n_points, or points)"))?;
    let scaled = t.scaled.unwrap_or(true);
    if let Some(points) = &t.points {
        if t.tau_max.is_some() || t.n_points.is_some() {
            return Err(field("time.points", "give either points or tau_max/n_points, not both"));
        }
        xxzsim::TimeGrid::from_times(points.clone(), 1.0).map_err(|e| field("time.points", e.to_string()))?;
        return Ok(TimeSpec::Points {
            points: points.clone(),
            scaled,
        });
    }
    let max = t.tau_max.ok_or_else(|| field("time.tau_max", "required"))?;
    if !(max.is_finite() && max > 0.0) {
        return Err(field("time.tau_max", format!("must be finite and > 0, got {max}")));
    }
    let n_points = t.n_points.ok_or_else(|| field("time.n_points", "required"))?;
    if n_points < 2 {
        return Err(field("time.n_points", format!("need at least 2, got {n_points}")));
    }
    Ok(TimeSpec::Uniform { max, n_points, scaled })
}

fn sampler_of(cfg: &ExperimentConfig) -> Result<SamplerPolicy, ConfigError> {
    let s = cfg.sampler.unwrap_or_default();
    let n_traj = s.n_traj.unwrap_or(DEFAULT_N_TRAJ);
    if n_traj == 0 {
        return Err(field("sampler.n_traj", "must be positive"));
    }
    Ok(SamplerPolicy::new(s.master_seed.unwrap_or(0), n_traj))
}

fn alphas_of(name: &'static str, v: &Option<Vec<f64>>) -> Result<Vec<f64>, ConfigError> {
    let v = v.clone().unwrap_or_else(|| DEFAULT_ALPHAS.to_vec());
    nonempty(name, &v)?;
    for &a in &v {
        check_alpha(name, a)?;
    }
    Ok(v)
}

fn deltas_of(name: &'static str, v: &Option<Vec<f64>>) -> Result<Vec<f64>, ConfigError> {
    let v = v.clone().unwrap_or_else(default_sweep_deltas);
    nonempty(name, &v)?;
    for &d in &v {
        finite(name, d)?;
    }
    Ok(v)
}

fn guard(what: &'static str, cap: usize, n: usize) -> Result<(), ConfigError> {
    if n > cap {
        Err(ConfigError::Resource(xxzsim::Error::ResourceGuard { what, cap, n }))
    } else {
        Ok(())
    }
}

fn engine_guard(engine: Engine, n: usize) -> Result<(), ConfigError> {
    match engine {
        Engine::Ed => guard("exact dynamics", ED_MAX_SITES, n),
        _ => Ok(()),
    }
}

/// Validate `cfg` for `kind` and resolve every default.
///
/// Returns the plan and a copy of the config with all defaults written out,
/// which is what the manifest echoes.
pub fn resolve(kind: Kind, cfg: &ExperimentConfig) -> Result<(Plan, ExperimentConfig), ConfigError> {
    if let Some(k) = cfg.kind {
        if k != kind {
            return Err(field("kind", format!("config is for `{k}` but `{kind}` was requested")));
        }
    }
    let mut echo = cfg.clone();
    echo.kind = Some(kind);
    let plan = match kind {
        Kind::DynamicsDtwa | Kind::DynamicsEd | Kind::OatRef => {
            let engine = match kind {
                Kind::DynamicsDtwa => Engine::Dtwa,
                Kind::DynamicsEd => Engine::Ed,
                _ => Engine::Oat,
            };
            let lattice = lattice_of(cfg)?;
            let model = model_of(cfg)?;
            engine_guard(engine, lattice.n_sites())?;
            if engine == Engine::Oat && model.delta == 0.0 {
                return Err(field("model.delta", "one-axis twisting needs Delta != 0 (chi = J_bar |Delta| / 2)"));
            }
            let time = time_of(cfg)?;
            let sampler = sampler_of(cfg)?;
            if engine == Engine::Dtwa {
                echo.sampler = Some(SamplerConfig {
                    n_traj: Some(sampler.n_traj),
                    master_seed: Some(sampler.master_seed),
                });
            }
            Plan::Dynamics {
                engine,
                lattice,
                model,
                time,
                sampler,
            }
        }
        Kind::ThermalMatch => {
            let lattice = lattice_of(cfg)?;
            let model = model_of(cfg)?;
            guard("thermal matching", THERMAL_MAX_SITES, lattice.n_sites())?;
            let t = cfg.thermal.unwrap_or_default();
            let defaults = ThermalOptions::default();
            let options = ThermalOptions {
                dense_max_dim: t.dense_max_dim.unwrap_or(defaults.dense_max_dim),
                ftlm_vectors: t.ftlm_vectors.unwrap_or(defaults.ftlm_vectors),
                lanczos_steps: t.lanczos_steps.unwrap_or(defaults.lanczos_steps),
                seed: cfg.sampler.and_then(|s| s.master_seed).unwrap_or(defaults.seed),
            };
            if options.ftlm_vectors == 0 {
                return Err(field("thermal.ftlm_vectors", "must be positive"));
            }
            if options.lanczos_steps < 2 {
                return Err(field("thermal.lanczos_steps", "need at least 2"));
            }
            if let Some(e) = t.energy {
                finite("thermal.energy", e)?;
            }
            if let Some(s) = t.sz2 {
                if !(s.is_finite() && s >= 0.0) {
                    return Err(field("thermal.sz2", format!("must be finite and >= 0, got {s}")));
                }
            }
            echo.thermal = Some(ThermalConfig {
                energy: t.energy,
                sz2: t.sz2,
                dense_max_dim: Some(options.dense_max_dim),
                ftlm_vectors: Some(options.ftlm_vectors),
                lanczos_steps: Some(options.lanczos_steps),
            });
            echo.sampler = Some(SamplerConfig {
                n_traj: None,
                master_seed: Some(options.seed),
            });
            Plan::Thermal {
                lattice,
                model,
                energy: t.energy,
                sz2: t.sz2,
                options,
            }
        }
        Kind::Sweep => {
            let s = cfg.sweep.clone().unwrap_or_default();
            let engine = s.engine.unwrap_or(Engine::Dtwa);
            if engine == Engine::Oat {
                return Err(field("sweep.engine", "must be dtwa or ed"));
            }
            let lattice = lattice_of(cfg)?;
            engine_guard(engine, lattice.n_sites())?;
            let deltas = deltas_of("sweep.deltas", &s.deltas)?;
            let alphas = alphas_of("sweep.alphas", &s.alphas)?;
            let time = time_of(cfg)?;
            if !matches!(time, TimeSpec::Uniform { scaled: true, .. } | TimeSpec::Points { scaled: true, .. }) {
                return Err(field("time.scaled", "sweeps compare parameters on the scaled time axis; must be true"));
            }
            let sampler = sampler_of(cfg)?;
            echo.sweep = Some(SweepConfig {
                engine: Some(engine),
                deltas: Some(deltas.clone()),
                alphas: Some(alphas.clone()),
            });
            if engine == Engine::Dtwa {
                echo.sampler = Some(SamplerConfig {
                    n_traj: Some(sampler.n_traj),
                    master_seed: Some(sampler.master_seed),
                });
            }
            Plan::Sweep {
                engine,
                lattice,
                j_perp: j_perp_of(cfg)?,
                deltas,
                alphas,
                time,
                sampler,
            }
        }
        Kind::FitScaling => {
            let s = cfg.scaling.clone().unwrap_or_default();
            let engine = s.engine.unwrap_or(Engine::Oat);
            let sizes = s.sizes.clone().ok_or_else(|| field("scaling.sizes", "required"))?;
            if sizes.len() < 2 {
                return Err(field("scaling.sizes", "need at least two sizes"));
            }
            let (deltas, alphas, time) = if engine == Engine::Oat {
                if let Some(&n) = sizes.iter().find(|&&n| n < 2) {
                    return Err(field("scaling.sizes", format!("spin counts must be >= 2, got {n}")));
                }
                (Vec::new(), Vec::new(), None)
            } else {
                if let Some(&l) = sizes.iter().find(|&&l| l < 2) {
                    return Err(field("scaling.sizes", format!("side lengths must be >= 2, got {l}")));
                }
                let biggest = sizes.iter().max().copied().unwrap_or(0);
                engine_guard(engine, biggest * biggest)?;
                let deltas = s
                    .deltas
                    .clone()
                    .ok_or_else(|| field("scaling.deltas", "required for lattice engines"))?;
                nonempty("scaling.deltas", &deltas)?;
                for &d in &deltas {
                    finite("scaling.deltas", d)?;
                    if d == 0.0 {
                        return Err(field("scaling.deltas", "Delta = 0 does not squeeze"));
                    }
                }
                let alphas = s
                    .alphas
                    .clone()
                    .ok_or_else(|| field("scaling.alphas", "required for lattice engines"))?;
                let alphas = alphas_of("scaling.alphas", &Some(alphas))?;
                (deltas, alphas, Some(time_of(cfg)?))
            };
            let sampler = sampler_of(cfg)?;
            echo.scaling = Some(ScalingConfig {
                engine: Some(engine),
                sizes: Some(sizes.clone()),
                deltas: (engine != Engine::Oat).then(|| deltas.clone()),
                alphas: (engine != Engine::Oat).then(|| alphas.clone()),
            });
            if engine == Engine::Dtwa {
                echo.sampler = Some(SamplerConfig {
                    n_traj: Some(sampler.n_traj),
                    master_seed: Some(sampler.master_seed),
                });
            }
            Plan::FitScaling {
                engine,
                sizes,
                j_perp: j_perp_of(cfg)?,
                deltas,
                alphas,
                time,
                sampler,
            }
        }
        Kind::EntropyRate => {
            let lattice = lattice_of(cfg)?;
            engine_guard(Engine::Ed, lattice.n_sites())?;
            let model = model_of(cfg)?;
            let time = time_of(cfg)?;
            let window = cfg
                .entropy
                .and_then(|e| e.window)
                .unwrap_or(xxzsim::analysis::DEFAULT_ENTROPY_WINDOW);
            if !(window.is_finite() && window > 0.0) {
                return Err(field("entropy.window", format!("must be finite and > 0, got {window}")));
            }
            echo.entropy = Some(EntropyConfig { window: Some(window) });
            Plan::EntropyRate {
                lattice,
                model,
                time,
                window,
            }
        }
        Kind::CouplingSweep => {
            let c = cfg.coupling.clone().unwrap_or_default();
            let sizes = c.sizes.clone().unwrap_or_else(|| DEFAULT_COUPLING_SIZES.to_vec());
            nonempty("coupling.sizes", &sizes)?;
            if let Some(&l) = sizes.iter().find(|&&l| l < 2) {
                return Err(field("coupling.sizes", format!("side lengths must be >= 2, got {l}")));
            }
            let alphas = alphas_of("coupling.alphas", &c.alphas)?;
            echo.coupling = Some(CouplingConfig {
                sizes: Some(sizes.clone()),
                alphas: Some(alphas.clone()),
            });
            Plan::CouplingSweep {
                j_perp: j_perp_of(cfg)?,
                sizes,
                alphas,
            }
        }
    };
    Ok((plan, echo))
}
