//! CSV schemas and atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

/// Column order of every time-series file.
pub const DYNAMICS_HEADER: [&str; 17] = [
    "engine", "Lx", "Ly", "alpha", "Delta", "t", "tau", "xi2", "xi2_db", "S2_norm", "Sperp2_norm", "Sx", "Sy", "Sz",
    "entropy", "n_traj", "seed",
];

pub const SWEEP_HEADER: [&str; 11] = [
    "engine", "Lx", "Ly", "alpha", "Delta", "tau_opt", "xi2_min", "xi2_min_db", "reached", "n_traj", "seed",
];

pub const SCALING_HEADER: [&str; 8] = [
    "engine", "alpha", "Delta", "nu", "nu_stderr", "intercept", "max_residual", "n_sizes",
];

pub const SCALING_POINTS_HEADER: [&str; 9] = [
    "engine", "alpha", "Delta", "L", "N", "tau_opt", "xi2_min", "xi2_min_db", "reached",
];

pub const THERMAL_HEADER: [&str; 17] = [
    "Lx", "Ly", "alpha", "Delta", "energy_target", "sz2_target", "beta", "lambda", "temperature",
    "temperature_over_Jbar", "energy", "sz2", "S2_norm", "Sperp2_norm", "residual_energy", "residual_sz2", "exact",
];

pub const COUPLING_HEADER: [&str; 4] = ["L", "N", "alpha", "Jbar_over_Jperp"];

/// Shortest representation that parses back to the same double; empty for
/// values that do not apply.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn int(v: impl std::fmt::Display) -> String {
    v.to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsRow {
    pub engine: &'static str,
    pub lx: usize,
    pub ly: usize,
    pub alpha: f64,
    pub delta: f64,
    pub t: f64,
    pub tau: f64,
    pub xi2: Option<f64>,
    pub xi2_db: Option<f64>,
    pub s2_norm: f64,
    pub sperp2_norm: f64,
    pub bloch: [f64; 3],
    pub entropy: Option<f64>,
    pub n_traj: Option<usize>,
    pub seed: Option<u64>,
}

impl DynamicsRow {
    pub fn record(&self) -> Vec<String> {
        vec![
            self.engine.to_string(),
            int(self.lx),
            int(self.ly),
            num(self.alpha),
            num(self.delta),
            num(self.t),
            num(self.tau),
            opt(self.xi2),
            opt(self.xi2_db),
            num(self.s2_norm),
            num(self.sperp2_norm),
            num(self.bloch[0]),
            num(self.bloch[1]),
            num(self.bloch[2]),
            opt(self.entropy),
            self.n_traj.map(int).unwrap_or_default(),
            self.seed.map(int).unwrap_or_default(),
        ]
    }
}

/// CSV text with a header line and `\n` terminators.
pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        assert_eq!(r.len(), header.len());
        w.write_record(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Write to a sibling temporary file, then rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp: PathBuf = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}
