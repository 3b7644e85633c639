//! Pointwise comparison of two time-series CSV files.

use std::path::Path;

use thiserror::Error;

use crate::output::{csv_bytes, num, opt, DYNAMICS_HEADER};

#[derive(Debug, Error)]
pub enum CompareError {
    #[error("reading {path}: {message}")]
    Read { path: String, message: String },
    #[error("{path}: header does not match the time-series schema")]
    Schema { path: String },
    #[error("grid mismatch: {0}")]
    Grid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub lx: usize,
    pub ly: usize,
    pub tau: f64,
    pub xi2_db: Option<f64>,
    pub s2_norm: f64,
}

pub fn read_series(path: &Path) -> Result<Vec<Sample>, CompareError> {
    let err = |message: String| CompareError::Read {
        path: path.display().to_string(),
        message,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
    let header = r.headers().map_err(|e| err(e.to_string()))?.clone();
    if header.iter().ne(DYNAMICS_HEADER.iter().copied()) {
        return Err(CompareError::Schema {
            path: path.display().to_string(),
        });
    }
    let col = |name: &str| DYNAMICS_HEADER.iter().position(|h| *h == name).unwrap();
    let (c_lx, c_ly, c_tau, c_db, c_s2) = (col("Lx"), col("Ly"), col("tau"), col("xi2_db"), col("S2_norm"));
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let f = |c: usize| -> Result<f64, CompareError> {
            rec[c]
                .parse::<f64>()
                .map_err(|e| err(format!("row {}: column {}: {e}", line + 1, DYNAMICS_HEADER[c])))
        };
        let u = |c: usize| -> Result<usize, CompareError> {
            rec[c]
                .parse::<usize>()
                .map_err(|e| err(format!("row {}: column {}: {e}", line + 1, DYNAMICS_HEADER[c])))
        };
        out.push(Sample {
            lx: u(c_lx)?,
            ly: u(c_ly)?,
            tau: f(c_tau)?,
            xi2_db: if rec[c_db].is_empty() { None } else { Some(f(c_db)?) },
            s2_norm: f(c_s2)?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaRow {
    pub tau: f64,
    pub d_xi2_db: Option<f64>,
    pub d_s2_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub rows: Vec<DeltaRow>,
    pub max_xi2_db: f64,
    pub mean_xi2_db: f64,
    pub max_s2_norm: f64,
    pub mean_s2_norm: f64,
    /// Index of the squeezing minimum of the reference (second) series.
    pub min_index: Option<usize>,
    pub xi2_db_at_min: Option<f64>,
    /// Largest `|d xi2_db|` over samples up to and including the minimum.
    pub max_xi2_db_to_min: Option<f64>,
    /// Largest `|d S2_norm|` over samples up to and including the minimum.
    pub max_s2_norm_to_min: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Thresholds {
    pub max_xi2_db: Option<f64>,
    pub xi2_db_at_min: Option<f64>,
    pub max_xi2_db_to_min: Option<f64>,
    pub max_s2_norm: Option<f64>,
}

fn max_mean(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut max, mut sum, mut n) = (0.0f64, 0.0, 0usize);
    for x in v {
        max = max.max(x);
        sum += x;
        n += 1;
    }
    (max, if n == 0 { 0.0 } else { sum / n as f64 })
}

pub fn compare_series(a: &[Sample], b: &[Sample]) -> Result<CompareReport, CompareError> {
    if a.len() != b.len() {
        return Err(CompareError::Grid(format!("{} rows vs {} rows", a.len(), b.len())));
    }
    let mut rows = Vec::with_capacity(a.len());
    for (k, (x, y)) in a.iter().zip(b).enumerate() {
        if (x.lx, x.ly) != (y.lx, y.ly) {
            return Err(CompareError::Grid(format!(
                "row {k}: lattice {}x{} vs {}x{}",
                x.lx, x.ly, y.lx, y.ly
            )));
        }
        if (x.tau - y.tau).abs() > 1e-9 * x.tau.abs().max(y.tau.abs()).max(1.0) {
            return Err(CompareError::Grid(format!("row {k}: tau {} vs {}", x.tau, y.tau)));
        }
        rows.push(DeltaRow {
            tau: y.tau,
            d_xi2_db: x.xi2_db.zip(y.xi2_db).map(|(p, q)| (p - q).abs()),
            d_s2_norm: (x.s2_norm - y.s2_norm).abs(),
        });
    }
    let (max_xi2_db, mean_xi2_db) = max_mean(rows.iter().filter_map(|r| r.d_xi2_db));
    let (max_s2_norm, mean_s2_norm) = max_mean(rows.iter().map(|r| r.d_s2_norm));
    let min_index = b
        .iter()
        .enumerate()
        .filter_map(|(k, s)| s.xi2_db.map(|v| (k, v)))
        .fold(None, |best: Option<(usize, f64)>, (k, v)| match best {
            Some((_, bv)) if bv <= v => best,
            _ => Some((k, v)),
        })
        .map(|(k, _)| k);
    let xi2_db_at_min = min_index.and_then(|k| rows[k].d_xi2_db);
    let max_xi2_db_to_min = min_index.map(|k| max_mean(rows[..=k].iter().filter_map(|r| r.d_xi2_db)).0);
    let max_s2_norm_to_min = min_index.map(|k| max_mean(rows[..=k].iter().map(|r| r.d_s2_norm)).0);
    Ok(CompareReport {
        rows,
        max_xi2_db,
        mean_xi2_db,
        max_s2_norm,
        mean_s2_norm,
        min_index,
        xi2_db_at_min,
        max_xi2_db_to_min,
        max_s2_norm_to_min,
    })
}

pub fn compare_files(a: &Path, b: &Path) -> Result<CompareReport, CompareError> {
    compare_series(&read_series(a)?, &read_series(b)?)
}

impl CompareReport {
    /// Names of the thresholds that are exceeded.
    pub fn violations(&self, t: &Thresholds) -> Vec<String> {
        let mut v = Vec::new();
        let mut check = |name: &str, value: Option<f64>, limit: Option<f64>| {
            if let Some(limit) = limit {
                match value {
                    Some(x) if x <= limit => {}
                    Some(x) => v.push(format!("{name} = {x} > {limit}")),
                    None => v.push(format!("{name} undefined")),
                }
            }
        };
        check("max |d xi2_db|", Some(self.max_xi2_db), t.max_xi2_db);
        check("|d xi2_db| at minimum", self.xi2_db_at_min, t.xi2_db_at_min);
        check("max |d xi2_db| up to minimum", self.max_xi2_db_to_min, t.max_xi2_db_to_min);
        check("max |d S2_norm|", Some(self.max_s2_norm), t.max_s2_norm);
        v
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| vec![num(r.tau), opt(r.d_xi2_db), num(r.d_s2_norm)])
            .collect();
        csv_bytes(&["tau", "abs_d_xi2_db", "abs_d_S2_norm"], &rows)
    }
}
