use std::path::Path;
use std::process::Command;

use xxzsim_cli::compare::{compare_files, read_series};
use xxzsim_cli::output::DYNAMICS_HEADER;
use xxzsim_cli::{replay, run, ExperimentConfig, Kind, Overrides};

fn cfg(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(text).unwrap()
}

fn run_in(kind: Kind, text: &str, dir: &Path) -> Vec<std::path::PathBuf> {
    let ov = Overrides {
        out: Some(dir.to_path_buf()),
        seed: None,
    };
    run(kind, &cfg(text), &ov).unwrap().files
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[idx].to_string()).collect()
}

const DTWA: &str = r#"
[lattice]
lx = 3
ly = 2
[model]
delta = -1.8
alpha = 3.0
[time]
tau_max = 0.6
n_points = 7
[sampler]
n_traj = 300
master_seed = 17
"#;

const ED_ZERO: &str = r#"
[lattice]
lx = 3
ly = 3
[model]
delta = 0.0
alpha = 3.0
[time]
tau_max = 2.0
n_points = 9
"#;

#[test]
fn dtwa_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<Vec<u8>> = [1usize, 4]
        .iter()
        .enumerate()
        .map(|(k, &threads)| {
            let sub = dir.path().join(format!("r{k}"));
            let files = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_in(Kind::DynamicsDtwa, DTWA, &sub));
            std::fs::read(&files[0]).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    let text = String::from_utf8(runs[0].clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), DYNAMICS_HEADER.join(","));
    assert_eq!(text.lines().count(), 8);

    let replayed = dir.path().join("replay");
    let out = replay(&dir.path().join("r0/dynamics-dtwa.json"), &replayed).unwrap();
    assert_eq!(std::fs::read(&out.files[0]).unwrap(), runs[0]);

    let other = run(
        Kind::DynamicsDtwa,
        &cfg(DTWA),
        &Overrides {
            out: Some(dir.path().join("seeded")),
            seed: Some(18),
        },
    )
    .unwrap();
    assert_ne!(std::fs::read(&other.files[0]).unwrap(), runs[0]);
    assert!(column(&other.files[0], "seed").iter().all(|s| s == "18"));
}

#[test]
fn manifest_records_run() {
    let dir = tempfile::tempdir().unwrap();
    run_in(Kind::DynamicsDtwa, DTWA, dir.path());
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("dynamics-dtwa.json")).unwrap()).unwrap();
    assert_eq!(m["kind"], "dynamics-dtwa");
    assert_eq!(m["seed"], 17);
    assert_eq!(m["config"]["sampler"]["n_traj"], 300);
    assert_eq!(m["caps"]["ed_max_sites"], 20);
    assert_eq!(m["constants"]["db_convention"], "xi2_db = 10 log10(xi2)");
    assert_eq!(m["outputs"][0], "dynamics-dtwa.csv");
    assert_eq!(m["results"]["xi2_stderr"].as_array().unwrap().len(), 7);
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn ed_delta_zero_is_stationary() {
    let dir = tempfile::tempdir().unwrap();
    let files = run_in(Kind::DynamicsEd, ED_ZERO, dir.path());
    for v in column(&files[0], "xi2") {
        assert!((v.parse::<f64>().unwrap() - 1.0).abs() < 1e-10, "{v}");
    }
    for v in column(&files[0], "S2_norm") {
        assert!((v.parse::<f64>().unwrap() - 1.0).abs() < 1e-10);
    }
    assert!(column(&files[0], "n_traj").iter().all(String::is_empty));
    assert!(column(&files[0], "entropy").iter().all(|v| v.parse::<f64>().unwrap().abs() < 1e-8));
}

#[test]
fn self_compare_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let files = run_in(Kind::DynamicsEd, ED_ZERO, dir.path());
    let r = compare_files(&files[0], &files[0]).unwrap();
    assert_eq!(r.max_xi2_db, 0.0);
    assert_eq!(r.max_s2_norm, 0.0);
    assert_eq!(r.rows.len(), 9);
}

#[test]
fn compare_rejects_different_grids() {
    let dir = tempfile::tempdir().unwrap();
    let a = run_in(Kind::DynamicsEd, ED_ZERO, &dir.path().join("a"));
    let b = run_in(Kind::DynamicsEd, &ED_ZERO.replace("n_points = 9", "n_points = 5"), &dir.path().join("b"));
    assert!(compare_files(&a[0], &b[0]).is_err());
}

#[test]
fn rejected_config_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let bad = DTWA.replace("n_points = 7", "n_points = 0");
    let err = run(
        Kind::DynamicsDtwa,
        &cfg(&bad),
        &Overrides {
            out: Some(out.clone()),
            seed: None,
        },
    )
    .unwrap_err();
    assert!(err.to_string().contains("time.n_points"), "{err}");
    assert!(!out.exists());
    let big = ED_ZERO.replace("lx = 3", "lx = 7");
    let err = run(
        Kind::DynamicsEd,
        &cfg(&big),
        &Overrides {
            out: Some(out.clone()),
            seed: None,
        },
    )
    .unwrap_err();
    assert!(err.to_string().contains("N <= 20"), "{err}");
    assert!(!out.exists());
}

#[test]
fn oat_reference_run() {
    let dir = tempfile::tempdir().unwrap();
    let text = DTWA.replace("tau_max = 0.6\nn_points = 7", "tau_max = 0.4\nn_points = 41");
    let files = run_in(Kind::OatRef, &text, dir.path());
    let s = read_series(&files[0]).unwrap();
    assert_eq!(column(&files[0], "engine")[0], "oat");
    let min = s.iter().filter_map(|p| p.xi2_db).fold(f64::INFINITY, f64::min);
    assert!(min < -3.0);
    assert!(s.iter().all(|p| (p.s2_norm - 1.0).abs() < 1e-12));
}

#[test]
fn thermal_match_run() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[lattice]\nlx = 2\nly = 3\n[model]\ndelta = 1.0\nalpha = 3.0\n";
    let files = run_in(Kind::ThermalMatch, text, dir.path());
    let res = |name| column(&files[0], name)[0].parse::<f64>().unwrap();
    assert!(res("residual_energy") <= 1e-8);
    assert!(res("residual_sz2") <= 1e-8);
    assert!(res("Sperp2_norm") > 0.0 && res("Sperp2_norm") < 1.0);
    assert_eq!(column(&files[0], "exact")[0], "true");
}

#[test]
fn coupling_sweep_trends() {
    let dir = tempfile::tempdir().unwrap();
    let files = run_in(Kind::CouplingSweep, "[coupling]\nsizes = [2, 3, 4, 6]\nalphas = [0.0, 1.0, 3.0]\n", dir.path());
    let alpha = column(&files[0], "alpha");
    let j: Vec<f64> = column(&files[0], "Jbar_over_Jperp").iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(j.len(), 12);
    assert!(j[..4].iter().all(|v| (v - 1.0).abs() < 1e-12));
    assert!(j[4..8].windows(2).all(|w| w[1] < w[0]));
    assert!(j[8..].windows(2).all(|w| w[1] < w[0]));
    assert_eq!(alpha[8], "3.0");
    for l in 0..4 {
        assert!(j[8 + l] < j[4 + l]);
    }
}

#[test]
fn ed_sweep_and_entropy_rate() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[lattice]\nlx = 2\nly = 2\n[sweep]\nengine = \"ed\"\ndeltas = [-1.8, -0.2]\nalphas = [3.0]\n[time]\ntau_max = 1.0\nn_points = 41\n";
    let files = run_in(Kind::Sweep, text, dir.path());
    let xi: Vec<f64> = column(&files[0], "xi2_min").iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(xi.len(), 2);
    assert!(xi.iter().all(|&x| x < 1.0));
    assert!(column(&files[0], "reached").iter().all(|r| r == "true"));

    let text = "[lattice]\nlx = 2\nly = 2\n[model]\ndelta = -1.8\nalpha = 3.0\n[time]\ntau_max = 0.5\nn_points = 21\n";
    run_in(Kind::EntropyRate, text, &dir.path().join("e"));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("e/entropy-rate.json")).unwrap()).unwrap();
    assert!(m["results"]["entropy_rate"]["rate"].as_f64().unwrap() > 0.0);
    assert_eq!(m["results"]["entropy_rate"]["n_points"], 13);
}

#[test]
fn oat_scaling_fit_run() {
    let dir = tempfile::tempdir().unwrap();
    let files = run_in(Kind::FitScaling, "[scaling]\nsizes = [16, 36, 64]\n", dir.path());
    assert_eq!(files.len(), 2);
    let nu: f64 = column(&files[0], "nu")[0].parse().unwrap();
    assert!(nu < 0.0 && nu.abs() > 0.4 && nu.abs() < 0.8, "{nu}");
    assert_eq!(column(&files[1], "N"), vec!["16", "36", "64"]);
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("c.toml");
    std::fs::write(&cfg_path, ED_ZERO).unwrap();
    let out = dir.path().join("out");
    let bin = env!("CARGO_BIN_EXE_xxzsim");
    let ok = Command::new(bin)
        .args(["dynamics-ed", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .args(["--threads", "2"])
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let csv = out.join("dynamics-ed.csv");
    let cmp = Command::new(bin).arg("compare").arg(&csv).arg(&csv).args(["--max-xi2-db", "0"]).output().unwrap();
    assert_eq!(cmp.status.code(), Some(0));

    std::fs::write(&cfg_path, ED_ZERO.replace("alpha = 3.0", "alpha = 3.0\nbeta = 1.0")).unwrap();
    let bad = Command::new(bin)
        .args(["dynamics-ed", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.path().join("bad"))
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("beta"));
    assert!(!dir.path().join("bad").exists());
}

#[test]
fn shipped_configs_resolve() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = ExperimentConfig::load(&path).unwrap();
            xxzsim_cli::resolve(cfg.kind.unwrap(), &cfg).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 5);
}
