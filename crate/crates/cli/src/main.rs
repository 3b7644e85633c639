use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use xxzsim_cli::compare::{compare_files, Thresholds};
use xxzsim_cli::{replay, run, ExperimentConfig, Kind, Overrides, RunOutcome};

#[derive(Parser)]
#[command(name = "xxzsim", version, about = "Spin-squeezing dynamics of 2D power-law XXZ lattices")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.dir`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides `sampler.master_seed`)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Trajectory-sampled dynamics
    DynamicsDtwa(RunArgs),
    /// Exact state-vector dynamics (N <= 20)
    DynamicsEd(RunArgs),
    /// Collective one-axis-twisting reference with chi = J_bar |Delta| / 2
    OatRef(RunArgs),
    /// Thermal ensemble matched to the quench energy and <S_z^2> (N <= 16)
    ThermalMatch(RunArgs),
    /// Optimal squeezing over a (Delta, alpha) grid
    Sweep(RunArgs),
    /// Size-scaling exponent of the optimal squeezing
    FitScaling(RunArgs),
    /// Exact dynamics with half-system entropy and its growth rate
    EntropyRate(RunArgs),
    /// Mean coupling J_bar / J_perp against lattice side length
    CouplingSweep(RunArgs),
    /// Run whatever `kind` the config names
    Run(RunArgs),
    /// Per-time deltas between two time-series CSV files
    Compare {
        a: PathBuf,
        /// Reference series; its squeezing minimum anchors the `*-min` checks
        b: PathBuf,
        #[arg(long)]
        max_xi2_db: Option<f64>,
        #[arg(long)]
        xi2_db_at_min: Option<f64>,
        #[arg(long)]
        max_xi2_db_to_min: Option<f64>,
        #[arg(long)]
        max_s2_norm: Option<f64>,
        /// Write per-time deltas here as CSV
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run the config recorded in a manifest
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        anyhow::ensure!(n > 0, "--threads must be positive");
        b = b.num_threads(n);
    }
    Ok(b.build()?)
}

fn report(outcome: &RunOutcome) {
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    println!("wrote {} ({:.2} s)", outcome.manifest.display(), outcome.wall_time);
}

fn run_kind(kind: Option<Kind>, args: &RunArgs) -> Result<()> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let kind = match kind.or(cfg.kind) {
        Some(k) => k,
        None => anyhow::bail!("{}: no `kind` given", args.config.display()),
    };
    let ov = Overrides {
        out: args.out.clone(),
        seed: args.seed,
    };
    let outcome = pool(args.threads)?.install(|| run(kind, &cfg, &ov))?;
    report(&outcome);
    Ok(())
}

fn main_inner(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::DynamicsDtwa(a) => run_kind(Some(Kind::DynamicsDtwa), &a)?,
        Cmd::DynamicsEd(a) => run_kind(Some(Kind::DynamicsEd), &a)?,
        Cmd::OatRef(a) => run_kind(Some(Kind::OatRef), &a)?,
        Cmd::ThermalMatch(a) => run_kind(Some(Kind::ThermalMatch), &a)?,
        Cmd::Sweep(a) => run_kind(Some(Kind::Sweep), &a)?,
        Cmd::FitScaling(a) => run_kind(Some(Kind::FitScaling), &a)?,
        Cmd::EntropyRate(a) => run_kind(Some(Kind::EntropyRate), &a)?,
        Cmd::CouplingSweep(a) => run_kind(Some(Kind::CouplingSweep), &a)?,
        Cmd::Run(a) => run_kind(None, &a)?,
        Cmd::Compare {
            a,
            b,
            max_xi2_db,
            xi2_db_at_min,
            max_xi2_db_to_min,
            max_s2_norm,
            out,
        } => {
            let r = compare_files(&a, &b)?;
            if let Some(out) = out {
                xxzsim_cli::output::write_atomic(&out, &r.to_csv()).with_context(|| format!("writing {}", out.display()))?;
            }
            println!("max |d xi2_db|  {:.6}  mean {:.6}", r.max_xi2_db, r.mean_xi2_db);
            println!("max |d S2_norm| {:.6}  mean {:.6}", r.max_s2_norm, r.mean_s2_norm);
            if let (Some(k), Some(d)) = (r.min_index, r.xi2_db_at_min) {
                println!(
                    "reference minimum at tau = {}: |d xi2_db| {:.6}, max up to it {:.6}",
                    r.rows[k].tau,
                    d,
                    r.max_xi2_db_to_min.unwrap_or(f64::NAN)
                );
            }
            let bad = r.violations(&Thresholds {
                max_xi2_db,
                xi2_db_at_min,
                max_xi2_db_to_min,
                max_s2_norm,
            });
            for v in &bad {
                println!("threshold exceeded: {v}");
            }
            return Ok(bad.is_empty());
        }
        Cmd::Replay { manifest, out, threads } => {
            let outcome = pool(threads)?.install(|| replay(&manifest, &out))?;
            report(&outcome);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
