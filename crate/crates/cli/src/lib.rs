//! Config-driven experiment runner for the `xxzsim` engines.
//!
//! A run reads a TOML [`config::ExperimentConfig`], validates it into a
//! [`config::Plan`], computes everything in memory and only then writes the
//! CSV output(s) and a JSON manifest, each via a temporary file and rename.

pub mod compare;
pub mod config;
pub mod output;
pub mod run;

pub use compare::{compare_files, CompareReport, Thresholds};
pub use config::{resolve, ConfigError, Engine, ExperimentConfig, Kind, Plan};
pub use run::{execute, replay, run, Overrides, RunOutcome};
