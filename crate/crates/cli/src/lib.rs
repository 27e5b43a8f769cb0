//! Command-line workflow: simulate flights, calibrate models, replay logs
//! through the estimator, and score estimates against ground truth.

pub mod app;
pub mod config;
pub mod logfile;

pub use app::{run, Cli, CliError, Command, ExitClass, Report};
