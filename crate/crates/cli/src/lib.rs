//! IO companion to `resmpc-core`: experiment config files, CSV/JSON
//! artifacts, weight files, SVG figures and the pipeline subcommands behind
//! the `resmpc` binary.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod plot;
pub mod weights_io;

use thiserror::Error;

#[derive(Error, Debug)]
pub enum CliError {
    #[error("config {path}: {what}")]
    Config { path: String, what: String },
    #[error("missing artifact {path} (run the producing subcommand first)")]
    MissingArtifact { path: String },
    #[error("io {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse {path}: {what}")]
    Parse { path: String, what: String },
    #[error("{0}")]
    Experiment(#[from] resmpc_core::experiment::ExperimentError),
    #[error("{0}")]
    Esn(#[from] resmpc_core::esn::EsnError),
}
