//! Pipeline subcommands. Each one reads its inputs from the output
//! directory, computes, and writes the documented artifacts:
//!
//! - `collect`: dataset.csv, nominal_run.csv
//! - `train`:   esn_weights.json, training_report.json (reads dataset.csv)
//! - `run`:     compensated_run.csv (reads esn_weights.json, dataset.csv)
//! - `predict`: prediction.csv (reads dataset.csv)
//! - `full`:    all of the above plus metrics.json
//! - `report`:  fig4.svg, fig5.svg from the CSVs

use std::path::PathBuf;

use resmpc_core::esn::EsnWeights;
use resmpc_core::experiment::{
    collect_phase, compensated_phase, metrics, openloop_predict, train_phase, Dataset,
    ExperimentConfig, Phase,
};

use crate::artifacts::{
    self, dataset_to_csv, metrics_to_json, parse_dataset_csv, parse_prediction_csv, parse_run_csv,
    prediction_to_csv, runlog_to_csv, training_report_to_json,
};
use crate::plot;
use crate::weights_io::{load_weights, save_weights};
use crate::CliError;

pub const DATASET_CSV: &str = "dataset.csv";
pub const NOMINAL_RUN_CSV: &str = "nominal_run.csv";
pub const COMPENSATED_RUN_CSV: &str = "compensated_run.csv";
pub const PREDICTION_CSV: &str = "prediction.csv";
pub const WEIGHTS_JSON: &str = "esn_weights.json";
pub const TRAINING_REPORT_JSON: &str = "training_report.json";
pub const METRICS_JSON: &str = "metrics.json";
pub const FIG4_SVG: &str = "fig4.svg";
pub const FIG5_SVG: &str = "fig5.svg";

/// Artifact locations inside one output directory.
pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, CliError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|source| CliError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        Ok(OutDir { dir })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.path(name);
        std::fs::write(&path, contents).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    fn read(&self, name: &str) -> Result<(String, String), CliError> {
        let path = self.path(name);
        let shown = path.display().to_string();
        if !path.exists() {
            return Err(CliError::MissingArtifact { path: shown });
        }
        let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io {
            path: shown.clone(),
            source,
        })?;
        Ok((text, shown))
    }
}

fn load_dataset(out: &OutDir, config: &ExperimentConfig) -> Result<Dataset, CliError> {
    let (text, shown) = out.read(DATASET_CSV)?;
    parse_dataset_csv(
        &text,
        &shown,
        artifacts::loaded_meta(Phase::Collect, config.seed, config.fingerprint()),
    )
}

pub fn cmd_collect(config: &ExperimentConfig, out: &OutDir) -> Result<(), CliError> {
    let (dataset, log) = collect_phase(config)?;
    out.write(DATASET_CSV, &dataset_to_csv(&dataset))?;
    out.write(NOMINAL_RUN_CSV, &runlog_to_csv(&log))?;
    Ok(())
}

pub fn cmd_train(config: &ExperimentConfig, out: &OutDir) -> Result<(), CliError> {
    let dataset = load_dataset(out, config)?;
    let (weights, report) = train_phase(config, &dataset)?;
    save_weights(&out.path(WEIGHTS_JSON), &weights)?;
    out.write(
        TRAINING_REPORT_JSON,
        &training_report_to_json(&report, config.seed, config.fingerprint()),
    )?;
    Ok(())
}

pub fn cmd_run(config: &ExperimentConfig, out: &OutDir) -> Result<(), CliError> {
    let weights = load_weights(&out.path(WEIGHTS_JSON))?;
    let dataset = load_dataset(out, config)?;
    let log = compensated_phase(config, &weights, &dataset)?;
    out.write(COMPENSATED_RUN_CSV, &runlog_to_csv(&log))?;
    Ok(())
}

pub fn cmd_predict(
    config: &ExperimentConfig,
    out: &OutDir,
    train_len: usize,
    horizon: usize,
) -> Result<(), CliError> {
    let dataset = load_dataset(out, config)?;
    let weights = EsnWeights::init(&config.seeded_esn_config())?;
    let table = openloop_predict(config, &weights, &dataset, train_len, horizon)?;
    out.write(PREDICTION_CSV, &prediction_to_csv(&table))?;
    Ok(())
}

/// Chains collect, train, run and predict in memory, then writes every
/// artifact plus the metrics summary.
pub fn cmd_full(
    config: &ExperimentConfig,
    out: &OutDir,
    train_len: usize,
    horizon: usize,
) -> Result<(), CliError> {
    let (dataset, nominal_log) = collect_phase(config)?;
    let (weights, report) = train_phase(config, &dataset)?;
    let compensated_log = compensated_phase(config, &weights, &dataset)?;
    let table = openloop_predict(config, &weights, &dataset, train_len, horizon)?;
    let summary = metrics(&nominal_log, &compensated_log)?;

    out.write(DATASET_CSV, &dataset_to_csv(&dataset))?;
    out.write(NOMINAL_RUN_CSV, &runlog_to_csv(&nominal_log))?;
    save_weights(&out.path(WEIGHTS_JSON), &weights)?;
    out.write(
        TRAINING_REPORT_JSON,
        &training_report_to_json(&report, config.seed, config.fingerprint()),
    )?;
    out.write(COMPENSATED_RUN_CSV, &runlog_to_csv(&compensated_log))?;
    out.write(PREDICTION_CSV, &prediction_to_csv(&table))?;
    out.write(METRICS_JSON, &metrics_to_json(&summary))?;
    Ok(())
}

pub fn cmd_report(config: &ExperimentConfig, out: &OutDir) -> Result<(), CliError> {
    let (nominal_text, nominal_path) = out.read(NOMINAL_RUN_CSV)?;
    let nominal = parse_run_csv(&nominal_text, &nominal_path)?;
    let (comp_text, comp_path) = out.read(COMPENSATED_RUN_CSV)?;
    let compensated = parse_run_csv(&comp_text, &comp_path)?;
    let (pred_text, pred_path) = out.read(PREDICTION_CSV)?;
    let table = parse_prediction_csv(&pred_text, &pred_path)?;

    out.write(
        FIG4_SVG,
        &plot::fig4(&nominal, &compensated, &config.mpc.reference),
    )?;
    out.write(FIG5_SVG, &plot::fig5(&table))?;
    Ok(())
}

/// Convenience used by tests: every artifact `full` is expected to leave
/// behind.
pub fn full_artifacts() -> [&'static str; 7] {
    [
        DATASET_CSV,
        NOMINAL_RUN_CSV,
        WEIGHTS_JSON,
        TRAINING_REPORT_JSON,
        COMPENSATED_RUN_CSV,
        PREDICTION_CSV,
        METRICS_JSON,
    ]
}
