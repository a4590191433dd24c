//! Versioned JSON weight files.
//!
//! Dense matrices are stored as flat row-major arrays, the reservoir as
//! (row, col, value) triplets, together with the config that produced them.
//! serde_json emits the shortest decimal that parses back to the identical
//! f64 bits, so files round-trip bitwise.

use std::path::Path;

use serde::{Deserialize, Serialize};

use resmpc_core::esn::{EsnConfig, EsnWeights, SparseMat};
use resmpc_core::Mat;

use crate::CliError;

pub const WEIGHTS_FORMAT: &str = "resmpc-esn-weights";
pub const WEIGHTS_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct MatJson {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl From<&Mat> for MatJson {
    fn from(m: &Mat) -> Self {
        MatJson {
            rows: m.rows(),
            cols: m.cols(),
            data: m.data().to_vec(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct EsnConfigJson {
    reservoir_size: usize,
    input_dim: usize,
    output_dim: usize,
    leak_rate: f64,
    spectral_radius: f64,
    degree: usize,
    input_scale: f64,
    beta: f64,
    washout: usize,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct WeightsFile {
    format: String,
    version: u32,
    config: EsnConfigJson,
    w_in: MatJson,
    w_res_size: usize,
    w_res_triplets: Vec<(usize, usize, f64)>,
    w_out: MatJson,
    trained: bool,
}

pub fn weights_to_json(weights: &EsnWeights) -> String {
    let c = weights.config();
    let file = WeightsFile {
        format: WEIGHTS_FORMAT.to_string(),
        version: WEIGHTS_VERSION,
        config: EsnConfigJson {
            reservoir_size: c.reservoir_size,
            input_dim: c.input_dim,
            output_dim: c.output_dim,
            leak_rate: c.leak_rate,
            spectral_radius: c.spectral_radius,
            degree: c.degree,
            input_scale: c.input_scale,
            beta: c.beta,
            washout: c.washout,
            seed: c.seed,
        },
        w_in: MatJson::from(weights.w_in()),
        w_res_size: weights.w_res().size(),
        w_res_triplets: weights.w_res().triplets().to_vec(),
        w_out: MatJson::from(weights.w_out()),
        trained: weights.is_trained(),
    };
    let mut s = serde_json::to_string(&file).expect("serializable");
    s.push('\n');
    s
}

pub fn weights_from_json(text: &str, path: &str) -> Result<EsnWeights, CliError> {
    let file: WeightsFile = serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: path.to_string(),
        what: e.to_string(),
    })?;
    if file.format != WEIGHTS_FORMAT {
        return Err(CliError::Parse {
            path: path.to_string(),
            what: format!("unknown format `{}`", file.format),
        });
    }
    if file.version != WEIGHTS_VERSION {
        return Err(CliError::Parse {
            path: path.to_string(),
            what: format!("unsupported version {}", file.version),
        });
    }
    let config = EsnConfig {
        reservoir_size: file.config.reservoir_size,
        input_dim: file.config.input_dim,
        output_dim: file.config.output_dim,
        leak_rate: file.config.leak_rate,
        spectral_radius: file.config.spectral_radius,
        degree: file.config.degree,
        input_scale: file.config.input_scale,
        beta: file.config.beta,
        washout: file.config.washout,
        seed: file.config.seed,
    };
    let mk_mat = |m: MatJson, what: &str| {
        Mat::new(m.rows, m.cols, m.data).map_err(|e| CliError::Parse {
            path: path.to_string(),
            what: format!("{what}: {e}"),
        })
    };
    let w_in = mk_mat(file.w_in, "w_in")?;
    let w_out = mk_mat(file.w_out, "w_out")?;
    let w_res = SparseMat::new(file.w_res_size, file.w_res_triplets);
    Ok(EsnWeights::from_parts(
        config,
        w_in,
        w_res,
        w_out,
        file.trained,
    )?)
}

pub fn save_weights(path: &Path, weights: &EsnWeights) -> Result<(), CliError> {
    std::fs::write(path, weights_to_json(weights)).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_weights(path: &Path) -> Result<EsnWeights, CliError> {
    let shown = path.display().to_string();
    if !path.exists() {
        return Err(CliError::MissingArtifact { path: shown });
    }
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: shown.clone(),
        source,
    })?;
    weights_from_json(&text, &shown)
}
