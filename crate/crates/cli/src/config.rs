//! Experiment config files: plain `key = value` text, `#` comments, every
//! omitted key falling back to the benchmark default. Unknown keys are hard
//! errors so typos cannot silently run a different experiment.
//!
//! Keys:
//!
//! ```text
//! # plant                      # true plant residual
//! mass = 1.0                   residual = combined   # none | param_perturbation
//! damping = 0.5                true_mass = 1.0       #      | cubic_spring | combined
//! stiffness = 10.0             true_damping = 0.1
//! dt = 0.1                     true_stiffness = 14.0
//!                              alpha = 0.02
//! # controller                 # reservoir
//! horizon = 20                 reservoir_size = 1500
//! q_diag = 1.0, 0.1            leak_rate = 0.4
//! r = 0.1                      spectral_radius = 1.0
//! reference = 0.0, 0.0         degree = 3
//! terminal_mode = riccati      input_scale = 0.1
//! u_limit = 5.0   # optional   beta = 1e-4
//!                              washout = 30
//! # experiment
//! steps = 100
//! x0 = 10.0, 0.0
//! retrain_every = 10  # optional
//! seed = 42
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use resmpc_core::experiment::ExperimentConfig;
use resmpc_core::mpc::TerminalMode;
use resmpc_core::plant::{ResidualSpec, SpringDamperParams};

use crate::CliError;

const KNOWN_KEYS: &[&str] = &[
    "mass",
    "damping",
    "stiffness",
    "dt",
    "residual",
    "true_mass",
    "true_damping",
    "true_stiffness",
    "alpha",
    "horizon",
    "q_diag",
    "r",
    "reference",
    "terminal_mode",
    "u_limit",
    "reservoir_size",
    "leak_rate",
    "spectral_radius",
    "degree",
    "input_scale",
    "beta",
    "washout",
    "steps",
    "x0",
    "retrain_every",
    "seed",
];

fn config_err(path: &str, what: impl Into<String>) -> CliError {
    CliError::Config {
        path: path.to_string(),
        what: what.into(),
    }
}

/// Parses and validates a config file.
pub fn parse_config_file(path: &Path) -> Result<ExperimentConfig, CliError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: shown.clone(),
        source,
    })?;
    parse_config(&text, &shown)
}

/// Parses config text; `origin` names the source in error messages.
pub fn parse_config(text: &str, origin: &str) -> Result<ExperimentConfig, CliError> {
    let mut entries: BTreeMap<String, String> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(config_err(
                origin,
                format!("line {}: expected `key = value`", lineno + 1),
            ));
        };
        let key = key.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(config_err(origin, format!("unknown key `{key}`")));
        }
        if entries
            .insert(key.clone(), value.trim().to_string())
            .is_some()
        {
            return Err(config_err(origin, format!("duplicate key `{key}`")));
        }
    }
    build_config(&entries, origin)
}

fn parse_f64(
    entries: &BTreeMap<String, String>,
    key: &str,
    origin: &str,
    default: f64,
) -> Result<f64, CliError> {
    match entries.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse::<f64>()
            .map_err(|_| config_err(origin, format!("key `{key}`: invalid number `{v}`"))),
    }
}

fn parse_usize(
    entries: &BTreeMap<String, String>,
    key: &str,
    origin: &str,
    default: usize,
) -> Result<usize, CliError> {
    match entries.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse::<usize>()
            .map_err(|_| config_err(origin, format!("key `{key}`: invalid count `{v}`"))),
    }
}

fn parse_vec(
    entries: &BTreeMap<String, String>,
    key: &str,
    origin: &str,
    default: &[f64],
) -> Result<Vec<f64>, CliError> {
    match entries.get(key) {
        None => Ok(default.to_vec()),
        Some(v) => v
            .split(',')
            .map(|part| {
                part.trim().parse::<f64>().map_err(|_| {
                    config_err(origin, format!("key `{key}`: invalid number `{part}`"))
                })
            })
            .collect(),
    }
}

fn build_config(
    entries: &BTreeMap<String, String>,
    origin: &str,
) -> Result<ExperimentConfig, CliError> {
    let mut config = ExperimentConfig::benchmark();

    config.params = SpringDamperParams {
        mass: parse_f64(entries, "mass", origin, 1.0)?,
        damping: parse_f64(entries, "damping", origin, 0.5)?,
        stiffness: parse_f64(entries, "stiffness", origin, 10.0)?,
        dt: parse_f64(entries, "dt", origin, 0.1)?,
    };

    let true_params = SpringDamperParams {
        mass: parse_f64(entries, "true_mass", origin, 1.0)?,
        damping: parse_f64(entries, "true_damping", origin, 0.1)?,
        stiffness: parse_f64(entries, "true_stiffness", origin, 14.0)?,
        dt: config.params.dt,
    };
    let alpha = parse_f64(entries, "alpha", origin, 0.02)?;
    config.residual = match entries.get("residual").map(String::as_str) {
        None | Some("combined") => ResidualSpec::Combined { true_params, alpha },
        Some("none") => ResidualSpec::None,
        Some("param_perturbation") => ResidualSpec::ParamPerturbation { true_params },
        Some("cubic_spring") => ResidualSpec::CubicSpring { alpha },
        Some(other) => {
            return Err(config_err(
                origin,
                format!("key `residual`: unknown kind `{other}`"),
            ))
        }
    };

    config.mpc.horizon = parse_usize(entries, "horizon", origin, 20)?;
    config.mpc.q_diag = parse_vec(entries, "q_diag", origin, &[1.0, 0.1])?;
    config.mpc.r_scalar = parse_f64(entries, "r", origin, 0.1)?;
    config.mpc.reference = parse_vec(entries, "reference", origin, &[0.0, 0.0])?;
    config.mpc.terminal_mode = match entries.get("terminal_mode").map(String::as_str) {
        None | Some("riccati") => TerminalMode::Riccati,
        Some("q_copy") => TerminalMode::QCopy,
        Some(other) => {
            return Err(config_err(
                origin,
                format!("key `terminal_mode`: unknown mode `{other}`"),
            ))
        }
    };
    config.mpc.u_limit = match entries.get("u_limit") {
        None => None,
        Some(v) => Some(
            v.parse::<f64>()
                .map_err(|_| config_err(origin, format!("key `u_limit`: invalid number `{v}`")))?,
        ),
    };

    config.esn.reservoir_size = parse_usize(entries, "reservoir_size", origin, 1500)?;
    config.esn.leak_rate = parse_f64(entries, "leak_rate", origin, 0.4)?;
    config.esn.spectral_radius = parse_f64(entries, "spectral_radius", origin, 1.0)?;
    config.esn.degree = parse_usize(entries, "degree", origin, 3)?;
    config.esn.input_scale = parse_f64(entries, "input_scale", origin, 0.1)?;
    config.esn.beta = parse_f64(entries, "beta", origin, 1e-4)?;
    config.esn.washout = parse_usize(entries, "washout", origin, 30)?;

    config.sim_steps = parse_usize(entries, "steps", origin, 100)?;
    config.x0 = parse_vec(entries, "x0", origin, &[10.0, 0.0])?;
    config.retrain_every = match parse_usize(entries, "retrain_every", origin, 0)? {
        0 => None,
        n => Some(n),
    };
    config.seed = match entries.get("seed") {
        None => 42,
        Some(v) => v
            .parse::<u64>()
            .map_err(|_| config_err(origin, format!("key `seed`: invalid integer `{v}`")))?,
    };
    config.esn.seed = config.seed;

    config
        .validate()
        .map_err(|e| config_err(origin, e.to_string()))?;
    Ok(config)
}
