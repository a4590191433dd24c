//! CSV and JSON artifact formats.
//!
//! Run logs: `k,t,s_true,v_true,s_nom,v_nom,u,mu_s,mu_v,stage_cost`.
//! Datasets: `k,z1..zn,mu1..mun`. Predictions:
//! `k,mu_true_s,mu_true_v,mu_pred_s,mu_pred_v`. Floats are written with the
//! shortest representation that parses back to the identical bits, so
//! serialize -> parse -> serialize is byte-stable.

use serde::{Deserialize, Serialize};

use resmpc_core::experiment::{
    Dataset, DatasetMeta, MetricsSummary, Phase, PredictionRow, PredictionTable, RunLog,
    TrainingReport,
};

use crate::CliError;

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn parse_field(path: &str, line: usize, field: &str) -> Result<f64, CliError> {
    field.trim().parse::<f64>().map_err(|_| CliError::Parse {
        path: path.to_string(),
        what: format!("line {line}: invalid number `{field}`"),
    })
}

/// Column labels for a residual/regressor dimension count; the benchmark
/// two-dimensional case uses the documented s/v names.
fn mu_labels(n: usize, prefix: &str) -> Vec<String> {
    if n == 2 {
        vec![format!("{prefix}_s"), format!("{prefix}_v")]
    } else {
        (1..=n).map(|i| format!("{prefix}_{i}")).collect()
    }
}

pub fn runlog_to_csv(log: &RunLog) -> String {
    let mut out = String::from("k,t,s_true,v_true,s_nom,v_nom,u,mu_s,mu_v,stage_cost\n");
    for r in &log.records {
        let row = [
            r.k.to_string(),
            fmt_f64(r.t),
            fmt_f64(r.x_true[0]),
            fmt_f64(r.x_true[1]),
            fmt_f64(r.x_model_pred[0]),
            fmt_f64(r.x_model_pred[1]),
            fmt_f64(r.u[0]),
            fmt_f64(r.mu[0]),
            fmt_f64(r.mu[1]),
            fmt_f64(r.stage_cost),
        ];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parsed run-log rows; enough to re-render figures and re-serialize.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRow {
    pub k: usize,
    pub t: f64,
    pub s_true: f64,
    pub v_true: f64,
    pub s_nom: f64,
    pub v_nom: f64,
    pub u: f64,
    pub mu_s: f64,
    pub mu_v: f64,
    pub stage_cost: f64,
}

pub fn parse_run_csv(text: &str, path: &str) -> Result<Vec<RunRow>, CliError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CliError::Parse {
        path: path.to_string(),
        what: "empty file".to_string(),
    })?;
    if header != "k,t,s_true,v_true,s_nom,v_nom,u,mu_s,mu_v,stage_cost" {
        return Err(CliError::Parse {
            path: path.to_string(),
            what: format!("unexpected header `{header}`"),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(CliError::Parse {
                path: path.to_string(),
                what: format!("line {}: expected 10 fields, got {}", i + 2, f.len()),
            });
        }
        let lineno = i + 2;
        rows.push(RunRow {
            k: f[0].parse().map_err(|_| CliError::Parse {
                path: path.to_string(),
                what: format!("line {lineno}: invalid index `{}`", f[0]),
            })?,
            t: parse_field(path, lineno, f[1])?,
            s_true: parse_field(path, lineno, f[2])?,
            v_true: parse_field(path, lineno, f[3])?,
            s_nom: parse_field(path, lineno, f[4])?,
            v_nom: parse_field(path, lineno, f[5])?,
            u: parse_field(path, lineno, f[6])?,
            mu_s: parse_field(path, lineno, f[7])?,
            mu_v: parse_field(path, lineno, f[8])?,
            stage_cost: parse_field(path, lineno, f[9])?,
        });
    }
    Ok(rows)
}

pub fn runrows_to_csv(rows: &[RunRow]) -> String {
    let mut out = String::from("k,t,s_true,v_true,s_nom,v_nom,u,mu_s,mu_v,stage_cost\n");
    for r in rows {
        let row = [
            r.k.to_string(),
            fmt_f64(r.t),
            fmt_f64(r.s_true),
            fmt_f64(r.v_true),
            fmt_f64(r.s_nom),
            fmt_f64(r.v_nom),
            fmt_f64(r.u),
            fmt_f64(r.mu_s),
            fmt_f64(r.mu_v),
            fmt_f64(r.stage_cost),
        ];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn dataset_to_csv(dataset: &Dataset) -> String {
    let (n_z, n_mu) = dataset
        .pairs
        .first()
        .map(|(z, mu)| (z.len(), mu.len()))
        .unwrap_or((0, 0));
    let mut header = vec!["k".to_string()];
    header.extend((1..=n_z).map(|i| format!("z{i}")));
    header.extend((1..=n_mu).map(|i| format!("mu{i}")));
    let mut out = header.join(",");
    out.push('\n');
    for (k, (z, mu)) in dataset.pairs.iter().enumerate() {
        let mut row = vec![k.to_string()];
        row.extend(z.iter().map(|v| fmt_f64(*v)));
        row.extend(mu.iter().map(|v| fmt_f64(*v)));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parses a dataset CSV back into training pairs. The dimensions come from
/// the header; phase/seed metadata is supplied by the caller since the CSV
/// carries only the pairs.
pub fn parse_dataset_csv(text: &str, path: &str, meta: DatasetMeta) -> Result<Dataset, CliError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CliError::Parse {
        path: path.to_string(),
        what: "empty file".to_string(),
    })?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"k") {
        return Err(CliError::Parse {
            path: path.to_string(),
            what: format!("unexpected header `{header}`"),
        });
    }
    let n_z = cols.iter().filter(|c| c.starts_with('z')).count();
    let n_mu = cols.iter().filter(|c| c.starts_with("mu")).count();
    if 1 + n_z + n_mu != cols.len() || n_z == 0 || n_mu == 0 {
        return Err(CliError::Parse {
            path: path.to_string(),
            what: format!("unexpected header `{header}`"),
        });
    }
    let mut pairs = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let lineno = i + 2;
        if f.len() != cols.len() {
            return Err(CliError::Parse {
                path: path.to_string(),
                what: format!(
                    "line {lineno}: expected {} fields, got {}",
                    cols.len(),
                    f.len()
                ),
            });
        }
        let z = f[1..1 + n_z]
            .iter()
            .map(|v| parse_field(path, lineno, v))
            .collect::<Result<Vec<f64>, CliError>>()?;
        let mu = f[1 + n_z..]
            .iter()
            .map(|v| parse_field(path, lineno, v))
            .collect::<Result<Vec<f64>, CliError>>()?;
        pairs.push((z, mu));
    }
    Ok(Dataset { pairs, meta })
}

pub fn prediction_to_csv(table: &PredictionTable) -> String {
    let n = table.rows.first().map(|r| r.mu_true.len()).unwrap_or(2);
    let mut header = vec!["k".to_string()];
    header.extend(mu_labels(n, "mu_true"));
    header.extend(mu_labels(n, "mu_pred"));
    let mut out = header.join(",");
    out.push('\n');
    for r in &table.rows {
        let mut row = vec![r.k.to_string()];
        row.extend(r.mu_true.iter().map(|v| fmt_f64(*v)));
        row.extend(r.mu_pred.iter().map(|v| fmt_f64(*v)));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_prediction_csv(text: &str, path: &str) -> Result<PredictionTable, CliError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CliError::Parse {
        path: path.to_string(),
        what: "empty file".to_string(),
    })?;
    let cols: Vec<&str> = header.split(',').collect();
    let n_true = cols.iter().filter(|c| c.starts_with("mu_true")).count();
    let n_pred = cols.iter().filter(|c| c.starts_with("mu_pred")).count();
    if cols.first() != Some(&"k") || n_true == 0 || n_true != n_pred {
        return Err(CliError::Parse {
            path: path.to_string(),
            what: format!("unexpected header `{header}`"),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let lineno = i + 2;
        if f.len() != 1 + 2 * n_true {
            return Err(CliError::Parse {
                path: path.to_string(),
                what: format!("line {lineno}: wrong field count"),
            });
        }
        rows.push(PredictionRow {
            k: f[0].parse().map_err(|_| CliError::Parse {
                path: path.to_string(),
                what: format!("line {lineno}: invalid index `{}`", f[0]),
            })?,
            mu_true: f[1..1 + n_true]
                .iter()
                .map(|v| parse_field(path, lineno, v))
                .collect::<Result<_, _>>()?,
            mu_pred: f[1 + n_true..]
                .iter()
                .map(|v| parse_field(path, lineno, v))
                .collect::<Result<_, _>>()?,
        });
    }
    Ok(PredictionTable { rows })
}

/// Metrics summary with the documented stable key names.
#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct MetricsJson {
    pub nominal_cost: f64,
    pub compensated_cost: f64,
    pub cost_ratio: f64,
    pub nominal_rms_mu: f64,
    pub compensated_rms_mu: f64,
    pub error_ratio: f64,
    pub settling_step_nominal: Option<usize>,
    pub settling_step_compensated: Option<usize>,
}

impl From<&MetricsSummary> for MetricsJson {
    fn from(m: &MetricsSummary) -> Self {
        MetricsJson {
            nominal_cost: m.nominal_cost,
            compensated_cost: m.compensated_cost,
            cost_ratio: m.cost_ratio,
            nominal_rms_mu: m.nominal_rms_mu,
            compensated_rms_mu: m.compensated_rms_mu,
            error_ratio: m.error_ratio,
            settling_step_nominal: m.settling_step_nominal,
            settling_step_compensated: m.settling_step_compensated,
        }
    }
}

pub fn metrics_to_json(m: &MetricsSummary) -> String {
    let mut s = serde_json::to_string_pretty(&MetricsJson::from(m)).expect("serializable");
    s.push('\n');
    s
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct TrainingReportJson {
    pub pairs_used: usize,
    pub washout: usize,
    pub nrmse_per_dim: Vec<f64>,
    pub nrmse: f64,
    pub seed: u64,
    pub config_hash: String,
}

pub fn training_report_to_json(report: &TrainingReport, seed: u64, config_hash: u64) -> String {
    let mut s = serde_json::to_string_pretty(&TrainingReportJson {
        pairs_used: report.pairs_used,
        washout: report.washout,
        nrmse_per_dim: report.nrmse_per_dim.clone(),
        nrmse: report.nrmse,
        seed,
        config_hash: format!("{config_hash:016x}"),
    })
    .expect("serializable");
    s.push('\n');
    s
}

/// Dataset metadata for CSVs loaded from disk.
pub fn loaded_meta(phase: Phase, seed: u64, config_hash: u64) -> DatasetMeta {
    DatasetMeta {
        phase,
        seed,
        config_hash,
    }
}
