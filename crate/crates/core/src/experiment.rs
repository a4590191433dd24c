//! Two-phase pipeline: closed-loop data collection under nominal MPC on the
//! true plant, offline readout training on the collected residual pairs, and
//! a second closed loop where the trained network compensates the prediction
//! model inside the controller. Also carries the open-loop prediction
//! experiment, per-run logs and the comparison metrics.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::esn::{EsnConfig, EsnError, EsnState, EsnWeights};
use crate::linalg::{LinalgError, Mat};
use crate::mpc::{self, CompensationSequence, MpcConfig, MpcError, MpcProblem};
use crate::plant::{
    discretize, nominal_step, true_step, PlantError, ResidualSelector, ResidualSpec,
    SpringDamperParams,
};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("invalid experiment config: {what}")]
    ConfigInvalid { what: &'static str },
    #[error("closed loop diverged at step {step}")]
    Diverged { step: usize },
    #[error("dataset length {len} must exceed washout {washout}")]
    DatasetTooShort { len: usize, washout: usize },
    #[error("train_len {train_len} + horizon {horizon} exceeds dataset length {len}")]
    SplitTooLong {
        train_len: usize,
        horizon: usize,
        len: usize,
    },
    #[error("run logs have different lengths: {left} vs {right}")]
    LogLengthMismatch { left: usize, right: usize },
    #[error(transparent)]
    Esn(#[from] EsnError),
    #[error(transparent)]
    Mpc(#[from] MpcError),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Everything one experiment run needs. The experiment `seed` overrides the
/// nested ESN seed at run time so one knob controls all randomness.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub params: SpringDamperParams,
    pub residual: ResidualSpec,
    pub selector: ResidualSelector,
    pub esn: EsnConfig,
    pub mpc: MpcConfig,
    pub sim_steps: usize,
    pub x0: Vec<f64>,
    pub retrain_every: Option<usize>,
    pub seed: u64,
}

impl ExperimentConfig {
    /// The benchmark experiment: benchmark plant, controller and residual,
    /// 100 steps from x0 = [10, 0].
    pub fn benchmark() -> Self {
        let selector = ResidualSelector::benchmark(2, 1);
        let esn = EsnConfig::benchmark(selector.regressor_dim(), selector.residual_dim());
        ExperimentConfig {
            params: SpringDamperParams::benchmark(),
            residual: ResidualSpec::benchmark(),
            selector,
            esn,
            mpc: MpcConfig::benchmark(),
            sim_steps: 100,
            x0: vec![10.0, 0.0],
            retrain_every: None,
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.params.validate()?;
        self.residual.validate()?;
        self.esn.validate()?;
        self.mpc.validate()?;
        if self.x0.len() != 2 {
            return Err(ExperimentError::ConfigInvalid {
                what: "x0 must have dimension 2",
            });
        }
        if self.sim_steps < self.esn.washout + 2 {
            return Err(ExperimentError::ConfigInvalid {
                what: "sim_steps must be at least washout + 2",
            });
        }
        if self.esn.input_dim != self.selector.regressor_dim() {
            return Err(ExperimentError::ConfigInvalid {
                what: "esn input_dim must equal the selector regressor dimension",
            });
        }
        if self.esn.output_dim != self.selector.residual_dim() {
            return Err(ExperimentError::ConfigInvalid {
                what: "esn output_dim must equal the selector residual dimension",
            });
        }
        match &self.residual {
            ResidualSpec::ParamPerturbation { true_params }
            | ResidualSpec::Combined { true_params, .. }
                if true_params.dt != self.params.dt =>
            {
                return Err(ExperimentError::ConfigInvalid {
                    what: "true plant dt must equal the nominal dt",
                });
            }
            _ => {}
        }
        if let Some(0) = self.retrain_every {
            return Err(ExperimentError::ConfigInvalid {
                what: "retrain_every must be positive when set",
            });
        }
        Ok(())
    }

    /// ESN config with the experiment seed substituted in.
    pub fn seeded_esn_config(&self) -> EsnConfig {
        let mut cfg = self.esn.clone();
        cfg.seed = self.seed;
        cfg
    }

    /// FNV-1a hash over every field; identifies the config in dataset
    /// metadata and artifact headers.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv::new();
        for v in [
            self.params.mass,
            self.params.damping,
            self.params.stiffness,
            self.params.dt,
        ] {
            h.write_f64(v);
        }
        match &self.residual {
            ResidualSpec::None => h.write_u64(0),
            ResidualSpec::ParamPerturbation { true_params } => {
                h.write_u64(1);
                h.write_f64(true_params.mass);
                h.write_f64(true_params.damping);
                h.write_f64(true_params.stiffness);
                h.write_f64(true_params.dt);
            }
            ResidualSpec::CubicSpring { alpha } => {
                h.write_u64(2);
                h.write_f64(*alpha);
            }
            ResidualSpec::Combined { true_params, alpha } => {
                h.write_u64(3);
                h.write_f64(true_params.mass);
                h.write_f64(true_params.damping);
                h.write_f64(true_params.stiffness);
                h.write_f64(true_params.dt);
                h.write_f64(*alpha);
            }
        }
        for m in [self.selector.b_n(), self.selector.b_z()] {
            h.write_u64(m.rows() as u64);
            h.write_u64(m.cols() as u64);
            for &v in m.data() {
                h.write_f64(v);
            }
        }
        h.write_u64(self.esn.reservoir_size as u64);
        h.write_u64(self.esn.input_dim as u64);
        h.write_u64(self.esn.output_dim as u64);
        h.write_f64(self.esn.leak_rate);
        h.write_f64(self.esn.spectral_radius);
        h.write_u64(self.esn.degree as u64);
        h.write_f64(self.esn.input_scale);
        h.write_f64(self.esn.beta);
        h.write_u64(self.esn.washout as u64);
        h.write_u64(self.mpc.horizon as u64);
        for &v in &self.mpc.q_diag {
            h.write_f64(v);
        }
        h.write_f64(self.mpc.r_scalar);
        for &v in &self.mpc.reference {
            h.write_f64(v);
        }
        h.write_u64(match self.mpc.terminal_mode {
            mpc::TerminalMode::Riccati => 0,
            mpc::TerminalMode::QCopy => 1,
        });
        h.write_f64(self.mpc.u_limit.unwrap_or(f64::NEG_INFINITY));
        h.write_u64(self.sim_steps as u64);
        for &v in &self.x0 {
            h.write_f64(v);
        }
        h.write_u64(self.retrain_every.map(|v| v as u64 + 1).unwrap_or(0));
        h.write_u64(self.seed);
        h.finish()
    }
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }
    fn write_u64(&mut self, v: u64) {
        for byte in v.to_le_bytes() {
            self.0 ^= byte as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    fn write_f64(&mut self, v: f64) {
        self.write_u64(v.to_bits());
    }
    fn finish(&self) -> u64 {
        self.0
    }
}

/// Which pipeline phase produced a dataset or log.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Collect,
    Compensated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetMeta {
    pub phase: Phase,
    pub seed: u64,
    pub config_hash: u64,
}

/// Ordered training pairs (z(k), mu(k+1)); `mu` is already mapped through
/// the selector pseudo-inverse, so it lives in residual space.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub pairs: Vec<(Vec<f64>, Vec<f64>)>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn regressors(&self) -> Vec<Vec<f64>> {
        self.pairs.iter().map(|(z, _)| z.clone()).collect()
    }
}

/// One closed-loop step: state at time k, the applied input, the prediction
/// the controller's model made for k+1 (nominal in the collection phase,
/// nominal + compensation in the compensated phase), the realized one-step
/// model error and the stage cost.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    pub t: f64,
    pub x_true: Vec<f64>,
    pub x_model_pred: Vec<f64>,
    pub u: Vec<f64>,
    pub mu: Vec<f64>,
    pub stage_cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub cumulative_cost: f64,
    pub rms_model_error: f64,
    pub final_state: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunLog {
    pub records: Vec<StepRecord>,
    pub summary: RunSummary,
}

impl RunLog {
    fn from_records(records: Vec<StepRecord>, final_state: Vec<f64>) -> Self {
        let cumulative_cost = records.iter().map(|r| r.stage_cost).sum();
        let mean_sq = records
            .iter()
            .map(|r| r.mu.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            / records.len() as f64;
        RunLog {
            records,
            summary: RunSummary {
                cumulative_cost,
                rms_model_error: libm::sqrt(mean_sq),
                final_state,
            },
        }
    }
}

/// Readout training quality on its own training set.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingReport {
    pub pairs_used: usize,
    pub washout: usize,
    pub nrmse_per_dim: Vec<f64>,
    /// Worst per-dimension NRMSE.
    pub nrmse: f64,
}

/// A non-finite solve means the closed-loop state blew up; report it as
/// divergence at the offending step rather than a bare solver error.
fn step_or_diverged<T>(result: Result<T, MpcError>, step: usize) -> Result<T, ExperimentError> {
    match result {
        Err(MpcError::NonFiniteSolution) => Err(ExperimentError::Diverged { step }),
        other => Ok(other?),
    }
}

/// Phase 1: closed loop under nominal MPC on the true plant, recording the
/// regressor/residual training pairs and the run log.
pub fn collect_phase(config: &ExperimentConfig) -> Result<(Dataset, RunLog), ExperimentError> {
    config.validate()?;
    let model = discretize(&config.params);
    let problem = MpcProblem::new(&model, &config.mpc)?;
    let zero_comp = CompensationSequence::zeros(config.mpc.horizon, model.state_dim());
    let dt = config.params.dt;

    let mut x = config.x0.clone();
    let mut pairs = Vec::with_capacity(config.sim_steps);
    let mut records = Vec::with_capacity(config.sim_steps);
    for k in 0..config.sim_steps {
        let (u, _) = step_or_diverged(problem.step(&x, &zero_comp), k)?;
        let x_nom_next = nominal_step(&model, &x, &u);
        let x_true_next = true_step(&config.residual, &model, &x, &u);
        if !x_true_next.iter().all(|v| v.is_finite()) {
            return Err(ExperimentError::Diverged { step: k });
        }
        let mu: Vec<f64> = x_true_next
            .iter()
            .zip(&x_nom_next)
            .map(|(t, n)| t - n)
            .collect();
        pairs.push((
            config.selector.regressor(&x, &u),
            config.selector.residual_target(&x_true_next, &x_nom_next),
        ));
        records.push(StepRecord {
            k,
            t: k as f64 * dt,
            stage_cost: mpc::stage_cost(&config.mpc, &x, &u),
            x_true: x.clone(),
            x_model_pred: x_nom_next,
            u,
            mu,
        });
        x = x_true_next;
    }
    let dataset = Dataset {
        pairs,
        meta: DatasetMeta {
            phase: Phase::Collect,
            seed: config.seed,
            config_hash: config.fingerprint(),
        },
    };
    Ok((dataset, RunLog::from_records(records, x)))
}

/// Builds the aligned target matrix for pairs `washout..`: target column t
/// pairs with the harvested state produced after consuming z(t).
fn target_matrix(pairs: &[(Vec<f64>, Vec<f64>)], washout: usize, n_out: usize) -> Mat {
    let cols = pairs.len() - washout;
    Mat::from_fn(n_out, cols, |r, c| pairs[washout + c].1[r])
}

fn fit_on_pairs(
    weights: &EsnWeights,
    pairs: &[(Vec<f64>, Vec<f64>)],
    washout: usize,
    beta: f64,
) -> Result<(EsnWeights, TrainingReport), ExperimentError> {
    if pairs.len() <= washout {
        return Err(ExperimentError::DatasetTooShort {
            len: pairs.len(),
            washout,
        });
    }
    let inputs: Vec<Vec<f64>> = pairs.iter().map(|(z, _)| z.clone()).collect();
    let harvested = weights.harvest(&inputs, washout)?;
    let n_out = weights.config().output_dim;
    let targets = target_matrix(pairs, washout, n_out);
    let trained = weights.fit_readout(&harvested, &targets, beta)?;

    let fitted = trained.w_out().matmul(&harvested)?;
    let mut nrmse_per_dim = Vec::with_capacity(n_out);
    for dim in 0..n_out {
        let k = targets.cols();
        let mut err2 = 0.0;
        let mut mean = 0.0;
        for c in 0..k {
            let e = fitted[(dim, c)] - targets[(dim, c)];
            err2 += e * e;
            mean += targets[(dim, c)];
        }
        mean /= k as f64;
        let mut var = 0.0;
        for c in 0..k {
            let d = targets[(dim, c)] - mean;
            var += d * d;
        }
        nrmse_per_dim.push(nrmse_from_parts(err2, var, k));
    }
    let nrmse = nrmse_per_dim.iter().fold(0.0f64, |m, &v| m.max(v));
    let report = TrainingReport {
        pairs_used: pairs.len(),
        washout,
        nrmse_per_dim,
        nrmse,
    };
    Ok((trained, report))
}

/// RMS error over std of the target series; falls back to the plain RMS when
/// the target series is (numerically) constant.
fn nrmse_from_parts(err2: f64, var: f64, count: usize) -> f64 {
    let rms = libm::sqrt(err2 / count as f64);
    let std = libm::sqrt(var / count as f64);
    if std > 1e-12 {
        rms / std
    } else {
        rms
    }
}

/// Offline training: seeds the reservoir, harvests states over the recorded
/// regressor sequence and fits the readout against the aligned residual
/// targets.
pub fn train_phase(
    config: &ExperimentConfig,
    dataset: &Dataset,
) -> Result<(EsnWeights, TrainingReport), ExperimentError> {
    config.validate()?;
    let weights = EsnWeights::init(&config.seeded_esn_config())?;
    fit_on_pairs(
        &weights,
        &dataset.pairs,
        config.esn.washout,
        config.esn.beta,
    )
}

/// Phase 2: closed loop with the trained network compensating the prediction
/// model. The persistent reservoir state advances once per control step,
/// before the solve, with the regressor built from the current measured state
/// and the last applied input (zero input at k = 0). When `retrain_every` is
/// set the readout is refit at that cadence on the prior pairs plus all
/// pairs collected so far.
pub fn compensated_phase(
    config: &ExperimentConfig,
    weights: &EsnWeights,
    prior: &Dataset,
) -> Result<RunLog, ExperimentError> {
    config.validate()?;
    let model = discretize(&config.params);
    let problem = MpcProblem::new(&model, &config.mpc)?;
    let dt = config.params.dt;
    let horizon = config.mpc.horizon;
    let n_u = model.input_dim();

    let mut weights = weights.clone();
    let mut accumulated = prior.pairs.clone();
    let mut esn_state = EsnState::zero(config.esn.reservoir_size);
    let mut x = config.x0.clone();
    let mut prev_u = vec![0.0; n_u];
    let mut records = Vec::with_capacity(config.sim_steps);

    for k in 0..config.sim_steps {
        let z_feed = config.selector.regressor(&x, &prev_u);
        let (d_hat, next_state) = weights.predict(&esn_state, &z_feed)?;
        esn_state = next_state;
        let comp_vec = config.selector.to_state_space(&d_hat);
        let comp = CompensationSequence::constant(comp_vec.clone(), horizon);

        let (u, _) = step_or_diverged(problem.step(&x, &comp), k)?;
        let x_nom_next = nominal_step(&model, &x, &u);
        let x_model_next: Vec<f64> = x_nom_next
            .iter()
            .zip(&comp_vec)
            .map(|(n, d)| n + d)
            .collect();
        let x_true_next = true_step(&config.residual, &model, &x, &u);
        if !x_true_next.iter().all(|v| v.is_finite()) {
            return Err(ExperimentError::Diverged { step: k });
        }
        let mu: Vec<f64> = x_true_next
            .iter()
            .zip(&x_model_next)
            .map(|(t, p)| t - p)
            .collect();
        accumulated.push((
            config.selector.regressor(&x, &u),
            config.selector.residual_target(&x_true_next, &x_nom_next),
        ));
        records.push(StepRecord {
            k,
            t: k as f64 * dt,
            stage_cost: mpc::stage_cost(&config.mpc, &x, &u),
            x_true: x.clone(),
            x_model_pred: x_model_next,
            u: u.clone(),
            mu,
        });
        prev_u = u;
        x = x_true_next;

        if let Some(every) = config.retrain_every {
            if (k + 1) % every == 0 && accumulated.len() > config.esn.washout {
                let (retrained, _) =
                    fit_on_pairs(&weights, &accumulated, config.esn.washout, config.esn.beta)?;
                weights = retrained;
            }
        }
    }
    Ok(RunLog::from_records(records, x))
}

/// One open-loop prediction row: time index, measured residual, prediction.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionRow {
    pub k: usize,
    pub mu_true: Vec<f64>,
    pub mu_pred: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionTable {
    pub rows: Vec<PredictionRow>,
}

impl PredictionTable {
    /// Held-out NRMSE per residual dimension.
    pub fn nrmse_per_dim(&self) -> Vec<f64> {
        if self.rows.is_empty() {
            return Vec::new();
        }
        let dims = self.rows[0].mu_true.len();
        let count = self.rows.len();
        let mut out = Vec::with_capacity(dims);
        for dim in 0..dims {
            let mut err2 = 0.0;
            let mut mean = 0.0;
            for row in &self.rows {
                let e = row.mu_pred[dim] - row.mu_true[dim];
                err2 += e * e;
                mean += row.mu_true[dim];
            }
            mean /= count as f64;
            let mut var = 0.0;
            for row in &self.rows {
                let d = row.mu_true[dim] - mean;
                var += d * d;
            }
            out.push(nrmse_from_parts(err2, var, count));
        }
        out
    }
}

/// Fits the readout on the first `train_len` pairs, then predicts the next
/// `horizon` residuals teacher-forced on the recorded regressors.
pub fn openloop_predict(
    config: &ExperimentConfig,
    weights: &EsnWeights,
    dataset: &Dataset,
    train_len: usize,
    horizon: usize,
) -> Result<PredictionTable, ExperimentError> {
    let washout = config.esn.washout;
    if train_len + horizon > dataset.len() {
        return Err(ExperimentError::SplitTooLong {
            train_len,
            horizon,
            len: dataset.len(),
        });
    }
    if train_len <= washout {
        return Err(ExperimentError::DatasetTooShort {
            len: train_len,
            washout,
        });
    }
    let (trained, _) = fit_on_pairs(
        &weights.clone(),
        &dataset.pairs[..train_len],
        washout,
        config.esn.beta,
    )?;

    // replay the reservoir through the training prefix, then continue
    // teacher-forced over the held-out regressors
    let mut state = EsnState::zero(config.esn.reservoir_size);
    for (z, _) in &dataset.pairs[..train_len] {
        state = trained.step(&state, z)?;
    }
    let mut rows = Vec::with_capacity(horizon);
    for j in 0..horizon {
        let t = train_len + j;
        let (y, next) = trained.predict(&state, &dataset.pairs[t].0)?;
        state = next;
        rows.push(PredictionRow {
            k: t,
            mu_true: dataset.pairs[t].1.clone(),
            mu_pred: y,
        });
    }
    Ok(PredictionTable { rows })
}

/// State bound used for the settling-step metric.
pub const SETTLING_BOUND: f64 = 0.1;

/// Comparison summary between the nominal and compensated runs. Field names
/// match the metrics JSON keys.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsSummary {
    pub nominal_cost: f64,
    pub compensated_cost: f64,
    pub cost_ratio: f64,
    pub nominal_rms_mu: f64,
    pub compensated_rms_mu: f64,
    pub error_ratio: f64,
    pub settling_step_nominal: Option<usize>,
    pub settling_step_compensated: Option<usize>,
}

fn settling_step(log: &RunLog) -> Option<usize> {
    let inf_norm = |x: &[f64]| x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if inf_norm(&log.summary.final_state) >= SETTLING_BOUND {
        return None;
    }
    let mut step = None;
    for record in log.records.iter().rev() {
        if inf_norm(&record.x_true) < SETTLING_BOUND {
            step = Some(record.k);
        } else {
            break;
        }
    }
    step
}

/// Quantifies the benefit of compensation: cumulative costs, one-step model
/// error RMS of each phase's model, their ratios and the settling steps.
pub fn metrics(
    nominal_log: &RunLog,
    compensated_log: &RunLog,
) -> Result<MetricsSummary, ExperimentError> {
    if nominal_log.records.len() != compensated_log.records.len() {
        return Err(ExperimentError::LogLengthMismatch {
            left: nominal_log.records.len(),
            right: compensated_log.records.len(),
        });
    }
    let nominal_cost = nominal_log.summary.cumulative_cost;
    let compensated_cost = compensated_log.summary.cumulative_cost;
    let nominal_rms_mu = nominal_log.summary.rms_model_error;
    let compensated_rms_mu = compensated_log.summary.rms_model_error;
    Ok(MetricsSummary {
        nominal_cost,
        compensated_cost,
        cost_ratio: compensated_cost / nominal_cost,
        nominal_rms_mu,
        compensated_rms_mu,
        error_ratio: compensated_rms_mu / nominal_rms_mu,
        settling_step_nominal: settling_step(nominal_log),
        settling_step_compensated: settling_step(compensated_log),
    })
}
