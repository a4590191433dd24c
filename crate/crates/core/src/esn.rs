//! Echo State Network core.
//!
//! The reservoir is a fixed sparse random recurrent matrix and a fixed dense
//! input matrix, both fully determined by the config seed. Only the linear
//! readout is trained, by a regularized least-squares solve over harvested
//! reservoir states. The state update is the leaky form
//!
//! `s(t+1) = (1 - gamma) * s(t) + gamma * tanh(W_res s(t) + W_in z(t))`
//!
//! and the readout sees the reservoir state plus a constant bias entry.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::linalg::{self, LinalgError, Mat};
use crate::rng::Rng;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum EsnError {
    #[error("invalid config: {field} {why}")]
    InvalidConfig {
        field: &'static str,
        why: &'static str,
    },
    #[error("input length {got} does not match input_dim {expected}")]
    InputDim { expected: usize, got: usize },
    #[error("state length {got} does not match reservoir_size {expected}")]
    StateDim { expected: usize, got: usize },
    #[error("sequence length {len} must exceed washout {washout}")]
    WashoutTooLong { washout: usize, len: usize },
    #[error(
        "degenerate reservoir draw: spectral radius estimate {estimate:e} below 1e-12, reseed"
    )]
    DegenerateReservoir { estimate: f64 },
    #[error("readout not fitted")]
    NotTrained,
    #[error("harvested matrix has {got} rows, expected reservoir_size + 1 = {expected}")]
    HarvestShape { expected: usize, got: usize },
    #[error("non-finite reservoir state")]
    NonFiniteState,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Reservoir hyperparameters. `seed` fully determines the random draws.
#[derive(Clone, Debug, PartialEq)]
pub struct EsnConfig {
    pub reservoir_size: usize,
    pub input_dim: usize,
    pub output_dim: usize,
    /// Leak rate gamma in (0, 1].
    pub leak_rate: f64,
    /// Target spectral radius of the rescaled reservoir matrix.
    pub spectral_radius: f64,
    /// Nonzero entries per reservoir row.
    pub degree: usize,
    /// Input weights are drawn uniformly from [-input_scale, input_scale].
    pub input_scale: f64,
    /// Ridge regularization coefficient for the readout fit.
    pub beta: f64,
    /// Leading harvested states discarded before the readout fit.
    pub washout: usize,
    pub seed: u64,
}

impl EsnConfig {
    /// Benchmark hyperparameters: 1500 nodes, rho = 1, gamma = 0.4, degree 3,
    /// beta = 1e-4, washout 30.
    pub fn benchmark(input_dim: usize, output_dim: usize) -> Self {
        EsnConfig {
            reservoir_size: 1500,
            input_dim,
            output_dim,
            leak_rate: 0.4,
            spectral_radius: 1.0,
            degree: 3,
            input_scale: 0.1,
            beta: 1e-4,
            washout: 30,
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<(), EsnError> {
        if self.reservoir_size == 0 {
            return Err(EsnError::InvalidConfig {
                field: "reservoir_size",
                why: "must be at least 1",
            });
        }
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(EsnError::InvalidConfig {
                field: "input_dim/output_dim",
                why: "must be at least 1",
            });
        }
        if self.leak_rate.is_nan() || self.leak_rate <= 0.0 || self.leak_rate > 1.0 {
            return Err(EsnError::InvalidConfig {
                field: "leak_rate",
                why: "must lie in (0, 1]",
            });
        }
        if self.spectral_radius <= 0.0 || !self.spectral_radius.is_finite() {
            return Err(EsnError::InvalidConfig {
                field: "spectral_radius",
                why: "must be positive and finite",
            });
        }
        if self.degree == 0 || self.degree > self.reservoir_size {
            return Err(EsnError::InvalidConfig {
                field: "degree",
                why: "must lie in 1..=reservoir_size",
            });
        }
        if self.input_scale <= 0.0 || !self.input_scale.is_finite() {
            return Err(EsnError::InvalidConfig {
                field: "input_scale",
                why: "must be positive and finite",
            });
        }
        if self.beta < 0.0 || !self.beta.is_finite() {
            return Err(EsnError::InvalidConfig {
                field: "beta",
                why: "must be non-negative and finite",
            });
        }
        Ok(())
    }
}

/// Sparse square matrix stored as (row, col, value) triplets, ordered by row.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMat {
    size: usize,
    triplets: Vec<(usize, usize, f64)>,
}

impl SparseMat {
    pub fn new(size: usize, triplets: Vec<(usize, usize, f64)>) -> Self {
        SparseMat { size, triplets }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn triplets(&self) -> &[(usize, usize, f64)] {
        &self.triplets
    }

    pub fn nnz(&self) -> usize {
        self.triplets.len()
    }

    pub fn matvec_into(&self, v: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for &(r, c, val) in &self.triplets {
            out[r] += val * v[c];
        }
    }

    fn scale_in_place(&mut self, factor: f64) {
        for t in &mut self.triplets {
            t.2 *= factor;
        }
    }

    pub fn spectral_radius(&self, max_iters: usize, tol: f64) -> linalg::SpectralEstimate {
        linalg::spectral_radius_op(self.size, |v, out| self.matvec_into(v, out), max_iters, tol)
    }
}

const SPECTRAL_ITERS: usize = 10_000;
const SPECTRAL_TOL: f64 = 1e-12;

/// Reservoir state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct EsnState {
    values: Vec<f64>,
}

impl EsnState {
    pub fn zero(reservoir_size: usize) -> Self {
        EsnState {
            values: vec![0.0; reservoir_size],
        }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        EsnState { values }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Fixed reservoir and input weights plus the trainable readout.
///
/// Immutable after `init`/`fit_readout`; share freely across readers.
#[derive(Clone, Debug, PartialEq)]
pub struct EsnWeights {
    config: EsnConfig,
    w_in: Mat,
    w_res: SparseMat,
    w_out: Mat,
    trained: bool,
}

impl EsnWeights {
    /// Draws the reservoir from the config seed and rescales it to the target
    /// spectral radius. The readout starts zero-filled and untrained.
    pub fn init(config: &EsnConfig) -> Result<Self, EsnError> {
        config.validate()?;
        let n_r = config.reservoir_size;
        let mut rng = Rng::new(config.seed);

        let w_in = Mat::from_fn(n_r, config.input_dim, |_, _| {
            rng.uniform_in(-config.input_scale, config.input_scale)
        });

        // `degree` distinct columns per row, values uniform in [-1, 1]
        let mut triplets = Vec::with_capacity(n_r * config.degree);
        let mut row_cols: Vec<usize> = Vec::with_capacity(config.degree);
        for row in 0..n_r {
            row_cols.clear();
            while row_cols.len() < config.degree {
                let col = rng.index(n_r);
                if !row_cols.contains(&col) {
                    row_cols.push(col);
                    triplets.push((row, col, rng.uniform_in(-1.0, 1.0)));
                }
            }
        }
        let mut w_res = SparseMat::new(n_r, triplets);

        let raw = w_res.spectral_radius(SPECTRAL_ITERS, SPECTRAL_TOL);
        if raw.value.is_nan() || raw.value <= 1e-12 {
            return Err(EsnError::DegenerateReservoir {
                estimate: raw.value,
            });
        }
        w_res.scale_in_place(config.spectral_radius / raw.value);

        Ok(EsnWeights {
            w_out: Mat::zeros(config.output_dim, n_r + 1),
            config: config.clone(),
            w_in,
            w_res,
            trained: false,
        })
    }

    /// Rebuilds weights from stored parts, validating shapes.
    pub fn from_parts(
        config: EsnConfig,
        w_in: Mat,
        w_res: SparseMat,
        w_out: Mat,
        trained: bool,
    ) -> Result<Self, EsnError> {
        config.validate()?;
        let n_r = config.reservoir_size;
        if w_in.rows() != n_r || w_in.cols() != config.input_dim || w_res.size() != n_r {
            return Err(EsnError::InvalidConfig {
                field: "w_in/w_res",
                why: "shape does not match config",
            });
        }
        if w_out.rows() != config.output_dim || w_out.cols() != n_r + 1 {
            return Err(EsnError::HarvestShape {
                expected: n_r + 1,
                got: w_out.cols(),
            });
        }
        Ok(EsnWeights {
            config,
            w_in,
            w_res,
            w_out,
            trained,
        })
    }

    pub fn config(&self) -> &EsnConfig {
        &self.config
    }

    pub fn w_in(&self) -> &Mat {
        &self.w_in
    }

    pub fn w_res(&self) -> &SparseMat {
        &self.w_res
    }

    pub fn w_out(&self) -> &Mat {
        &self.w_out
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    /// One leaky update; the input state is untouched.
    pub fn step(&self, state: &EsnState, z: &[f64]) -> Result<EsnState, EsnError> {
        if z.len() != self.config.input_dim {
            return Err(EsnError::InputDim {
                expected: self.config.input_dim,
                got: z.len(),
            });
        }
        let n_r = self.config.reservoir_size;
        if state.len() != n_r {
            return Err(EsnError::StateDim {
                expected: n_r,
                got: state.len(),
            });
        }
        let gamma = self.config.leak_rate;
        let mut pre = vec![0.0; n_r];
        self.w_res.matvec_into(state.as_slice(), &mut pre);
        for (i, cell) in pre.iter_mut().enumerate() {
            let mut drive = 0.0;
            for (j, zj) in z.iter().enumerate() {
                drive += self.w_in[(i, j)] * zj;
            }
            *cell = (1.0 - gamma) * state.values[i] + gamma * libm::tanh(*cell + drive);
            if !cell.is_finite() {
                return Err(EsnError::NonFiniteState);
            }
        }
        Ok(EsnState { values: pre })
    }

    /// Runs the reservoir from the zero state over all inputs and returns the
    /// `(reservoir_size + 1) x (T - washout)` matrix whose columns are the
    /// post-washout states with a trailing bias row of ones.
    pub fn harvest(&self, inputs: &[Vec<f64>], washout: usize) -> Result<Mat, EsnError> {
        let t_len = inputs.len();
        if t_len <= washout {
            return Err(EsnError::WashoutTooLong {
                washout,
                len: t_len,
            });
        }
        let n_r = self.config.reservoir_size;
        let mut out = Mat::zeros(n_r + 1, t_len - washout);
        let mut state = EsnState::zero(n_r);
        for (t, z) in inputs.iter().enumerate() {
            state = self.step(&state, z)?;
            if t >= washout {
                let col = t - washout;
                for i in 0..n_r {
                    out[(i, col)] = state.values[i];
                }
                out[(n_r, col)] = 1.0;
            }
        }
        Ok(out)
    }

    /// Fits the readout by ridge regression against aligned target columns.
    pub fn fit_readout(
        &self,
        harvested: &Mat,
        targets: &Mat,
        beta: f64,
    ) -> Result<EsnWeights, EsnError> {
        let expected = self.config.reservoir_size + 1;
        if harvested.rows() != expected {
            return Err(EsnError::HarvestShape {
                expected,
                got: harvested.rows(),
            });
        }
        let w_out = linalg::ridge_solve(harvested, targets, beta)?;
        if w_out.rows() != self.config.output_dim {
            return Err(EsnError::InvalidConfig {
                field: "targets",
                why: "row count does not match output_dim",
            });
        }
        let mut out = self.clone();
        out.w_out = w_out;
        out.trained = true;
        Ok(out)
    }

    /// Advances the state with `z` and reads the output from the new state.
    pub fn predict(&self, state: &EsnState, z: &[f64]) -> Result<(Vec<f64>, EsnState), EsnError> {
        if !self.trained {
            return Err(EsnError::NotTrained);
        }
        let next = self.step(state, z)?;
        let n_r = self.config.reservoir_size;
        let mut y = vec![0.0; self.config.output_dim];
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..n_r {
                acc += self.w_out[(i, j)] * next.values[j];
            }
            *yi = acc + self.w_out[(i, n_r)]; // bias column
        }
        Ok((y, next))
    }
}
