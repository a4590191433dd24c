//! Spring-damper dynamics: continuous parameters, forward-Euler discrete
//! nominal model, a configurable true plant carrying the unmodeled residual,
//! and the selectors that turn state differences into training targets and
//! states into reservoir regressors.

use alloc::vec::Vec;
use thiserror::Error;

use crate::linalg::{solve_spd, LinalgError, Mat};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum PlantError {
    #[error("invalid plant parameter: {name} = {value}")]
    InvalidParam { name: &'static str, value: f64 },
    #[error("residual selector b_n is rank deficient")]
    RankDeficientSelector,
    #[error("selector shape invalid: {what}")]
    SelectorShape { what: &'static str },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Continuous spring-damper parameters and the sampling interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpringDamperParams {
    /// Mass in kg.
    pub mass: f64,
    /// Damping coefficient in N s/m.
    pub damping: f64,
    /// Spring constant in N/m.
    pub stiffness: f64,
    /// Sampling interval in s.
    pub dt: f64,
}

impl SpringDamperParams {
    /// Benchmark plant: m = 1.0, b = 0.5, k = 10, dt = 0.1.
    pub fn benchmark() -> Self {
        SpringDamperParams {
            mass: 1.0,
            damping: 0.5,
            stiffness: 10.0,
            dt: 0.1,
        }
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        if self.mass <= 0.0 || !self.mass.is_finite() {
            return Err(PlantError::InvalidParam {
                name: "mass",
                value: self.mass,
            });
        }
        if self.dt <= 0.0 || !self.dt.is_finite() {
            return Err(PlantError::InvalidParam {
                name: "dt",
                value: self.dt,
            });
        }
        if self.damping < 0.0 || !self.damping.is_finite() {
            return Err(PlantError::InvalidParam {
                name: "damping",
                value: self.damping,
            });
        }
        if self.stiffness < 0.0 || !self.stiffness.is_finite() {
            return Err(PlantError::InvalidParam {
                name: "stiffness",
                value: self.stiffness,
            });
        }
        Ok(())
    }
}

/// Discrete linear dynamics x(k+1) = A x(k) + B u(k).
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    pub a: Mat,
    pub b: Mat,
}

impl LinearModel {
    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.cols()
    }
}

/// Forward-Euler discretization of the spring-damper:
/// `A = [[1, dt], [-(k/m) dt, 1 - (b/m) dt]]`, `B = [[0], [dt/m]]`.
pub fn discretize(params: &SpringDamperParams) -> LinearModel {
    let SpringDamperParams {
        mass,
        damping,
        stiffness,
        dt,
    } = *params;
    let a = Mat::from_rows(&[
        &[1.0, dt],
        &[-(stiffness / mass) * dt, 1.0 - (damping / mass) * dt],
    ]);
    let b = Mat::from_rows(&[&[0.0], &[dt / mass]]);
    LinearModel { a, b }
}

/// One nominal step A x + B u. Panics on inconsistent shapes.
pub fn nominal_step(model: &LinearModel, x: &[f64], u: &[f64]) -> Vec<f64> {
    let ax = model.a.matvec(x).expect("state dimension mismatch");
    let bu = model.b.matvec(u).expect("input dimension mismatch");
    ax.iter().zip(&bu).map(|(a, b)| a + b).collect()
}

/// Ground-truth unmodeled dynamics of the true plant.
#[derive(Clone, Debug, PartialEq)]
pub enum ResidualSpec {
    /// True plant equals the nominal model.
    None,
    /// True plant is the forward-Euler spring-damper with these parameters.
    ParamPerturbation { true_params: SpringDamperParams },
    /// Nominal dynamics plus a hardening cubic spring term alpha * x^3.
    CubicSpring { alpha: f64 },
    /// Parameter perturbation and cubic term combined.
    Combined {
        true_params: SpringDamperParams,
        alpha: f64,
    },
}

impl ResidualSpec {
    /// Benchmark residual: the true plant has a nearly broken damper
    /// (b = 0.1), a stiffer spring (k = 14) and a cubic hardening term
    /// (alpha = 0.02) that the nominal model knows nothing about.
    pub fn benchmark() -> Self {
        ResidualSpec::Combined {
            true_params: SpringDamperParams {
                mass: 1.0,
                damping: 0.1,
                stiffness: 14.0,
                dt: 0.1,
            },
            alpha: 0.02,
        }
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        match self {
            ResidualSpec::None => Ok(()),
            ResidualSpec::ParamPerturbation { true_params } => true_params.validate(),
            ResidualSpec::CubicSpring { alpha } => {
                if alpha.is_finite() {
                    Ok(())
                } else {
                    Err(PlantError::InvalidParam {
                        name: "alpha",
                        value: *alpha,
                    })
                }
            }
            ResidualSpec::Combined { true_params, alpha } => {
                true_params.validate()?;
                if alpha.is_finite() {
                    Ok(())
                } else {
                    Err(PlantError::InvalidParam {
                        name: "alpha",
                        value: *alpha,
                    })
                }
            }
        }
    }
}

/// Advances the true plant one step.
pub fn true_step(spec: &ResidualSpec, nominal: &LinearModel, x: &[f64], u: &[f64]) -> Vec<f64> {
    match spec {
        ResidualSpec::None => nominal_step(nominal, x, u),
        ResidualSpec::ParamPerturbation { true_params } => {
            nominal_step(&discretize(true_params), x, u)
        }
        ResidualSpec::CubicSpring { alpha } => {
            let mut next = nominal_step(nominal, x, u);
            // b[(1,0)] = dt/m, so alpha * b[(1,0)] = (alpha/m) dt
            next[1] -= alpha * nominal.b[(1, 0)] * x[0] * x[0] * x[0];
            next
        }
        ResidualSpec::Combined { true_params, alpha } => {
            let true_model = discretize(true_params);
            let mut next = nominal_step(&true_model, x, u);
            next[1] -= alpha * true_model.b[(1, 0)] * x[0] * x[0] * x[0];
            next
        }
    }
}

/// Cholesky pass with a relative pivot tolerance; a strict positive-pivot
/// test lets exactly singular Gram matrices slip through by rounding.
fn gram_full_rank(gram: &Mat) -> bool {
    let n = gram.rows();
    let scale = (0..n).fold(0.0f64, |m, i| m.max(gram[(i, i)].abs()));
    if scale.is_nan() || scale <= 0.0 {
        return false;
    }
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = gram[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if sum.is_nan() || sum <= 1e-10 * scale {
                    return false;
                }
                l[(i, i)] = libm::sqrt(sum);
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    true
}

/// Maps between full state space and the residual/regressor subspaces.
///
/// `b_n` (n_x x n) selects the state subspace the residual acts on; its left
/// pseudo-inverse turns state differences into training targets. `b_z`
/// (n_z x (n_x + n_u)) selects the regressor entries fed to the reservoir.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualSelector {
    b_n: Mat,
    b_z: Mat,
    pinv: Mat,
}

impl ResidualSelector {
    pub fn new(b_n: Mat, b_z: Mat) -> Result<Self, PlantError> {
        if b_n.rows() < b_n.cols() {
            return Err(PlantError::SelectorShape {
                what: "b_n must have at least as many rows as columns",
            });
        }
        let gram = b_n.transpose().matmul(&b_n)?;
        if !gram_full_rank(&gram) {
            return Err(PlantError::RankDeficientSelector);
        }
        // left pseudo-inverse (B'B)^(-1) B'
        let pinv = solve_spd(&gram, &b_n.transpose(), "selector")
            .map_err(|_| PlantError::RankDeficientSelector)?;
        Ok(ResidualSelector { b_n, b_z, pinv })
    }

    /// Identity selectors: residual over the full state, regressor
    /// [x; u].
    pub fn identity(n_x: usize, n_u: usize) -> Self {
        ResidualSelector::new(Mat::identity(n_x), Mat::identity(n_x + n_u))
            .expect("identity selector is full rank")
    }

    /// Benchmark selectors: residual over the full state, regressor = state
    /// only (the input columns of b_z are zero).
    pub fn benchmark(n_x: usize, n_u: usize) -> Self {
        let b_z = Mat::from_fn(n_x, n_x + n_u, |r, c| if r == c { 1.0 } else { 0.0 });
        ResidualSelector::new(Mat::identity(n_x), b_z).expect("benchmark selector is full rank")
    }

    pub fn b_n(&self) -> &Mat {
        &self.b_n
    }

    pub fn b_z(&self) -> &Mat {
        &self.b_z
    }

    /// Residual output dimension n.
    pub fn residual_dim(&self) -> usize {
        self.b_n.cols()
    }

    /// Regressor dimension n_z.
    pub fn regressor_dim(&self) -> usize {
        self.b_z.rows()
    }

    /// Training target B_n^+ (x_true_next - x_nom_next).
    pub fn residual_target(&self, x_true_next: &[f64], x_nom_next: &[f64]) -> Vec<f64> {
        let diff: Vec<f64> = x_true_next
            .iter()
            .zip(x_nom_next)
            .map(|(t, n)| t - n)
            .collect();
        self.pinv.matvec(&diff).expect("selector shape")
    }

    /// Reservoir input B_z [x; u].
    pub fn regressor(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut xu = Vec::with_capacity(x.len() + u.len());
        xu.extend_from_slice(x);
        xu.extend_from_slice(u);
        self.b_z.matvec(&xu).expect("selector shape")
    }

    /// Lifts a residual-space vector back to state space: B_n d.
    pub fn to_state_space(&self, d: &[f64]) -> Vec<f64> {
        self.b_n.matvec(d).expect("selector shape")
    }
}
