//! Finite-horizon quadratic MPC over a linear model with an additive
//! per-step compensation sequence.
//!
//! The horizon is condensed: states are eliminated through the stacked
//! prediction matrices and the input sequence is solved in closed form from
//! the regularized normal equations (the Hessian is positive definite since
//! R > 0). Receding-horizon use applies only the first input, optionally
//! saturated after optimization.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::linalg::{riccati_recursion, solve_spd, LinalgError, Mat};
use crate::plant::LinearModel;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum MpcError {
    #[error("invalid mpc config: {what}")]
    BadConfig { what: &'static str },
    #[error("compensation sequence has {got} steps, horizon is {expected}")]
    CompensationLength { expected: usize, got: usize },
    #[error("compensation step {index} has dimension {got}, state dimension is {expected}")]
    CompensationDim {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("initial state has dimension {got}, expected {expected}")]
    StateDim { expected: usize, got: usize },
    #[error("non-finite mpc solution")]
    NonFiniteSolution,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminalMode {
    /// Terminal weight from the discrete Riccati fixed point of (A, B, Q, R).
    Riccati,
    /// Terminal weight equals the stage weight Q.
    QCopy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpcConfig {
    pub horizon: usize,
    pub q_diag: Vec<f64>,
    pub r_scalar: f64,
    pub reference: Vec<f64>,
    pub terminal_mode: TerminalMode,
    /// Symmetric saturation |u| <= u_limit applied to the applied input only.
    pub u_limit: Option<f64>,
}

impl MpcConfig {
    /// Benchmark controller: N = 20, Q = diag(1, 0.1), R = 0.1, r = 0.
    pub fn benchmark() -> Self {
        MpcConfig {
            horizon: 20,
            q_diag: vec![1.0, 0.1],
            r_scalar: 0.1,
            reference: vec![0.0, 0.0],
            terminal_mode: TerminalMode::Riccati,
            u_limit: None,
        }
    }

    pub fn validate(&self) -> Result<(), MpcError> {
        if self.horizon == 0 {
            return Err(MpcError::BadConfig {
                what: "horizon must be at least 1",
            });
        }
        if self.q_diag.iter().any(|&q| q < 0.0 || !q.is_finite()) {
            return Err(MpcError::BadConfig {
                what: "q_diag entries must be non-negative and finite",
            });
        }
        if self.r_scalar <= 0.0 || !self.r_scalar.is_finite() {
            return Err(MpcError::BadConfig {
                what: "r_scalar must be positive",
            });
        }
        if self.reference.len() != self.q_diag.len() {
            return Err(MpcError::BadConfig {
                what: "reference and q_diag lengths differ",
            });
        }
        if let Some(lim) = self.u_limit {
            if lim < 0.0 || !lim.is_finite() {
                return Err(MpcError::BadConfig {
                    what: "u_limit must be non-negative and finite",
                });
            }
        }
        Ok(())
    }
}

/// Per-step additive model compensation over the horizon, already lifted to
/// state space (each entry is B_n * d_hat).
#[derive(Clone, Debug, PartialEq)]
pub struct CompensationSequence {
    steps: Vec<Vec<f64>>,
}

impl CompensationSequence {
    pub fn zeros(horizon: usize, state_dim: usize) -> Self {
        CompensationSequence {
            steps: vec![vec![0.0; state_dim]; horizon],
        }
    }

    /// The same compensation repeated over the whole horizon.
    pub fn constant(d: Vec<f64>, horizon: usize) -> Self {
        CompensationSequence {
            steps: vec![d; horizon],
        }
    }

    pub fn from_steps(steps: Vec<Vec<f64>>) -> Self {
        CompensationSequence { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[Vec<f64>] {
        &self.steps
    }
}

/// Optimal input sequence, predicted trajectory and objective value.
#[derive(Clone, Debug, PartialEq)]
pub struct MpcSolution {
    pub u_seq: Vec<Vec<f64>>,
    pub x_pred: Vec<Vec<f64>>,
    pub cost: f64,
}

/// Stacked prediction matrices: vec(x(1..N)) = s_x x0 + s_u vec(u) + s_d vec(d).
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionMatrices {
    pub s_x: Mat,
    pub s_u: Mat,
    pub s_d: Mat,
}

/// Builds the stacked prediction matrices for an `n`-step horizon.
pub fn build_prediction(model: &LinearModel, n: usize) -> PredictionMatrices {
    let n_x = model.state_dim();
    let n_u = model.input_dim();
    // powers[i] = A^i
    let mut powers: Vec<Mat> = Vec::with_capacity(n + 1);
    powers.push(Mat::identity(n_x));
    for i in 1..=n {
        powers.push(model.a.matmul(&powers[i - 1]).expect("square"));
    }
    let mut s_x = Mat::zeros(n * n_x, n_x);
    let mut s_u = Mat::zeros(n * n_x, n * n_u);
    let mut s_d = Mat::zeros(n * n_x, n * n_x);
    for i in 0..n {
        for r in 0..n_x {
            for c in 0..n_x {
                s_x[(i * n_x + r, c)] = powers[i + 1][(r, c)];
            }
        }
        for j in 0..=i {
            let ab = powers[i - j].matmul(&model.b).expect("shapes");
            for r in 0..n_x {
                for c in 0..n_u {
                    s_u[(i * n_x + r, j * n_u + c)] = ab[(r, c)];
                }
                for c in 0..n_x {
                    s_d[(i * n_x + r, j * n_x + c)] = powers[i - j][(r, c)];
                }
            }
        }
    }
    PredictionMatrices { s_x, s_u, s_d }
}

/// Condensed controller for a fixed (model, config) pair. Immutable after
/// construction; the heavy work (terminal Riccati solve, prediction
/// stacking, Hessian assembly) happens once.
#[derive(Clone, Debug)]
pub struct MpcProblem {
    model: LinearModel,
    config: MpcConfig,
    r: Mat,
    p: Mat,
    pred: PredictionMatrices,
    su_t_qbar: Mat,
    hessian: Mat,
    ref_stack: Vec<f64>,
}

const TERMINAL_RICCATI_ITERS: usize = 10_000;

impl MpcProblem {
    pub fn new(model: &LinearModel, config: &MpcConfig) -> Result<Self, MpcError> {
        config.validate()?;
        let n_x = model.state_dim();
        let n_u = model.input_dim();
        if config.q_diag.len() != n_x {
            return Err(MpcError::BadConfig {
                what: "q_diag length does not match the model state dimension",
            });
        }
        let q = Mat::diag(&config.q_diag);
        let mut r = Mat::zeros(n_u, n_u);
        for i in 0..n_u {
            r[(i, i)] = config.r_scalar;
        }
        let p = match config.terminal_mode {
            TerminalMode::Riccati => {
                riccati_recursion(&model.a, &model.b, &q, &r, TERMINAL_RICCATI_ITERS)?
            }
            TerminalMode::QCopy => q.clone(),
        };
        let n = config.horizon;
        let pred = build_prediction(model, n);
        // weight blocks: Q for x(1..N-1), P for x(N)
        let mut qbar = Mat::zeros(n * n_x, n * n_x);
        for blk in 0..n {
            let w = if blk == n - 1 { &p } else { &q };
            for rr in 0..n_x {
                for cc in 0..n_x {
                    qbar[(blk * n_x + rr, blk * n_x + cc)] = w[(rr, cc)];
                }
            }
        }
        let su_t_qbar = pred.s_u.transpose().matmul(&qbar)?;
        let mut hessian = su_t_qbar.matmul(&pred.s_u)?;
        for i in 0..n * n_u {
            hessian[(i, i)] += config.r_scalar;
        }
        let mut ref_stack = Vec::with_capacity(n * n_x);
        for _ in 0..n {
            ref_stack.extend_from_slice(&config.reference);
        }
        Ok(MpcProblem {
            model: model.clone(),
            config: config.clone(),

            r,
            p,
            pred,
            su_t_qbar,
            hessian,
            ref_stack,
        })
    }

    pub fn terminal_weight(&self) -> &Mat {
        &self.p
    }

    pub fn config(&self) -> &MpcConfig {
        &self.config
    }

    /// Minimizes the finite-horizon objective subject to
    /// x(k+1) = A x(k) + B u(k) + d(k).
    pub fn solve(&self, x0: &[f64], comp: &CompensationSequence) -> Result<MpcSolution, MpcError> {
        let n = self.config.horizon;
        let n_x = self.model.state_dim();
        let n_u = self.model.input_dim();
        if x0.len() != n_x {
            return Err(MpcError::StateDim {
                expected: n_x,
                got: x0.len(),
            });
        }
        if comp.len() != n {
            return Err(MpcError::CompensationLength {
                expected: n,
                got: comp.len(),
            });
        }
        let mut d_stack = Vec::with_capacity(n * n_x);
        for (index, d) in comp.steps().iter().enumerate() {
            if d.len() != n_x {
                return Err(MpcError::CompensationDim {
                    index,
                    expected: n_x,
                    got: d.len(),
                });
            }
            d_stack.extend_from_slice(d);
        }

        // linear term of the objective in U
        let sx_x0 = self.pred.s_x.matvec(x0)?;
        let sd_d = self.pred.s_d.matvec(&d_stack)?;
        let c: Vec<f64> = sx_x0
            .iter()
            .zip(&sd_d)
            .zip(&self.ref_stack)
            .map(|((a, b), r)| a + b - r)
            .collect();
        let g = self.su_t_qbar.matvec(&c)?;
        let neg_g = Mat::column(&g.iter().map(|v| -v).collect::<Vec<f64>>());
        let u_flat = solve_spd(&self.hessian, &neg_g, "mpc_solve")?;

        let u_seq: Vec<Vec<f64>> = (0..n)
            .map(|k| (0..n_u).map(|j| u_flat[(k * n_u + j, 0)]).collect())
            .collect();

        // roll the compensated dynamics forward so x_pred satisfies them
        // exactly as stored
        let mut x_pred = Vec::with_capacity(n + 1);
        x_pred.push(x0.to_vec());
        for k in 0..n {
            let prev = &x_pred[k];
            let ax = self.model.a.matvec(prev)?;
            let bu = self.model.b.matvec(&u_seq[k])?;
            let next: Vec<f64> = ax
                .iter()
                .zip(&bu)
                .zip(&comp.steps()[k])
                .map(|((a, b), d)| a + b + d)
                .collect();
            x_pred.push(next);
        }

        let mut cost = 0.0;
        for k in 0..n {
            cost += quad_form_diag(&self.config.q_diag, &x_pred[k], &self.config.reference);
            cost += self.config.r_scalar * u_seq[k].iter().map(|u| u * u).sum::<f64>();
        }
        cost += quad_form(&self.p, &x_pred[n], &self.config.reference);

        if !cost.is_finite()
            || x_pred.iter().any(|x| x.iter().any(|v| !v.is_finite()))
            || u_seq.iter().any(|u| u.iter().any(|v| !v.is_finite()))
        {
            return Err(MpcError::NonFiniteSolution);
        }
        Ok(MpcSolution {
            u_seq,
            x_pred,
            cost,
        })
    }

    /// Solves and returns the first input, saturated if a limit is set.
    pub fn step(
        &self,
        x0: &[f64],
        comp: &CompensationSequence,
    ) -> Result<(Vec<f64>, MpcSolution), MpcError> {
        let solution = self.solve(x0, comp)?;
        let mut u0 = solution.u_seq[0].clone();
        if let Some(lim) = self.config.u_limit {
            for u in u0.iter_mut() {
                *u = u.clamp(-lim, lim);
            }
        }
        Ok((u0, solution))
    }

    /// LQR gain for the terminal weight; test oracle support.
    pub fn lqr_gain(&self) -> Result<Mat, MpcError> {
        Ok(crate::linalg::lqr_gain(
            &self.model.a,
            &self.model.b,
            &self.r,
            &self.p,
        )?)
    }
}

/// One-shot solve; prefer `MpcProblem` when stepping many times.
pub fn solve(
    model: &LinearModel,
    config: &MpcConfig,
    x0: &[f64],
    comp: &CompensationSequence,
) -> Result<MpcSolution, MpcError> {
    MpcProblem::new(model, config)?.solve(x0, comp)
}

/// One-shot receding-horizon step.
pub fn mpc_step(
    model: &LinearModel,
    config: &MpcConfig,
    x0: &[f64],
    comp: &CompensationSequence,
) -> Result<(Vec<f64>, MpcSolution), MpcError> {
    MpcProblem::new(model, config)?.step(x0, comp)
}

/// Stage cost l(x, u) = (x - r)' Q (x - r) + R |u|^2.
pub fn stage_cost(config: &MpcConfig, x: &[f64], u: &[f64]) -> f64 {
    quad_form_diag(&config.q_diag, x, &config.reference)
        + config.r_scalar * u.iter().map(|v| v * v).sum::<f64>()
}

fn quad_form_diag(q_diag: &[f64], x: &[f64], reference: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..q_diag.len() {
        let e = x[i] - reference[i];
        acc += q_diag[i] * e * e;
    }
    acc
}

fn quad_form(m: &Mat, x: &[f64], reference: &[f64]) -> f64 {
    let e: Vec<f64> = x.iter().zip(reference).map(|(a, b)| a - b).collect();
    let me = m.matvec(&e).expect("square weight");
    e.iter().zip(&me).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{discretize, nominal_step, SpringDamperParams};
    use crate::rng::Rng;

    fn benchmark_model() -> LinearModel {
        discretize(&SpringDamperParams::benchmark())
    }

    #[test]
    fn at_reference_everything_is_zero() {
        let model = benchmark_model();
        let config = MpcConfig::benchmark();
        let comp = CompensationSequence::zeros(20, 2);
        let sol = solve(&model, &config, &[0.0, 0.0], &comp).unwrap();
        assert_eq!(sol.cost, 0.0);
        assert!(sol.u_seq.iter().all(|u| u[0] == 0.0));
        let (u0, _) = mpc_step(&model, &config, &[0.0, 0.0], &comp).unwrap();
        assert_eq!(u0, vec![0.0]);
    }

    #[test]
    fn prediction_single_step_is_a_b_i() {
        let model = benchmark_model();
        let pred = build_prediction(&model, 1);
        assert_eq!(pred.s_x, model.a);
        assert_eq!(pred.s_u, model.b);
        assert_eq!(pred.s_d, Mat::identity(2));
    }

    #[test]
    fn prediction_two_step_blocks_match_symbolic_expansion() {
        let model = benchmark_model();
        let pred = build_prediction(&model, 2);
        let a2 = model.a.matmul(&model.a).unwrap();
        let ab = model.a.matmul(&model.b).unwrap();
        // x(2) = A^2 x0 + A B u0 + B u1 + A d0 + d1
        for r in 0..2 {
            for c in 0..2 {
                assert_eq!(pred.s_x[(2 + r, c)], a2[(r, c)]);
                assert_eq!(pred.s_d[(2 + r, c)], model.a[(r, c)]);
                assert_eq!(pred.s_d[(2 + r, 2 + c)], Mat::identity(2)[(r, c)]);
            }
            assert_eq!(pred.s_u[(2 + r, 0)], ab[(r, 0)]);
            assert_eq!(pred.s_u[(2 + r, 1)], model.b[(r, 0)]);
        }
    }

    #[test]
    fn prediction_memoryless_dynamics() {
        let model = LinearModel {
            a: Mat::zeros(2, 2),
            b: Mat::from_rows(&[&[1.0], &[2.0]]),
        };
        let pred = build_prediction(&model, 3);
        assert_eq!(pred.s_x.max_abs(), 0.0);
        // s_u strictly block diagonal with B
        for i in 0..3 {
            for j in 0..3 {
                for r in 0..2 {
                    let v = pred.s_u[(i * 2 + r, j)];
                    if i == j {
                        assert_eq!(v, model.b[(r, 0)]);
                    } else {
                        assert_eq!(v, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn riccati_terminal_reproduces_lqr_gain() {
        // with P from the DARE fixed point the finite-horizon controller is
        // the stationary LQR policy: u(0) = -K x0
        let model = benchmark_model();
        let config = MpcConfig::benchmark();
        let problem = MpcProblem::new(&model, &config).unwrap();
        let k_gain = problem.lqr_gain().unwrap();
        let comp = CompensationSequence::zeros(20, 2);
        let mut rng = Rng::new(81);
        for _ in 0..10 {
            let x0 = [rng.uniform_in(-10.0, 10.0), rng.uniform_in(-10.0, 10.0)];
            let (u0, _) = problem.step(&x0, &comp).unwrap();
            let want = -(k_gain[(0, 0)] * x0[0] + k_gain[(0, 1)] * x0[1]);
            assert!(
                (u0[0] - want).abs() < 1e-6,
                "u0 = {} vs -Kx = {want}",
                u0[0]
            );
        }
    }

    #[test]
    fn benchmark_first_input_matches_golden_lqr_value() {
        // golden value computed once as -K [10, 0] with K from the Riccati
        // fixed point of the benchmark problem
        let model = benchmark_model();
        let problem = MpcProblem::new(&model, &MpcConfig::benchmark()).unwrap();
        let (u0, _) = problem
            .step(&[10.0, 0.0], &CompensationSequence::zeros(20, 2))
            .unwrap();
        assert!((u0[0] - 4.945767384330119).abs() < 1e-6, "u0 = {}", u0[0]);
    }

    #[test]
    fn scalar_toy_matches_grid_search() {
        let model = LinearModel {
            a: Mat::from_rows(&[&[1.0]]),
            b: Mat::from_rows(&[&[1.0]]),
        };
        let config = MpcConfig {
            horizon: 2,
            q_diag: vec![1.0],
            r_scalar: 1.0,
            reference: vec![0.0],
            terminal_mode: TerminalMode::QCopy,
            u_limit: None,
        };
        let x0 = 1.3;
        let comp = CompensationSequence::zeros(2, 1);
        let sol = solve(&model, &config, &[x0], &comp).unwrap();

        // brute force over a fine input grid
        let cost_of = |u0: f64, u1: f64| {
            let x1 = x0 + u0;
            let x2 = x1 + u1;
            x0 * x0 + u0 * u0 + x1 * x1 + u1 * u1 + x2 * x2
        };
        let step = 1e-3;
        let mut best = (f64::INFINITY, 0.0, 0.0);
        let mut u0 = -3.0;
        while u0 <= 3.0 {
            let mut u1 = -3.0;
            while u1 <= 3.0 {
                let c = cost_of(u0, u1);
                if c < best.0 {
                    best = (c, u0, u1);
                }
                u1 += step;
            }
            u0 += step;
        }
        assert!((sol.u_seq[0][0] - best.1).abs() <= step);
        assert!((sol.u_seq[1][0] - best.2).abs() <= step);
        assert!(sol.cost <= best.0 + 1e-9);
        // nonzero compensation variant agrees with its own grid search
        let comp = CompensationSequence::from_steps(vec![vec![0.4], vec![-0.2]]);
        let sol = solve(&model, &config, &[x0], &comp).unwrap();
        let cost_of = |u0: f64, u1: f64| {
            let x1 = x0 + u0 + 0.4;
            let x2 = x1 + u1 - 0.2;
            x0 * x0 + u0 * u0 + x1 * x1 + u1 * u1 + x2 * x2
        };
        let mut best = (f64::INFINITY, 0.0, 0.0);
        let mut u0 = -3.0;
        while u0 <= 3.0 {
            let mut u1 = -3.0;
            while u1 <= 3.0 {
                let c = cost_of(u0, u1);
                if c < best.0 {
                    best = (c, u0, u1);
                }
                u1 += step;
            }
            u0 += step;
        }
        assert!((sol.u_seq[0][0] - best.1).abs() <= step);
        assert!((sol.u_seq[1][0] - best.2).abs() <= step);
    }

    #[test]
    fn optimal_inputs_are_affine_in_compensation() {
        let model = benchmark_model();
        let config = MpcConfig::benchmark();
        let problem = MpcProblem::new(&model, &config).unwrap();
        let x0 = [4.0, -2.0];
        let mut rng = Rng::new(17);
        let mk = |rng: &mut Rng| {
            CompensationSequence::from_steps(
                (0..20)
                    .map(|_| vec![rng.uniform_in(-0.5, 0.5), rng.uniform_in(-0.5, 0.5)])
                    .collect(),
            )
        };
        let c1 = mk(&mut rng);
        let c2 = mk(&mut rng);
        let sum = CompensationSequence::from_steps(
            c1.steps()
                .iter()
                .zip(c2.steps())
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
        );
        let base = problem
            .solve(&x0, &CompensationSequence::zeros(20, 2))
            .unwrap();
        let s1 = problem.solve(&x0, &c1).unwrap();
        let s2 = problem.solve(&x0, &c2).unwrap();
        let s12 = problem.solve(&x0, &sum).unwrap();
        for k in 0..20 {
            let lhs = s12.u_seq[k][0] - base.u_seq[k][0];
            let rhs = (s1.u_seq[k][0] - base.u_seq[k][0]) + (s2.u_seq[k][0] - base.u_seq[k][0]);
            assert!((lhs - rhs).abs() < 1e-8, "step {k}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn predicted_trajectory_satisfies_compensated_dynamics() {
        let model = benchmark_model();
        let config = MpcConfig::benchmark();
        let problem = MpcProblem::new(&model, &config).unwrap();
        let mut rng = Rng::new(23);
        let comp = CompensationSequence::from_steps(
            (0..20)
                .map(|_| vec![rng.uniform_in(-0.3, 0.3), rng.uniform_in(-0.3, 0.3)])
                .collect(),
        );
        let sol = problem.solve(&[7.0, 1.0], &comp).unwrap();
        assert_eq!(sol.x_pred[0], vec![7.0, 1.0]);
        for k in 0..20 {
            let ax = model.a.matvec(&sol.x_pred[k]).unwrap();
            let bu = model.b.matvec(&sol.u_seq[k]).unwrap();
            for i in 0..2 {
                let want = ax[i] + bu[i] + comp.steps()[k][i];
                assert!((sol.x_pred[k + 1][i] - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn cost_is_stationary_at_the_optimum() {
        let model = benchmark_model();
        let config = MpcConfig::benchmark();
        let problem = MpcProblem::new(&model, &config).unwrap();
        let comp = CompensationSequence::zeros(20, 2);
        let x0 = [6.0, -3.0];
        let sol = problem.solve(&x0, &comp).unwrap();

        // replay the objective with a perturbed single input
        let eval = |u_seq: &[Vec<f64>]| {
            let mut x = x0.to_vec();
            let mut cost = 0.0;
            for u in u_seq.iter() {
                cost += stage_cost(&config, &x, u);
                x = nominal_step(&model, &x, u);
            }
            cost + quad_form(problem.terminal_weight(), &x, &config.reference)
        };
        let base = eval(&sol.u_seq);
        assert!((base - sol.cost).abs() < 1e-9);
        for k in 0..20 {
            for delta in [1e-4, -1e-4] {
                let mut perturbed = sol.u_seq.clone();
                perturbed[k][0] += delta;
                assert!(eval(&perturbed) >= base - 1e-8, "step {k} delta {delta}");
            }
        }
    }

    #[test]
    fn zero_input_limit_pins_applied_input() {
        let model = benchmark_model();
        let config = MpcConfig {
            u_limit: Some(0.0),
            ..MpcConfig::benchmark()
        };
        let problem = MpcProblem::new(&model, &config).unwrap();
        let (u0, sol) = problem
            .step(&[8.0, 2.0], &CompensationSequence::zeros(20, 2))
            .unwrap();
        assert_eq!(u0, vec![0.0]);
        // the unconstrained plan itself is not zero
        assert!(sol.u_seq[0][0].abs() > 0.1);
    }

    #[test]
    fn saturation_clamps_to_the_bound() {
        let model = benchmark_model();
        let config = MpcConfig {
            u_limit: Some(1.5),
            ..MpcConfig::benchmark()
        };
        let problem = MpcProblem::new(&model, &config).unwrap();
        let (u0, sol) = problem
            .step(&[10.0, 0.0], &CompensationSequence::zeros(20, 2))
            .unwrap();
        assert!(sol.u_seq[0][0].abs() > 1.5);
        assert_eq!(u0[0].abs(), 1.5);
    }

    #[test]
    fn rejects_wrong_compensation_length() {
        let model = benchmark_model();
        let config = MpcConfig::benchmark();
        let err = solve(
            &model,
            &config,
            &[1.0, 0.0],
            &CompensationSequence::zeros(7, 2),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            MpcError::CompensationLength {
                expected: 20,
                got: 7
            }
        ));
    }

    #[test]
    fn nominal_closed_loop_converges_from_benchmark_start() {
        // receding horizon on the nominal plant reaches max-norm < 0.05
        // within 100 steps
        let model = benchmark_model();
        let config = MpcConfig::benchmark();
        let problem = MpcProblem::new(&model, &config).unwrap();
        let comp = CompensationSequence::zeros(20, 2);
        let mut x = vec![10.0, 0.0];
        for _ in 0..100 {
            let (u, _) = problem.step(&x, &comp).unwrap();
            x = nominal_step(&model, &x, &u);
        }
        let max = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max < 0.05, "final max-norm {max}");
    }
}
