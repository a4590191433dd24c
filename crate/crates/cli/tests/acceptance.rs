//! Acceptance suite: every criterion below runs against the seed-fixed
//! default benchmark (benchmark plant, controller and residual) and prints
//! one pass/fail line. Run with
//!
//! ```text
//! cargo test -p resmpc-cli --test acceptance -- --nocapture
//! ```

use std::sync::OnceLock;

use tempfile::TempDir;

use resmpc_cli::commands::{cmd_full, full_artifacts, OutDir};
use resmpc_core::esn::{EsnState, EsnWeights};
use resmpc_core::experiment::{
    collect_phase, compensated_phase, metrics, openloop_predict, train_phase, Dataset,
    ExperimentConfig, MetricsSummary, RunLog,
};
use resmpc_core::linalg::{self, Mat};
use resmpc_core::mpc::{CompensationSequence, MpcProblem, TerminalMode};
use resmpc_core::plant::{discretize, ResidualSpec};
use resmpc_core::rng::Rng;

fn criterion(number: u32, name: &str, body: impl FnOnce() -> Result<(), String>) {
    match body() {
        Ok(()) => println!("criterion {number:2} ({name}): PASS"),
        Err(why) => {
            println!("criterion {number:2} ({name}): FAIL - {why}");
            panic!("criterion {number} ({name}) failed: {why}");
        }
    }
}

fn ensure(cond: bool, why: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(why.into())
    }
}

struct BenchmarkRun {
    config: ExperimentConfig,
    dataset: Dataset,
    nominal_log: RunLog,
    weights: EsnWeights,
    summary: MetricsSummary,
}

fn benchmark_run() -> &'static BenchmarkRun {
    static RUN: OnceLock<BenchmarkRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let config = ExperimentConfig::benchmark();
        let (dataset, nominal_log) = collect_phase(&config).expect("collect phase");
        let (weights, _) = train_phase(&config, &dataset).expect("train phase");
        let compensated_log =
            compensated_phase(&config, &weights, &dataset).expect("compensated phase");
        let summary = metrics(&nominal_log, &compensated_log).expect("metrics");
        BenchmarkRun {
            config,
            dataset,
            nominal_log,
            weights,
            summary,
        }
    })
}

/// Gauss-Jordan inverse with partial pivoting; acceptance oracle only.
fn invert_oracle(m: &Mat) -> Mat {
    let n = m.rows();
    let mut aug = Mat::zeros(n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            aug[(i, j)] = m[(i, j)];
        }
        aug[(i, n + i)] = 1.0;
    }
    for col in 0..n {
        let mut pivot = col;
        for r in col + 1..n {
            if aug[(r, col)].abs() > aug[(pivot, col)].abs() {
                pivot = r;
            }
        }
        for j in 0..2 * n {
            let tmp = aug[(col, j)];
            aug[(col, j)] = aug[(pivot, j)];
            aug[(pivot, j)] = tmp;
        }
        let p = aug[(col, col)];
        assert!(p.abs() > 1e-14, "oracle: singular system");
        for j in 0..2 * n {
            aug[(col, j)] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = aug[(r, col)];
                for j in 0..2 * n {
                    aug[(r, j)] -= f * aug[(col, j)];
                }
            }
        }
    }
    Mat::from_fn(n, n, |i, j| aug[(i, n + j)])
}

#[test]
fn criterion_01_ridge_matches_normal_equations_oracle() {
    criterion(1, "ridge oracle equivalence", || {
        let mut rng = Rng::new(1001);
        for trial in 0..20 {
            let d = 2 + rng.index(19); // up to 20 rows
            let t = d + rng.index(51 - d); // up to 50 columns, never fewer than rows
            let s = Mat::from_fn(d, t, |_, _| rng.uniform_in(-1.0, 1.0));
            let y = Mat::from_fn(3, t, |_, _| rng.uniform_in(-1.0, 1.0));
            let beta = [1e-4, 1e-2, 1.0, 0.0][trial % 4];
            let w = linalg::ridge_solve(&s, &y, beta).map_err(|e| format!("trial {trial}: {e}"))?;
            let mut g = s.matmul(&s.transpose()).unwrap();
            for i in 0..d {
                g[(i, i)] += beta;
            }
            let want = y
                .matmul(&s.transpose())
                .unwrap()
                .matmul(&invert_oracle(&g))
                .unwrap();
            let diff = w.max_abs_diff(&want).unwrap();
            ensure(
                diff < 1e-8,
                format!("trial {trial}: max-norm gap {diff:e} (dims {d}x{t}, beta {beta})"),
            )?;
        }
        Ok(())
    });
}

#[test]
fn criterion_02_mpc_matches_lqr_and_grid_oracles() {
    criterion(2, "mpc oracle equivalence", || {
        let model = discretize(&ExperimentConfig::benchmark().params);
        let config = resmpc_core::mpc::MpcConfig::benchmark();
        let problem = MpcProblem::new(&model, &config).map_err(|e| e.to_string())?;
        let gain = problem.lqr_gain().map_err(|e| e.to_string())?;
        let comp = CompensationSequence::zeros(config.horizon, 2);
        let mut rng = Rng::new(2002);
        for i in 0..10 {
            let x0 = [rng.uniform_in(-10.0, 10.0), rng.uniform_in(-10.0, 10.0)];
            let (u0, _) = problem.step(&x0, &comp).map_err(|e| e.to_string())?;
            let want = -(gain[(0, 0)] * x0[0] + gain[(0, 1)] * x0[1]);
            ensure(
                (u0[0] - want).abs() < 1e-6,
                format!("state {i}: u0 {} vs -Kx {want}", u0[0]),
            )?;
        }

        // scalar toy against a fine grid
        let toy_model = resmpc_core::plant::LinearModel {
            a: Mat::from_rows(&[&[1.0]]),
            b: Mat::from_rows(&[&[1.0]]),
        };
        let toy_config = resmpc_core::mpc::MpcConfig {
            horizon: 2,
            q_diag: vec![1.0],
            r_scalar: 1.0,
            reference: vec![0.0],
            terminal_mode: TerminalMode::QCopy,
            u_limit: None,
        };
        let x0 = 1.3;
        let sol = resmpc_core::mpc::solve(
            &toy_model,
            &toy_config,
            &[x0],
            &CompensationSequence::zeros(2, 1),
        )
        .map_err(|e| e.to_string())?;
        let step = 1e-3;
        let mut best = (f64::INFINITY, 0.0f64, 0.0f64);
        let mut u0 = -3.0;
        while u0 <= 3.0 {
            let mut u1 = -3.0;
            while u1 <= 3.0 {
                let x1 = x0 + u0;
                let x2 = x1 + u1;
                let c = x0 * x0 + u0 * u0 + x1 * x1 + u1 * u1 + x2 * x2;
                if c < best.0 {
                    best = (c, u0, u1);
                }
                u1 += step;
            }
            u0 += step;
        }
        ensure(
            (sol.u_seq[0][0] - best.1).abs() <= step && (sol.u_seq[1][0] - best.2).abs() <= step,
            format!(
                "grid ({}, {}) vs solver ({}, {})",
                best.1, best.2, sol.u_seq[0][0], sol.u_seq[1][0]
            ),
        )
    });
}

#[test]
fn criterion_03_compensation_improves_cost_and_model_error() {
    criterion(3, "fig4 quantified: cost and error ratios", || {
        let run = benchmark_run();
        let s = &run.summary;
        ensure(
            s.compensated_cost < s.nominal_cost,
            format!(
                "compensated cost {} not below nominal {}",
                s.compensated_cost, s.nominal_cost
            ),
        )?;
        ensure(
            s.cost_ratio < 0.95,
            format!("cost_ratio {} >= 0.95", s.cost_ratio),
        )?;
        ensure(
            s.error_ratio < 0.5,
            format!("error_ratio {} >= 0.5", s.error_ratio),
        )
    });
}

#[test]
fn criterion_04_openloop_prediction_on_heldout_window() {
    criterion(4, "fig5: open-loop 70/30 NRMSE", || {
        let run = benchmark_run();
        let fresh = EsnWeights::init(&run.config.seeded_esn_config()).map_err(|e| e.to_string())?;
        let table = openloop_predict(&run.config, &fresh, &run.dataset, 70, 30)
            .map_err(|e| e.to_string())?;
        ensure(table.rows.len() == 30, "expected 30 held-out rows")?;
        for (dim, v) in table.nrmse_per_dim().iter().enumerate() {
            ensure(*v < 0.5, format!("dimension {dim}: NRMSE {v} >= 0.5"))?;
        }
        Ok(())
    });
}

#[test]
fn criterion_05_nominal_plant_convergence() {
    criterion(5, "nominal closed-loop convergence", || {
        let mut config = ExperimentConfig::benchmark();
        config.residual = ResidualSpec::None;
        let (_, log) = collect_phase(&config).map_err(|e| e.to_string())?;
        let final_norm = log
            .summary
            .final_state
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        ensure(
            final_norm < 0.05,
            format!("final inf-norm {final_norm} >= 0.05 after 100 steps"),
        )
    });
}

#[test]
fn criterion_06_null_compensation_equivalence() {
    criterion(6, "null-compensation bitwise equivalence", || {
        // zero residual: train on the (all-zero) phase-1 targets
        let mut config = ExperimentConfig::benchmark();
        config.residual = ResidualSpec::None;
        let (dataset, phase1) = collect_phase(&config).map_err(|e| e.to_string())?;
        let (weights, _) = train_phase(&config, &dataset).map_err(|e| e.to_string())?;
        let phase2 = compensated_phase(&config, &weights, &dataset).map_err(|e| e.to_string())?;
        ensure(
            phase1 == phase2,
            "zero-residual phase 2 differs from phase 1",
        )?;

        // zero readout under the benchmark residual
        let run = benchmark_run();
        let mut zeroed = run.dataset.clone();
        for (_, mu) in zeroed.pairs.iter_mut() {
            mu.iter_mut().for_each(|v| *v = 0.0);
        }
        let (zero_weights, _) = train_phase(&run.config, &zeroed).map_err(|e| e.to_string())?;
        ensure(
            zero_weights.w_out().max_abs() == 0.0,
            "training on zero targets must give a zero readout",
        )?;
        let phase2 = compensated_phase(&run.config, &zero_weights, &run.dataset)
            .map_err(|e| e.to_string())?;
        ensure(
            phase2 == run.nominal_log,
            "zero-readout phase 2 differs from phase 1",
        )
    });
}

#[test]
fn criterion_07_state_boundedness_and_fading_memory() {
    criterion(7, "reservoir boundedness and fading memory", || {
        let run = benchmark_run();
        let harvested = run
            .weights
            .harvest(&run.dataset.regressors(), run.config.esn.washout)
            .map_err(|e| e.to_string())?;
        for r in 0..harvested.rows() - 1 {
            for c in 0..harvested.cols() {
                let v = harvested[(r, c)];
                ensure(
                    (-1.0..=1.0).contains(&v),
                    format!("harvested state ({r},{c}) = {v} leaves [-1,1]"),
                )?;
            }
        }

        let n_r = run.config.esn.reservoir_size;
        let mut rng = Rng::new(7007);
        let mut a = EsnState::from_values((0..n_r).map(|_| rng.uniform_in(-1.0, 1.0)).collect());
        let mut b = EsnState::from_values((0..n_r).map(|_| rng.uniform_in(-1.0, 1.0)).collect());
        let norm = |x: &EsnState, y: &EsnState| {
            x.as_slice()
                .iter()
                .zip(y.as_slice())
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt()
        };
        let d0 = norm(&a, &b);
        let inputs = run.dataset.regressors();
        for t in 0..200 {
            let z = &inputs[t % inputs.len()];
            a = run.weights.step(&a, z).map_err(|e| e.to_string())?;
            b = run.weights.step(&b, z).map_err(|e| e.to_string())?;
        }
        let factor = norm(&a, &b) / d0;
        ensure(
            factor < 0.01,
            format!("contraction factor {factor:e} >= 0.01 after 200 driven steps"),
        )
    });
}

#[test]
fn criterion_08_full_runs_are_byte_identical() {
    criterion(8, "byte-identical artifacts across reruns", || {
        let tmp = TempDir::new().map_err(|e| e.to_string())?;
        let config = ExperimentConfig::benchmark();
        let mut snapshots: Vec<Vec<(&str, Vec<u8>)>> = Vec::new();
        for sub in ["a", "b"] {
            let out = OutDir::new(tmp.path().join(sub)).map_err(|e| e.to_string())?;
            cmd_full(&config, &out, 70, 30).map_err(|e| e.to_string())?;
            snapshots.push(
                full_artifacts()
                    .iter()
                    .map(|name| {
                        (
                            *name,
                            std::fs::read(out.path(name)).expect("artifact readable"),
                        )
                    })
                    .collect(),
            );
        }
        for ((name, a), (_, b)) in snapshots[0].iter().zip(&snapshots[1]) {
            ensure(a == b, format!("artifact {name} differs between runs"))?;
        }
        Ok(())
    });
}

#[test]
fn criterion_09_reservoir_spectral_radius_is_unit() {
    criterion(9, "spectral conditioning of the reservoir", || {
        let run = benchmark_run();
        let est = run.weights.w_res().spectral_radius(10_000, 1e-12);
        ensure(
            (0.999..=1.001).contains(&est.value),
            format!("spectral radius {} outside [0.999, 1.001]", est.value),
        )
    });
}

#[test]
fn criterion_10_terminal_riccati_satisfies_dare() {
    criterion(10, "DARE substitute-back residual", || {
        let config = ExperimentConfig::benchmark();
        let model = discretize(&config.params);
        let q = Mat::diag(&config.mpc.q_diag);
        let r = Mat::diag(&[config.mpc.r_scalar]);
        let p = linalg::riccati_recursion(&model.a, &model.b, &q, &r, 10_000)
            .map_err(|e| e.to_string())?;
        let residual =
            linalg::dare_residual(&model.a, &model.b, &q, &r, &p).map_err(|e| e.to_string())?;
        ensure(
            residual < 1e-8,
            format!("DARE residual {residual:e} >= 1e-8"),
        )
    });
}
