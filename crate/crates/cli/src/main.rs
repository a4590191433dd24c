use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use resmpc_cli::commands::{
    cmd_collect, cmd_full, cmd_predict, cmd_report, cmd_run, cmd_train, OutDir,
};
use resmpc_cli::config::parse_config_file;
use resmpc_cli::CliError;
use resmpc_core::experiment::ExperimentConfig;

/// Reservoir-compensated MPC experiments on a spring-damper plant.
#[derive(Parser)]
#[command(name = "resmpc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config file (key = value text); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Override the experiment seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the number of closed-loop steps.
    #[arg(long, global = true)]
    steps: Option<usize>,

    /// Override the training washout.
    #[arg(long, global = true)]
    washout: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Phase 1: nominal MPC on the true plant; writes dataset.csv and
    /// nominal_run.csv.
    Collect,
    /// Train the reservoir readout on dataset.csv; writes esn_weights.json
    /// and training_report.json.
    Train,
    /// Phase 2: compensated MPC; writes compensated_run.csv.
    Run,
    /// Open-loop residual prediction on recorded data; writes prediction.csv.
    Predict {
        /// Training pairs used for the fit.
        #[arg(long, default_value_t = 70)]
        train_len: usize,
        /// Held-out prediction steps.
        #[arg(long, default_value_t = 30)]
        horizon: usize,
    },
    /// Collect, train, run and predict in one go; also writes metrics.json.
    Full {
        #[arg(long, default_value_t = 70)]
        train_len: usize,
        #[arg(long, default_value_t = 30)]
        horizon: usize,
    },
    /// Render fig4.svg and fig5.svg from existing CSV artifacts.
    Report,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => parse_config_file(path)?,
        None => ExperimentConfig::benchmark(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
        config.esn.seed = seed;
    }
    if let Some(steps) = cli.steps {
        config.sim_steps = steps;
    }
    if let Some(washout) = cli.washout {
        config.esn.washout = washout;
    }
    config.validate().map_err(|e| CliError::Config {
        path: cli
            .config
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "<defaults>".to_string()),
        what: e.to_string(),
    })?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config = load_config(cli)?;
    let out = OutDir::new(&cli.out)?;
    match &cli.command {
        Command::Collect => cmd_collect(&config, &out),
        Command::Train => cmd_train(&config, &out),
        Command::Run => cmd_run(&config, &out),
        Command::Predict { train_len, horizon } => cmd_predict(&config, &out, *train_len, *horizon),
        Command::Full { train_len, horizon } => cmd_full(&config, &out, *train_len, *horizon),
        Command::Report => cmd_report(&config, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
