use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use radcom::harness::{self, ExperimentConfig, OperatingPoint, SolverKind};
use radcom::RadcomError;

#[derive(Parser, Debug)]
#[command(name = "radcom", version, about = "Joint radar-communication transmit design experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tradeoff sweep over the ρ grid.
    Sweep(Common),
    /// Beampatterns at a target WSR.
    Beampattern {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        target_wsr: f64,
    },
    /// Per-antenna average transmit power.
    PowerReport {
        #[command(flatten)]
        common: Common,
        /// Operating point; the first --rho value (default 1) is used when absent.
        #[arg(long)]
        target_wsr: Option<f64>,
    },
    /// Frequency-division, time-division and pure reference points.
    Baseline {
        #[command(flatten)]
        common: Common,
        /// Single time fraction replacing the configured list.
        #[arg(long)]
        alpha: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SolverArg {
    Separated,
    Shared,
    All,
}

#[derive(clap::Args, Debug)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_enum)]
    solver: Option<SolverArg>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated ρ values.
    #[arg(long, value_delimiter = ',')]
    rho: Option<Vec<f64>>,
}

impl Common {
    fn load(&self) -> radcom::Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => harness::parse_config(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(n) = self.trials {
            config.n_trials = n;
        }
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        if let Some(rho) = &self.rho {
            config.rho_grid = rho.clone();
        }
        if let Some(s) = self.solver {
            let keep_baselines = config.runs(SolverKind::Baselines);
            config.solvers = match s {
                SolverArg::Separated => vec![SolverKind::Separated],
                SolverArg::Shared => vec![SolverKind::Shared],
                SolverArg::All => vec![SolverKind::Separated, SolverKind::Shared],
            };
            if keep_baselines {
                config.solvers.push(SolverKind::Baselines);
            }
        }
        config.validate()?;
        Ok(config)
    }
}

enum Failure {
    Config(RadcomError),
    Solver(String),
}

impl From<RadcomError> for Failure {
    fn from(e: RadcomError) -> Self {
        if e.is_config_error() {
            Failure::Config(e)
        } else {
            Failure::Solver(e.to_string())
        }
    }
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Sweep(common) => {
            let config = common.load()?;
            let result = harness::run_tradeoff_sweep(&config)?;
            report(&harness::write_sweep(&result, &config, &config.output_dir, "sweep")?);
            let failed = result.failed_rows();
            if failed > 0 {
                return Err(Failure::Solver(format!("{failed} of {} solves failed; see manifest.json", result.rows.len())));
            }
        }
        Command::Beampattern { common, target_wsr } => {
            let config = common.load()?;
            let result = harness::run_beampattern_experiment(&config, target_wsr)?;
            for s in &result.summaries {
                println!("{:<16} mean wsr {:7.3}  peak {:7.2} dB", s.label, s.mean_wsr, s.peak_db);
            }
            report(&harness::write_beampattern(&result, &config, &config.output_dir)?);
        }
        Command::PowerReport { common, target_wsr } => {
            let config = common.load()?;
            let point = match target_wsr {
                Some(t) => OperatingPoint::TargetWsr(t),
                None => OperatingPoint::Rho(common.rho.as_ref().and_then(|r| r.first().copied()).unwrap_or(1.0)),
            };
            let rows = harness::run_power_experiment(&config, point)?;
            report(&harness::write_power_report(&rows, &config, &config.output_dir, point)?);
        }
        Command::Baseline { common, alpha } => {
            let mut config = common.load()?;
            if let Some(a) = alpha {
                config.alpha_list = vec![a];
            }
            config.solvers = vec![SolverKind::Baselines];
            config.validate()?;
            let result = harness::run_tradeoff_sweep(&config)?;
            report(&harness::write_sweep(&result, &config, &config.output_dir, "baseline")?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver failure: {msg}");
            ExitCode::from(2)
        }
    }
}
