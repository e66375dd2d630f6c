use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rsm::commands::{cmd_analyze, cmd_design, cmd_fit, cmd_optimize, cmd_simulate};
use rsm::config::{parse_weights, Settings};
use rsm::data::{write_points, write_samples};
use rsm::error::{exit, CliError, CliResult};
use rsm::report::to_json;

/// Multi-response surface optimization with asymptotic uncertainty for the optimum.
#[derive(Debug, Parser)]
#[command(name = "rsm", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment CSV with header x1..xn,y1..yr.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// TOML file with default settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Comma-separated weights summing to 1.
    #[arg(long, global = true, value_parser = parse_weights, allow_hyphen_values = true)]
    weights: Option<::std::vec::Vec<f64>>,
    /// Radius c of the constraint ‖x‖ ≤ c.
    #[arg(long, global = true)]
    radius: Option<f64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    replicates: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the full quadratic model to every response.
    Fit,
    /// Locate the constrained optimum of the weighted surface.
    Optimize,
    /// Optimum plus its asymptotic covariance, intervals and ellipsoid.
    Analyze,
    /// Monte Carlo study of the optimum under a known true model.
    Simulate {
        /// Worker threads; the result does not depend on this.
        #[arg(long)]
        threads: Option<usize>,
        /// Also write the per-replicate optima as CSV.
        #[arg(long)]
        samples: Option<PathBuf>,
    },
    /// Print a central composite design as CSV.
    Design {
        #[arg(long)]
        factors: usize,
        /// Axial distance; defaults to sqrt(factors).
        #[arg(long)]
        axial: Option<f64>,
        #[arg(long, default_value_t = 1)]
        centers: usize,
    },
}

impl Common {
    fn settings(self) -> CliResult<Settings> {
        let base = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        let flags = Settings {
            weights: self.weights,
            radius: self.radius,
            alpha: self.alpha,
            seed: self.seed,
            replicates: self.replicates,
            input_path: self.input,
            output_path: self.output,
            ..Settings::default()
        };
        Ok(flags.over(base))
    }
}

fn create(path: &Path) -> CliResult<File> {
    File::create(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(settings: &Settings, text: &[u8]) -> CliResult<()> {
    match &settings.output_path {
        Some(path) => create(path)?
            .write_all(text)
            .map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            }),
        None => io::stdout()
            .lock()
            .write_all(text)
            .map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn run(cli: Cli) -> CliResult<u8> {
    let settings = cli.common.settings()?;
    match cli.command {
        Command::Fit => emit(&settings, to_json(&cmd_fit(&settings)?).as_bytes())?,
        Command::Optimize => emit(&settings, to_json(&cmd_optimize(&settings)?).as_bytes())?,
        Command::Analyze => emit(&settings, to_json(&cmd_analyze(&settings)?).as_bytes())?,
        Command::Simulate { threads, samples } => {
            let (report, result) = cmd_simulate(&settings, threads)?;
            emit(&settings, to_json(&report).as_bytes())?;
            if let Some(path) = samples {
                write_samples(&result, create(&path)?)?;
            }
            if !report.failures.within_limit {
                log::error!(
                    "{} of {} replicates failed, above the {:.0}% limit",
                    report.failures.count,
                    report.settings.replicates,
                    100.0 * report.failures.limit
                );
                return Ok(exit::SIMULATION);
            }
        }
        Command::Design {
            factors,
            axial,
            centers,
        } => {
            let axial = axial.unwrap_or((factors as f64).sqrt());
            let points = cmd_design(factors, axial, centers)?;
            let mut buf = Vec::new();
            write_points(&points, &mut buf)?;
            emit(&settings, &buf)?;
        }
    }
    Ok(exit::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RSM_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
