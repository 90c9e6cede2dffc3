use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use tvopt::experiment::{self, OutputFormat, RunOptions};

#[derive(Parser)]
#[command(name = "tvopt", version, about = "Run and sweep time-varying optimization tracking experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a single run and write trajectory and metrics files.
    Run {
        spec: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Execute every point of the spec's sweep grid.
    Sweep {
        spec: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
        /// Number of grid points run concurrently.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print the registered benchmark problems.
    List,
    /// Check a spec and the oracles of its problem without running it.
    Validate { spec: PathBuf },
}

#[derive(clap::Args)]
struct OutputArgs {
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Seed of the initial-point perturbation.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Both,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Both => OutputFormat::Both,
        }
    }
}

impl OutputArgs {
    fn options(&self, workers: Option<usize>) -> RunOptions {
        RunOptions {
            out: self.out.clone(),
            format: self.format.map(Into::into),
            workers,
            seed: self.seed,
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { spec, output } => {
            let report = experiment::cmd_run(&spec, &output.options(None))
                .with_context(|| format!("run {}", spec.display()))?;
            let m = &report.metrics.metrics;
            println!(
                "{}: asymptotic error {:.6e}, contraction violations {}, written to {}",
                report.metrics.problem,
                m.asymptotic_error,
                m.contraction_violations,
                report.dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            spec,
            output,
            workers,
        } => {
            let report = experiment::cmd_sweep(&spec, &output.options(workers))
                .with_context(|| format!("sweep {}", spec.display()))?;
            print!("{}", experiment::summary_text(&report.rows));
            for g in report.fits.iter().flatten() {
                match (&g.fit, &g.error) {
                    (Some(fit), _) => println!("order fit [{}]: slope {:.4} (rms residual {:.2e})", g.group, fit.slope, fit.residual),
                    (None, Some(e)) => println!("order fit [{}]: {e}", g.group),
                    (None, None) => {}
                }
            }
            let failures = report.failures();
            if failures > 0 {
                eprintln!("error: {failures} grid point(s) failed; see {}", report.dir.join("summary.txt").display());
                return Ok(ExitCode::FAILURE);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::List => {
            print!("{}", experiment::cmd_list());
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { spec } => {
            let report = experiment::cmd_validate(&spec)
                .with_context(|| format!("validate {}", spec.display()))?;
            print!("{}", report.text);
            Ok(if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
