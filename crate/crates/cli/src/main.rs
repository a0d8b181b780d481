use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use iongrad_cli::config::{self, FIGURES};
use iongrad_cli::figures::{run_figure, FigureOptions};
use iongrad_cli::formulas::{default_figure, evaluate};
use iongrad_cli::sweep::{sweep_file, sweep_spec};
use iongrad_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "iongrad",
    version,
    about = "Trapped-ion gradient sensing: figures, sweeps and closed forms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reproduce a canned figure (fig1 to fig5).
    Figure {
        name: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Fock truncation per mode.
        #[arg(long, env = "IONGRAD_NMAX")]
        nmax: Option<usize>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Override a config value, `section.key=value`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        #[arg(long)]
        no_plot: bool,
    },
    /// Run a one-dimensional parameter sweep.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Check a parameter file and echo its values in internal units.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate a closed form and print it as JSON.
    Analytic {
        formula: String,
        #[arg(long, conflicts_with = "figure")]
        config: Option<PathBuf>,
        /// Canned figure to take parameters from.
        #[arg(long)]
        figure: Option<String>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Figure {
            name,
            out,
            nmax,
            jobs,
            sets,
            no_plot,
        } => {
            let opts = FigureOptions {
                out_dir: out,
                n_max: nmax,
                jobs: jobs.max(1),
                overrides: sets,
                plot: !no_plot,
            };
            let report = run_figure(&name, &opts)?;
            println!(
                "{name}: max deviation {:.3e} (threshold {}){}",
                report.max_deviation,
                report.threshold,
                report
                    .truncation
                    .as_ref()
                    .map(|t| format!(
                        ", truncation delta {:.1e} at n_max {}",
                        t.delta, t.n_max_check
                    ))
                    .unwrap_or_default()
            );
            if !report.passed {
                return Err(CliError::Threshold(format!(
                    "{name}: deviation {:e} exceeds {}",
                    report.max_deviation, report.threshold
                )));
            }
        }
        Command::Sweep { config, out, jobs } => {
            let (path, rows) = sweep_file(&config, &out, jobs.max(1))?;
            let failed = rows.iter().filter(|r| r.report.is_err()).count();
            println!(
                "wrote {} ({} points, {failed} failed)",
                path.display(),
                rows.len()
            );
        }
        Command::Validate { config: path } => {
            let doc = config::read_document(&path)?;
            let sections = ["figure", "scenario", "sweep"];
            let m = config::model(&doc, &sections)?;
            if doc.section("sweep").is_some() {
                sweep_spec(&doc)?;
            }
            for line in &m.echo {
                println!("{line}");
            }
        }
        Command::Analytic {
            formula,
            config: path,
            figure,
            sets,
        } => {
            let mut doc = match (path, figure) {
                (Some(p), _) => config::read_document(&p)?,
                (None, fig) => {
                    let name = fig
                        .or_else(|| default_figure(&formula).map(String::from))
                        .ok_or_else(|| CliError::Config(format!("unknown formula `{formula}`")))?;
                    let text = config::canned(&name).ok_or_else(|| {
                        CliError::Config(format!(
                            "unknown figure `{name}` (available: {})",
                            FIGURES.join(", ")
                        ))
                    })?;
                    iongrad::models::parse_document(text)?
                }
            };
            config::apply_overrides(&mut doc, &sets)?;
            let m = config::model(&doc, &["figure", "scenario", "sweep"])?;
            let v = evaluate(&formula, &m, &doc)?;
            println!("{}", serde_json::to_string_pretty(&v).expect("json"));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
