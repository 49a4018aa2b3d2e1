// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fastreact_cli::experiment::{self, RunOptions};
use fastreact_cli::plot::{emit_plot_data, LevelSelection};
use fastreact_cli::{presets, CliError, CliResult, ExperimentConfig};

/// Finite volume solver for reaction-diffusion systems with a fast reversible
/// reaction and their instantaneous-reaction limit.
#[derive(Parser)]
#[command(name = "fastreact", version)]
struct Cli {
    /// More output (-v: per-job lines and summaries).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Only report errors.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// JSON config file, or a manifest.txt of an earlier run.
    #[arg(short, long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration: dimerisation, dimerisation-sweep, trivial.
    #[arg(short, long)]
    preset: Option<String>,
}

impl Source {
    fn load(&self) -> CliResult<ExperimentConfig> {
        match (&self.config, &self.preset) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                ExperimentConfig::from_text(&text)
                    .map_err(|e| CliError::Config(format!("{}: {}", path.display(), strip(e))))
            }
            (None, Some(name)) => presets::preset(name),
            (None, None) => Err(CliError::Config("either --config or --preset is required".into())),
        }
    }
}

fn strip(e: CliError) -> String {
    match e {
        CliError::Config(m) => m,
        other => other.to_string(),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration (single k) and write all artifacts.
    Run {
        #[command(flatten)]
        source: Source,
        /// Output directory.
        #[arg(short, long)]
        out: PathBuf,
        /// Also write the mesh summary mesh.csv.
        #[arg(long)]
        mesh_csv: bool,
    },
    /// Solve every k of the configuration in parallel.
    Sweep {
        #[command(flatten)]
        source: Source,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        mesh_csv: bool,
    },
    /// Convert a trajectory CSV into per-level columnar files for gnuplot.
    PlotData {
        /// trajectory.csv or w_trajectory.csv.
        trajectory: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// `all`, or a comma list of level indices and `last`.
        #[arg(short, long, default_value = "all")]
        levels: String,
    },
    /// Parse and check a configuration without solving.
    ValidateConfig {
        #[command(flatten)]
        source: Source,
        /// Print the normalised configuration.
        #[arg(long)]
        print: bool,
    },
}

fn command_line() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn report(outcome: &experiment::Outcome, verbose: u8, quiet: bool) {
    if quiet {
        return;
    }
    for j in &outcome.jobs {
        if verbose > 0 || outcome.jobs.len() == 1 {
            println!("{}", j.report);
            println!(
                "  steps {}, max Newton iterations {}, fallback steps {}, {:.3} s",
                j.steps,
                j.max_newton_iterations,
                j.fallback_steps,
                j.elapsed.as_secs_f64()
            );
        }
    }
    if outcome.jobs.len() > 1 {
        print!("{}", experiment::limit_table_text(&outcome.jobs));
    }
    println!("manifest: {}", outcome.manifest.display());
}

fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Run { source, out, mesh_csv } | Command::Sweep { source, out, mesh_csv } => {
            let cfg = source.load()?;
            let opts = RunOptions {
                mesh_csv: *mesh_csv,
                command: command_line(),
            };
            let outcome = if matches!(cli.command, Command::Run { .. }) {
                experiment::run(&cfg, out, &opts)?
            } else {
                experiment::sweep(&cfg, out, &opts)?
            };
            report(&outcome, cli.verbose, cli.quiet);
        }
        Command::PlotData {
            trajectory,
            out,
            levels,
        } => {
            let sel = LevelSelection::parse(levels)?;
            let files = emit_plot_data(trajectory, out, &sel)?;
            if !cli.quiet {
                println!("wrote {} files to {}", files.len(), display(out));
            }
        }
        Command::ValidateConfig { source, print } => {
            let cfg = source.load()?;
            if *print {
                println!("{}", cfg.to_json());
            } else if !cli.quiet {
                println!("configuration {:?} is valid", cfg.name);
            }
        }
    }
    Ok(())
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
