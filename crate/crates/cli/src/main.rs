//! `brainnet`: validate EEG recordings, build brain-network graphs, run the
//! cross-validated GCN experiments and export cached graphs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod files;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Experiment, ExportFormat, Outcome};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "brainnet", version, about = "EEG brain-network insomnia classification")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, env = "BRAINNET_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    /// More log output; repeat for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that every recording in the manifest is readable and complete.
    Validate {
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Preprocess recordings and write graph caches.
    Preprocess {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Window length in seconds.
        #[arg(long)]
        window: Option<f64>,
        #[arg(long)]
        omit_channel: Option<String>,
    },
    /// Run an experiment and write its reports.
    Run {
        #[arg(long, value_enum)]
        experiment: Experiment,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        window: Option<f64>,
        #[arg(long)]
        omit_channel: Option<String>,
        /// Override the number of training epochs.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Dump cached graphs as CSV or JSON.
    Export {
        #[arg(long, value_enum, default_value = "csv")]
        format: ExportFormat,
        /// A cache file or a directory of them.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

struct Overrides {
    manifest: Option<PathBuf>,
    window: Option<f64>,
    omit_channel: Option<String>,
    epochs: Option<usize>,
}

fn resolve(cli: &Cli, o: Overrides) -> anyhow::Result<RunConfig> {
    let mut c = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        c.seed = s;
        c.model.seed = s;
    }
    if let Some(d) = &cli.output_dir {
        c.output_dir = Some(d.clone());
    }
    if let Some(m) = o.manifest {
        c.manifest = Some(m);
    }
    if let Some(w) = o.window {
        c.window_seconds = w;
    }
    if o.omit_channel.is_some() {
        c.omit_channel = o.omit_channel;
    }
    if let Some(e) = o.epochs {
        c.model.epochs = e;
    }
    Ok(c)
}

fn execute(cli: Cli) -> anyhow::Result<Outcome> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let none = || Overrides {
        manifest: None,
        window: None,
        omit_channel: None,
        epochs: None,
    };
    match &cli.command {
        Command::Validate { manifest } => {
            let c = resolve(&cli, Overrides { manifest: manifest.clone(), ..none() })?;
            commands::validate(&c)
        }
        Command::Preprocess {
            manifest,
            window,
            omit_channel,
        } => {
            let c = resolve(
                &cli,
                Overrides {
                    manifest: manifest.clone(),
                    window: *window,
                    omit_channel: omit_channel.clone(),
                    epochs: None,
                },
            )?;
            commands::preprocess(&c)
        }
        Command::Run {
            experiment,
            manifest,
            window,
            omit_channel,
            epochs,
        } => {
            let c = resolve(
                &cli,
                Overrides {
                    manifest: manifest.clone(),
                    window: *window,
                    omit_channel: omit_channel.clone(),
                    epochs: *epochs,
                },
            )?;
            commands::run(&c, *experiment, cli.jobs)
        }
        Command::Export { format, input, output } => commands::export(input, *format, output.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Failed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
