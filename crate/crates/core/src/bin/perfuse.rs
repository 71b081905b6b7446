use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use perfuse::experiments::{run, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "perfuse", version, about = "Run the tissue/vessel transport experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Condition numbers of the coupling pencils.
    ConditionTable(Args),
    /// MinRes iteration counts over the parameter grid.
    IterationSweep(Args),
    /// Tracer uptake and clearance on a synthetic vessel tree.
    Perfusion(Args),
    /// Condition numbers of the 3x3 model over a parameter grid.
    ScalarModel(Args),
}

#[derive(clap::Args)]
struct Args {
    /// JSON configuration; defaults are used for missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dimension: Option<usize>,
    /// Comma-separated cells per side, e.g. 32,64,128.
    #[arg(long, value_delimiter = ',')]
    resolutions: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::ConditionTable(a) => (ExperimentKind::ConditionTable, a),
        Command::IterationSweep(a) => (ExperimentKind::IterationSweep, a),
        Command::Perfusion(a) => (ExperimentKind::Perfusion, a),
        Command::ScalarModel(a) => (ExperimentKind::ScalarModel, a),
    };
    let result = args
        .config
        .as_deref()
        .map(ExperimentConfig::load)
        .unwrap_or_else(|| Ok(ExperimentConfig::default()))
        .and_then(|mut config| {
            if let Some(out) = args.out {
                config.output_dir = out;
            }
            if let Some(d) = args.dimension {
                config.dimension = d;
            }
            match (kind, args.resolutions) {
                (ExperimentKind::Perfusion, Some(r)) if r.len() == 1 => config.perfusion.resolution = r[0],
                (ExperimentKind::Perfusion, Some(_)) => {
                    return Err(perfuse::Error::Config("perfusion takes a single resolution".into()));
                }
                (_, Some(r)) => config.resolutions = Some(r),
                (_, None) => {}
            }
            if let Some(s) = args.seed {
                config.seed = s;
                config.perfusion.tree_seed = s;
            }
            run(kind, &config).map(|m| (config, m))
        });
    match result {
        Ok((config, manifest)) => {
            for f in &manifest.outputs {
                println!("{}", config.output_dir.join(f).display());
            }
            println!("{}", config.output_dir.join("manifest.json").display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
