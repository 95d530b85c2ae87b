use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use suv_core::dynamics::Scheme;
use suv_core::harness::{run_experiment, ConfigOverrides, ExperimentConfig, ExperimentKind};
use suv_core::noise::NoiseKind;

#[derive(Parser)]
#[command(name = "suv", version, about = "Colored-noise state reduction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its CSV files and manifest.
    Run(RunArgs),
    /// Print the preset configuration of an experiment as TOML.
    Preset {
        experiment: ExperimentKind,
    },
    /// List the available experiments.
    List,
}

#[derive(clap::Args)]
struct RunArgs {
    experiment: ExperimentKind,
    /// TOML file with configuration keys; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_traj: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    noise: Option<NoiseKind>,
    #[arg(long)]
    scheme: Option<Scheme>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    z0: Option<f64>,
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let file = match &args.config {
        Some(path) => ConfigOverrides::from_file(path)
            .with_context(|| format!("reading config file {}", path.display()))?,
        None => ConfigOverrides::default(),
    };
    let flags = ConfigOverrides {
        experiment: Some(args.experiment),
        n_traj: args.n_traj,
        master_seed: args.seed,
        noise: args.noise,
        scheme: args.scheme,
        dt: args.dt,
        horizon: args.horizon,
        z0: args.z0,
        output_dir: args.out,
        ..ConfigOverrides::default()
    };
    let cfg = ExperimentConfig::resolve(args.experiment, file.merge(flags))?;
    let out = run_experiment(&cfg)?;
    for f in &out.files {
        log::info!("wrote {}", f.display());
    }
    log::info!("wrote {}", out.manifest.display());
    println!("{:#}", out.results);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Preset { experiment } => {
            print!("{}", ExperimentConfig::preset(experiment).to_toml_string());
            Ok(())
        }
        Command::List => {
            for kind in ExperimentKind::ALL {
                println!("{kind}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
