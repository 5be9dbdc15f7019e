use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bnpmot::experiment::{plot_csv, run_experiment, ExperimentConfig, OUTPUT_DIR_ENV};
use bnpmot::simulate::{preset, PRESETS};
use bnpmot::Error;

#[derive(Parser)]
#[command(name = "bnpmot", version, about = "Nonparametric multi-object tracking experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment file.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` (the environment variable wins over the file
        /// but not over this flag).
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Built-in scenarios.
    Preset {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Parse and check an experiment file without running it.
    Validate { config: PathBuf },
    /// Render CSV exports as SVG next to each input.
    Plot {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    /// Print a preset as an inline scenario table.
    Show { name: String },
}

fn exit_for(e: &Error) -> ExitCode {
    match e {
        Error::Config { .. } => ExitCode::from(1),
        _ => ExitCode::from(2),
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(path)?;
    cfg.apply_env();
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, output_dir } => {
            let mut cfg = load(&config)?;
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            let out = run_experiment(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&out.summary)?);
            eprintln!(
                "wrote {} files to {} in {:.1}s ({} resumed runs)",
                out.manifest.files.len(),
                cfg.output_dir.display(),
                out.manifest.wall_time_s,
                out.manifest.resumed_runs
            );
        }
        Command::Preset { action: PresetAction::List } => {
            for name in PRESETS {
                let s = preset(name).expect("listed preset exists");
                println!(
                    "{name:8} {} objects, {} steps, {:?} motion",
                    s.objects.len(),
                    s.steps,
                    s.motion
                );
            }
        }
        Command::Preset {
            action: PresetAction::Show { name },
        } => {
            let s = preset(&name).ok_or_else(|| Error::Config {
                field: "preset".into(),
                reason: format!("unknown preset `{name}`"),
            })?;
            let text = toml::to_string(&s).map_err(|e| Error::Invariant(e.to_string()))?;
            print!("{text}");
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            let scenario = cfg.validate()?;
            println!(
                "ok: {} ({} steps, {} trackers, {} runs, output {}, env {OUTPUT_DIR_ENV})",
                cfg.name,
                scenario.steps,
                cfg.trackers.len(),
                cfg.mc_runs,
                cfg.output_dir.display()
            );
        }
        Command::Plot { csv } => {
            for p in &csv {
                println!("{}", plot_csv(p)?.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}
