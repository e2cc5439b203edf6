use std::process::ExitCode;

use algoboard_cli::config::{ConfigArgs, DataSource, PipelineConfig};
use algoboard_cli::ingest::{self, Dataset};
use algoboard_cli::pipeline::{
    execute, execute_galton, replot, write_artifacts, Goal, PipelineError, PipelineRun, Stage,
};
use algoboard_core::synth::simulate_dataset;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "algoboard", version, about = "Unsupervised decoding with recursive symmetric correction")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    #[command(flatten)]
    args: ConfigArgs,
}

#[derive(Subcommand, Clone, Copy)]
enum Verb {
    /// Write a synthetic dataset as positions.csv and spikes.csv.
    Simulate,
    /// Fit the decoder and write level-0 predictions.
    Decode,
    /// Decode, then apply the recursive correction.
    Correct,
    /// Decode, correct and tabulate per-level metrics.
    Evaluate,
    /// Simulate the Galton board on its own.
    Galton,
    /// Every stage, including spectra, the Galton board and figures.
    RunAll,
    /// Re-render figures from a finished run in the output directory.
    Plot,
}

fn simulate(cfg: &PipelineConfig) -> Result<(), PipelineError> {
    if cfg.data.source == DataSource::Csv {
        return Err(PipelineError::new(Stage::Config, "simulate needs data.source = synthetic"));
    }
    cfg.validate().map_err(|e| PipelineError::new(Stage::Config, e))?;
    let sim = cfg.sim_config().map_err(|e| PipelineError::new(Stage::Config, e))?;
    let ds = simulate_dataset(&sim).map_err(|e| PipelineError::new(Stage::Generate, e))?;
    let dir = cfg.resolved_out_dir();
    std::fs::create_dir_all(&dir).map_err(|e| PipelineError::new(Stage::Write, format!("{}: {e}", dir.display())))?;
    let data = Dataset { x: ds.x, y: ds.y, obs: ds.obs };
    let (p, s) = ingest::write_dataset(&dir, &data).map_err(|e| PipelineError::new(Stage::Write, e))?;
    eprintln!("wrote {} and {}", p.display(), s.display());
    Ok(())
}

fn run(verb: Verb, cfg: &PipelineConfig) -> Result<(), PipelineError> {
    let dir = cfg.resolved_out_dir();
    let outcome: PipelineRun = match verb {
        Verb::Simulate => return simulate(cfg),
        Verb::Decode => execute(cfg, Goal::Decode)?,
        Verb::Correct => execute(cfg, Goal::Correct)?,
        Verb::Evaluate => execute(cfg, Goal::Evaluate)?,
        Verb::RunAll => execute(cfg, Goal::All)?,
        Verb::Galton => execute_galton(cfg)?,
        Verb::Plot => replot(&dir)?,
    };
    for notice in &outcome.notices {
        eprintln!("note: {notice}");
    }
    let written = write_artifacts(&dir, &outcome.artifacts)?;
    eprintln!("wrote {} files to {}", written.len(), dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match cli.args.resolve() {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {}", PipelineError::new(Stage::Config, e));
            return ExitCode::from(2);
        }
    };
    match run(cli.verb, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
