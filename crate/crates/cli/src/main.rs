use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use vertisite::ingest::{load_scenario, IngestError, Parameters};
use vertisite::pipeline::{run_pipeline, PipelineError, RunConfig};
use vertisite::report::{emit_reports, EmitOptions};
use vertisite::scoring::Timeframe;
use vertisite::synth::{generate, SynthConfig};

const EXIT_VALIDATION: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(
    name = "vertisite",
    version,
    about = "Highway-transfer vertiport candidate selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage and write the reports.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        buffer_m: Option<f64>,
        #[arg(long)]
        range_km: Option<f64>,
        #[arg(long)]
        cell_m: Option<f64>,
        #[arg(long)]
        top_k: Option<usize>,
        /// Comma-separated, e.g. MORNING_PEAK,OFF_PEAK
        #[arg(long, value_delimiter = ',', value_parser = parse_timeframe)]
        timeframes: Option<Vec<Timeframe>>,
        /// Also write one file per stage.
        #[arg(long)]
        emit_intermediate: bool,
        /// Also write the gamma crossover table.
        #[arg(long)]
        gamma_sweep: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Load and validate a scenario without running it.
    Validate {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Write a seeded synthetic desk-scale scenario.
    GenSynthetic {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_timeframe(s: &str) -> Result<Timeframe, String> {
    s.trim().parse()
}

/// An error tagged with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn validation(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: EXIT_VALIDATION,
            error: error.into(),
        }
    }

    fn runtime(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: EXIT_RUNTIME,
            error: error.into(),
        }
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        Failure::validation(e)
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if e.is_validation() {
            Failure::validation(e)
        } else {
            Failure::runtime(e)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run {
            manifest,
            gamma,
            buffer_m,
            range_km,
            cell_m,
            top_k,
            timeframes,
            emit_intermediate,
            gamma_sweep,
            out,
        } => {
            let bundle = load_scenario(&manifest)?;
            let overrides = Parameters {
                gamma,
                buffer_m,
                range_km,
                cell_m,
                top_k,
                timeframes,
                ..Default::default()
            };
            let config = RunConfig::resolve(&bundle.parameters, &overrides)?;
            let report = run_pipeline(&bundle, &config)?;
            let opts = EmitOptions {
                intermediate: emit_intermediate,
                gamma_sweep,
            };
            let files = emit_reports(&report, &out, opts).map_err(Failure::runtime)?;
            println!(
                "{} candidates ranked, {} destinations scored; {} files in {}",
                report.ranking.len(),
                report.destinations.len(),
                files.len(),
                out.display()
            );
            println!("content hash {}", report.content_hash);
            Ok(())
        }
        Command::Validate { manifest } => {
            let b = load_scenario(&manifest)?;
            RunConfig::resolve(&b.parameters, &Parameters::default())?;
            println!(
                "ok: {} facilities, {} destinations, {} constraint polygons, {} alt nodes, {} transport nodes",
                b.facilities.len(),
                b.destinations.len(),
                b.constraints.polygons.len(),
                b.alt_nodes.len(),
                b.transport_nodes.len()
            );
            Ok(())
        }
        Command::GenSynthetic { seed, out } => {
            let bundle = generate(seed, &SynthConfig::default());
            let path = bundle
                .write_dir(&out)
                .with_context(|| format!("writing synthetic scenario to {}", out.display()))
                .map_err(Failure::runtime)?;
            println!("wrote {}", path.display());
            Ok(())
        }
    }
}
