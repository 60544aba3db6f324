use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use respdyn_cli::commands::{self, EdrArgs, EffectSiteArgs, InterpArgs, NrrArgs, PkArgs, ShapeArgs, SimulateArgs, SstArgs, WaveletArgs};
use respdyn_cli::config::{parse_config, PipelineConfig, CONFIG_ENV};

/// Spline blending, VM wavelets, streaming synchrosqueezing and respiratory
/// dynamics indices.
#[derive(Debug, Parser)]
#[command(name = "respdyn", version)]
struct Cli {
    /// key=value configuration file; defaults to $RESPDYN_CONFIG when set.
    /// Flags override the file, the file overrides built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Blending spline through irregular samples
    Interp(InterpArgs),
    /// VM wavelet samples, analytic extension and side-lobe ratio
    Wavelet(WaveletArgs),
    /// Streaming synchrosqueezed transform to a long-format tvPS
    Sst(SstArgs),
    /// ECG to R/S peaks to respiratory waveform
    Edr(EdrArgs),
    /// Ridge and nonrhythmic-to-rhythmic ratio from a tvPS
    Nrr(NrrArgs),
    /// Wave-shape regression
    Shape(ShapeArgs),
    /// Prediction probability and Spearman correlation
    Pk(PkArgs),
    /// Effect-site concentration from end-tidal concentration
    Effectsite(EffectSiteArgs),
    /// Synthetic signal with ground truth
    Simulate(SimulateArgs),
    /// Print the effective configuration in canonical form
    Config,
}

fn load_config(flag: Option<&PathBuf>) -> Result<PipelineConfig> {
    let path = match flag {
        Some(p) => Some(p.clone()),
        None => std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from),
    };
    let Some(path) = path else {
        return Ok(PipelineConfig::default());
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("stage config: {}", path.display()))?;
    parse_config(&text).with_context(|| format!("stage config: {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(cli.config.as_ref())?;
    match &cli.command {
        Command::Interp(a) => commands::interp(a, cfg),
        Command::Wavelet(a) => commands::wavelet(a, cfg),
        Command::Sst(a) => commands::sst(a, cfg),
        Command::Edr(a) => commands::edr(a, cfg),
        Command::Nrr(a) => commands::nrr(a, cfg),
        Command::Shape(a) => commands::shape(a, cfg),
        Command::Pk(a) => commands::pk(a, cfg),
        Command::Effectsite(a) => commands::effectsite(a, cfg),
        Command::Simulate(a) => commands::simulate(a, cfg),
        Command::Config => {
            print!("{}", cfg.canonical());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("respdyn: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
