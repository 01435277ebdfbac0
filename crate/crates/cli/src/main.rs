//! `matkit` command-line front end.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use output::CliError;

#[derive(Parser, Debug)]
#[command(name = "matkit", version, about = "Material rectification, synthesis and evaluation toolkit")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Worker threads; 1 is the bit-exact reference mode.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Master seed recorded in every output.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory that relative output paths are resolved against.
    #[arg(long, global = true, env = "MATKIT_OUT_DIR", default_value = ".")]
    pub output_dir: PathBuf,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rectify a masked, depth-annotated surface into a fronto-parallel texture.
    Rectify(commands::rectify::RectifyArgs),
    /// Render a synthetic dataset from canonical materials.
    Synth(commands::synth::SynthArgs),
    /// Write rotation-aligned ground-truth materials for dataset entries.
    Align(commands::align::AlignArgs),
    /// Run DDIM sampling with a toy denoiser and decode the result.
    Sample(commands::sample::SampleArgs),
    /// Compare predicted materials against ground truth.
    Eval(commands::eval::EvalArgs),
    /// Tile an image or material and report seam ratios.
    TileCheck(commands::tile::TileArgs),
    /// Sweep d_shift and report remap deviation and hole fraction.
    Sweep(commands::sweep::SweepArgs),
    /// Generate a procedural tileable material.
    Procedural(commands::procedural::ProceduralArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("cannot configure thread pool: {e}")))?;
    }
    let g = &cli.global;
    match cli.command {
        Command::Rectify(a) => commands::dispatch(g, a.resolve(g)?, commands::rectify::run),
        Command::Synth(a) => commands::dispatch(g, a.resolve(g)?, commands::synth::run),
        Command::Align(a) => commands::dispatch(g, a.resolve(g)?, commands::align::run),
        Command::Sample(a) => commands::dispatch(g, a.resolve(g)?, commands::sample::run),
        Command::Eval(a) => commands::dispatch(g, a.resolve(g)?, commands::eval::run),
        Command::TileCheck(a) => commands::dispatch(g, a.resolve(g)?, commands::tile::run),
        Command::Sweep(a) => commands::dispatch(g, a.resolve(g)?, commands::sweep::run),
        Command::Procedural(a) => commands::dispatch(g, a.resolve(g)?, commands::procedural::run),
    }
}

/// Collapses a clap error into a single diagnostic line.
fn one_line(err: &clap::Error) -> String {
    err.render()
        .to_string()
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with("Usage:") && !l.starts_with("For more information"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", one_line(&e));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
