//! One module per subcommand: clap arguments, a resolved serializable
//! configuration and the runner.

pub mod align;
pub mod eval;
pub mod procedural;
pub mod rectify;
pub mod sample;
pub mod sweep;
pub mod synth;
pub mod tile;

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use matkit_core::rectify::{default_intrinsics, Intrinsics};
use serde::Serialize;

use crate::output::{CliError, CliResult};
use crate::Global;

#[derive(Serialize)]
struct ConfigRecord<'a, C: Serialize> {
    command: &'a str,
    threads: Option<usize>,
    master_seed: u64,
    output_dir: &'a Path,
    params: &'a C,
}

/// Prints the resolved configuration or runs the command and lists the files written.
pub fn dispatch<C: Serialize + Named>(g: &Global, config: C, run: fn(&C) -> CliResult<Vec<PathBuf>>) -> CliResult<()> {
    if g.print_config {
        let record = ConfigRecord {
            command: C::NAME,
            threads: g.threads,
            master_seed: g.seed,
            output_dir: &g.output_dir,
            params: &config,
        };
        let _ = writeln!(io::stdout().lock(), "{}", serde_json::to_string_pretty(&record).expect("serializable config"));
        return Ok(());
    }
    let written = run(&config)?;
    let mut stdout = io::stdout().lock();
    for path in written {
        let _ = writeln!(stdout, "{}", path.display());
    }
    Ok(())
}

pub trait Named {
    const NAME: &'static str;
}

/// Relative output paths live under the output directory.
pub fn out_path(g: &Global, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        g.output_dir.join(p)
    }
}

pub fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

/// Pinhole intrinsics flags; unset values fall back to the image-size defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct IntrinsicsArgs {
    /// Horizontal focal length in pixels.
    #[arg(long)]
    pub fx: Option<f64>,
    /// Vertical focal length in pixels (defaults to --fx).
    #[arg(long)]
    pub fy: Option<f64>,
    #[arg(long)]
    pub cx: Option<f64>,
    #[arg(long)]
    pub cy: Option<f64>,
}

impl IntrinsicsArgs {
    pub fn resolve(&self, width: usize, height: usize) -> CliResult<Intrinsics> {
        let d = default_intrinsics(width, height);
        let fx = self.fx.unwrap_or(d.fx);
        let k = Intrinsics::new(fx, self.fy.unwrap_or(fx), self.cx.unwrap_or(d.cx), self.cy.unwrap_or(d.cy))?;
        Ok(k)
    }
}

/// Image size without decoding pixel data, for configuration printing.
pub fn image_dims(path: &Path) -> CliResult<(usize, usize)> {
    if path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("pfm")) {
        let img = matkit_core::imaging::read_pfm(path)?;
        return Ok((img.width(), img.height()));
    }
    let img = matkit_core::imaging::load_mask(path)?;
    Ok((img.width(), img.height()))
}
