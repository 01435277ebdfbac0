use std::path::PathBuf;

use clap::Args;
use matkit_core::imaging::save_material_dir;
use matkit_core::procedural;
use serde::Serialize;

use super::{invalid, out_path, Named};
use crate::output::{CliResult, Outputs};
use crate::Global;

#[derive(Args, Debug)]
pub struct ProceduralArgs {
    /// Output material directory.
    #[arg(long, default_value = "material")]
    out: PathBuf,
    #[arg(long, default_value_t = 512)]
    size: usize,
}

#[derive(Debug, Serialize)]
pub struct ProceduralConfig {
    out: PathBuf,
    size: usize,
    seed: u64,
}

impl Named for ProceduralConfig {
    const NAME: &'static str = "procedural";
}

impl ProceduralArgs {
    pub fn resolve(self, g: &Global) -> CliResult<ProceduralConfig> {
        if self.size < 8 {
            return Err(invalid("--size must be at least 8"));
        }
        Ok(ProceduralConfig { out: out_path(g, &self.out), size: self.size, seed: g.seed })
    }
}

pub fn run(c: &ProceduralConfig) -> CliResult<Vec<PathBuf>> {
    let mat = procedural::material(c.seed, c.size)?;
    let mut out = Outputs::new();
    out.external_dir(&c.out)?;
    save_material_dir(&mat, &c.out, 16)?;
    out.commit();
    Ok(vec![c.out.clone()])
}
