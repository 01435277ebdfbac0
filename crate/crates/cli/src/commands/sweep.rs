use std::path::PathBuf;

use clap::Args;
use matkit_core::imaging::{load_depth, load_image, load_mask, ImageKind};
use matkit_core::rectify::{sweep_d_shift, sweep_to_csv, Intrinsics, NormalizeMode, RectifyParams};
use serde::Serialize;

use super::{image_dims, invalid, out_path, IntrinsicsArgs, Named};
use crate::output::{CliResult, Outputs};
use crate::Global;

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    depth: PathBuf,
    /// Comma-separated d_shift values.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,1,5,25,100")]
    values: Vec<f64>,
    /// Output CSV file.
    #[arg(long, default_value = "sweep.csv")]
    out: PathBuf,
    #[arg(long, default_value_t = 1024)]
    target: usize,
    #[arg(long, default_value_t = 0.5)]
    s_sample: f64,
    #[arg(long, default_value_t = 5)]
    kernel: usize,
    #[arg(long, default_value = "per-axis")]
    normalize: NormalizeMode,
    #[command(flatten)]
    intrinsics: IntrinsicsArgs,
}

#[derive(Debug, Serialize)]
pub struct SweepConfig {
    image: PathBuf,
    mask: PathBuf,
    depth: PathBuf,
    values: Vec<f64>,
    out: PathBuf,
    master_seed: u64,
    intrinsics: Intrinsics,
    params: RectifyParams,
}

impl Named for SweepConfig {
    const NAME: &'static str = "sweep";
}

impl SweepArgs {
    pub fn resolve(self, g: &Global) -> CliResult<SweepConfig> {
        if self.values.is_empty() {
            return Err(invalid("--values needs at least one d_shift"));
        }
        let params = RectifyParams {
            s_sample: self.s_sample,
            hole_kernel: self.kernel,
            normalize: self.normalize,
            ..RectifyParams::new(self.target, self.target)
        };
        params.validate()?;
        let (w, h) = image_dims(&self.image)?;
        Ok(SweepConfig {
            intrinsics: self.intrinsics.resolve(w, h)?,
            image: self.image,
            mask: self.mask,
            depth: self.depth,
            values: self.values,
            out: out_path(g, &self.out),
            master_seed: g.seed,
            params,
        })
    }
}

pub fn run(c: &SweepConfig) -> CliResult<Vec<PathBuf>> {
    let image = load_image(&c.image, ImageKind::Albedo)?;
    let mask = load_mask(&c.mask)?;
    let depth = load_depth(&c.depth)?;
    let rows = sweep_d_shift(&image, &mask, &depth, &c.intrinsics, &c.params, &c.values)?;
    let mut out = Outputs::new();
    out.text(&c.out, &sweep_to_csv(&rows))?;
    Ok(out.commit())
}
