use std::path::{Path, PathBuf};

use clap::Args;
use matkit_core::imaging::{load_depth, load_image, load_mask, ImageKind};
use matkit_core::rectify::{rectify_detailed, Intrinsics, NormalizeMode, RectifyParams};
use serde::Serialize;

use super::{image_dims, out_path, IntrinsicsArgs, Named};
use crate::output::{CliResult, Outputs};
use crate::Global;

#[derive(Args, Debug)]
pub struct RectifyArgs {
    /// Source RGB image.
    #[arg(long)]
    image: PathBuf,
    /// Region mask; any nonzero pixel is inside.
    #[arg(long)]
    mask: PathBuf,
    /// Depth map (PFM or 16-bit PNG).
    #[arg(long)]
    depth: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "rectified")]
    out: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    d_shift: f64,
    /// Side of the square output texture.
    #[arg(long, default_value_t = 1024)]
    target: usize,
    #[arg(long, default_value_t = 0.5)]
    s_sample: f64,
    /// Hole-filling kernel size.
    #[arg(long, default_value_t = 5)]
    kernel: usize,
    #[arg(long, default_value = "per-axis")]
    normalize: NormalizeMode,
    #[command(flatten)]
    intrinsics: IntrinsicsArgs,
}

#[derive(Debug, Serialize)]
pub struct RectifyConfig {
    image: PathBuf,
    mask: PathBuf,
    depth: PathBuf,
    out: PathBuf,
    master_seed: u64,
    intrinsics: Intrinsics,
    params: RectifyParams,
}

impl Named for RectifyConfig {
    const NAME: &'static str = "rectify";
}

#[derive(Serialize)]
struct RectifyRecord<'a> {
    image: &'a Path,
    mask: &'a Path,
    depth: &'a Path,
    master_seed: u64,
    intrinsics: Intrinsics,
    params: RectifyParams,
    hole_fraction: f64,
    grid_w: usize,
    grid_h: usize,
    valid_fraction: f64,
}

impl RectifyArgs {
    pub fn resolve(self, g: &Global) -> CliResult<RectifyConfig> {
        let params = RectifyParams {
            d_shift: self.d_shift,
            s_sample: self.s_sample,
            hole_kernel: self.kernel,
            normalize: self.normalize,
            ..RectifyParams::new(self.target, self.target)
        };
        params.validate()?;
        let (w, h) = image_dims(&self.image)?;
        Ok(RectifyConfig {
            intrinsics: self.intrinsics.resolve(w, h)?,
            image: self.image,
            mask: self.mask,
            depth: self.depth,
            out: out_path(g, &self.out),
            master_seed: g.seed,
            params,
        })
    }
}

pub fn run(c: &RectifyConfig) -> CliResult<Vec<PathBuf>> {
    let image = load_image(&c.image, ImageKind::Albedo)?;
    let mask = load_mask(&c.mask)?;
    let depth = load_depth(&c.depth)?;
    let r = rectify_detailed(&image, &mask, &depth, &c.intrinsics, &c.params)?;
    let mut out = Outputs::new();
    out.dir(&c.out)?;
    out.image(&c.out.join("texture.png"), &r.texture, 8)?;
    out.mask(&c.out.join("mask.png"), &r.mask)?;
    let record = RectifyRecord {
        image: &c.image,
        mask: &c.mask,
        depth: &c.depth,
        master_seed: c.master_seed,
        intrinsics: c.intrinsics,
        params: c.params,
        hole_fraction: r.hole_fraction,
        grid_w: r.grid_w,
        grid_h: r.grid_h,
        valid_fraction: r.mask.count() as f64 / (r.mask.width() * r.mask.height()) as f64,
    };
    out.json(&c.out.join("rectify.json"), &record)?;
    Ok(out.commit())
}
