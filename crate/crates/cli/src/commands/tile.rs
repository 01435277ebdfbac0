use std::path::{Path, PathBuf};

use clap::Args;
use matkit_core::imaging::{load_image, load_material_dir, Image, ImageKind, ATTRIBUTES};
use matkit_core::metrics::{seam_ratio, tile, SEAMY_THRESHOLD};
use serde::Serialize;

use super::{invalid, out_path, Named};
use crate::output::{CliResult, Outputs};
use crate::Global;

#[derive(Args, Debug)]
pub struct TileArgs {
    /// An image file or a material directory.
    #[arg(long)]
    input: PathBuf,
    /// Tiles per side of the composite.
    #[arg(long, default_value_t = 2)]
    tiles: usize,
    /// Output directory for composites and `report.json`.
    #[arg(long, default_value = "tile-check")]
    out: PathBuf,
}

#[derive(Debug, Serialize)]
pub struct TileConfig {
    input: PathBuf,
    tiles: usize,
    seamy_threshold: f64,
    out: PathBuf,
    master_seed: u64,
}

impl Named for TileConfig {
    const NAME: &'static str = "tile-check";
}

impl TileArgs {
    pub fn resolve(self, g: &Global) -> CliResult<TileConfig> {
        if self.tiles < 2 {
            return Err(invalid(format!("--tiles must be at least 2, got {}", self.tiles)));
        }
        Ok(TileConfig {
            input: self.input,
            tiles: self.tiles,
            seamy_threshold: SEAMY_THRESHOLD,
            out: out_path(g, &self.out),
            master_seed: g.seed,
        })
    }
}

#[derive(Serialize)]
struct MapReport {
    map: String,
    seam_ratio: f64,
    seamy: bool,
}

#[derive(Serialize)]
struct TileReport {
    tiles: usize,
    seamy_threshold: f64,
    maps: Vec<MapReport>,
    seamy: bool,
}

fn load_maps(input: &Path) -> CliResult<Vec<(String, Image)>> {
    if input.is_dir() {
        let mat = load_material_dir(input)?;
        Ok(ATTRIBUTES.iter().zip(mat.maps()).map(|(n, m)| (n.to_string(), m.clone())).collect())
    } else {
        let name = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "image".into());
        let img = match load_image(input, ImageKind::Albedo) {
            Ok(img) => img,
            Err(e) if e.is_io() => return Err(e.into()),
            Err(_) => load_image(input, ImageKind::Height)?,
        };
        Ok(vec![(name, img)])
    }
}

pub fn run(c: &TileConfig) -> CliResult<Vec<PathBuf>> {
    let maps = load_maps(&c.input)?;
    let mut out = Outputs::new();
    out.dir(&c.out)?;
    let mut reports = Vec::new();
    for (name, img) in &maps {
        let ratio = seam_ratio(img)?;
        out.image(&c.out.join(format!("tiled_{name}.png")), &tile(img, c.tiles)?, 8)?;
        reports.push(MapReport { map: name.clone(), seam_ratio: ratio, seamy: ratio > c.seamy_threshold });
    }
    let report =
        TileReport { tiles: c.tiles, seamy_threshold: c.seamy_threshold, seamy: reports.iter().any(|r| r.seamy), maps: reports };
    out.json(&c.out.join("report.json"), &report)?;
    Ok(out.commit())
}
