use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use matkit_core::imaging::{load_material_dir, save_material_dir, MaterialSet};
use matkit_core::procedural;
use matkit_core::rng::derive_seed;
use matkit_core::synth::{generate_dataset, DatasetConfig, SceneConfig, MANIFEST_FILE};
use serde::Serialize;

use super::{invalid, out_path, IntrinsicsArgs, Named};
use crate::output::{io_err, CliResult, Outputs};
use crate::Global;

/// Subdirectory of a dataset holding the canonical materials.
pub const MATERIALS_DIR: &str = "materials";

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Directory of material subdirectories (albedo/normal/roughness/height).
    /// Without it, procedural materials are generated.
    #[arg(long)]
    materials: Option<PathBuf>,
    /// Output dataset directory.
    #[arg(long, default_value = "dataset")]
    out: PathBuf,
    #[arg(long, default_value_t = 20)]
    views: usize,
    /// Render width and height.
    #[arg(long, default_value_t = 512)]
    size: usize,
    /// Camera sphere radius, in plane extents.
    #[arg(long, default_value_t = 2.2)]
    radius: f64,
    /// Look-at target radius, in plane extents.
    #[arg(long, default_value_t = 0.3)]
    r_target: f64,
    /// Number of procedural materials when --materials is absent.
    #[arg(long, default_value_t = 2)]
    procedural: usize,
    /// Resolution of procedural materials.
    #[arg(long, default_value_t = 512)]
    material_size: usize,
    /// Render a flat plane instead of a TPS-deformed one.
    #[arg(long)]
    flat: bool,
    /// Use ambient light only.
    #[arg(long)]
    ambient_only: bool,
    #[command(flatten)]
    intrinsics: IntrinsicsArgs,
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MaterialSource {
    Directory { path: PathBuf, ids: Vec<String> },
    Procedural { count: usize, size: usize, seeds: Vec<u64> },
}

#[derive(Debug, Serialize)]
pub struct SynthConfig {
    out: PathBuf,
    materials: MaterialSource,
    dataset: DatasetConfig,
}

/// Dataset-relative record, free of the output location so that trees are
/// comparable byte for byte.
#[derive(Serialize)]
struct SynthRecord<'a> {
    materials: &'a MaterialSource,
    dataset: &'a DatasetConfig,
}

impl Named for SynthConfig {
    const NAME: &'static str = "synth";
}

fn material_ids(dir: &Path) -> CliResult<Vec<String>> {
    let entries = fs::read_dir(dir).map_err(|e| io_err(dir, e))?;
    let mut ids = Vec::new();
    for e in entries {
        let e = e.map_err(|e| io_err(dir, e))?;
        if e.path().join("albedo.png").is_file() {
            ids.push(e.file_name().to_string_lossy().into_owned());
        }
    }
    if ids.is_empty() {
        return Err(invalid(format!("--materials {}: no material subdirectories found", dir.display())));
    }
    ids.sort();
    Ok(ids)
}

impl SynthArgs {
    pub fn resolve(self, g: &Global) -> CliResult<SynthConfig> {
        let materials = match self.materials {
            Some(path) => MaterialSource::Directory { ids: material_ids(&path)?, path },
            None => {
                if self.procedural == 0 || self.material_size < 8 {
                    return Err(invalid("--procedural must be at least 1 and --material-size at least 8"));
                }
                MaterialSource::Procedural {
                    count: self.procedural,
                    size: self.material_size,
                    seeds: (0..self.procedural as u64).map(|i| derive_seed(g.seed, &[0x6d61_7465, i])).collect(),
                }
            }
        };
        let scene = if self.flat { SceneConfig::flat(1.0) } else { SceneConfig::default() };
        let intrinsics = match (self.intrinsics.fx, self.intrinsics.fy, self.intrinsics.cx, self.intrinsics.cy) {
            (None, None, None, None) => None,
            _ => Some(self.intrinsics.resolve(self.size, self.size)?),
        };
        let dataset = DatasetConfig {
            views: self.views,
            width: self.size,
            height: self.size,
            radius: self.radius * scene.extent,
            r_target: self.r_target * scene.extent,
            master_seed: g.seed,
            scene,
            intrinsics,
            ambient_only: self.ambient_only,
        };
        dataset.validate()?;
        Ok(SynthConfig { out: out_path(g, &self.out), materials, dataset })
    }
}

fn load_materials(source: &MaterialSource) -> CliResult<Vec<(String, MaterialSet)>> {
    match source {
        MaterialSource::Directory { path, ids } => {
            ids.iter().map(|id| Ok((id.clone(), load_material_dir(&path.join(id))?))).collect()
        }
        MaterialSource::Procedural { size, seeds, .. } => {
            seeds.iter().enumerate().map(|(i, &s)| Ok((format!("procedural_{i:02}"), procedural::material(s, *size)?))).collect()
        }
    }
}

pub fn run(c: &SynthConfig) -> CliResult<Vec<PathBuf>> {
    let materials = load_materials(&c.materials)?;
    let mut out = Outputs::new();
    out.dir(&c.out)?;
    for (id, mat) in &materials {
        out.external_dir(&c.out.join(id))?;
        let dir = c.out.join(MATERIALS_DIR).join(id);
        out.external_dir(&dir)?;
        save_material_dir(mat, &dir, 16)?;
    }
    generate_dataset(&materials, &c.dataset, &c.out)?;
    let record = SynthRecord { materials: &c.materials, dataset: &c.dataset };
    out.json(&c.out.join("synth.json"), &record)?;
    out.commit();
    Ok(vec![c.out.join(MANIFEST_FILE)])
}
