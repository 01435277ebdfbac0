use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::camera::{sample_camera, view_azimuth, CameraPose};
use super::raster::rasterize;
use super::scene::{build_plane_scene, sample_lighting, LightingConfig, SceneConfig};
use crate::imaging::{save_image, save_mask, write_pfm, MaterialSet};
use crate::rectify::{default_intrinsics, Intrinsics};
use crate::rng::{derive_seed, rng_from_seed};
use crate::tps::TpsSpec;
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.jsonl";

const TPS_STREAM: u64 = 0;
const CAMERA_STREAM: u64 = 1;
const LIGHTING_STREAM: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub views: usize,
    pub width: usize,
    pub height: usize,
    pub radius: f64,
    pub r_target: f64,
    pub master_seed: u64,
    pub scene: SceneConfig,
    /// Defaults to `default_intrinsics(width, height)`.
    pub intrinsics: Option<Intrinsics>,
    /// Replace sampled lighting with pure ambient light.
    pub ambient_only: bool,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        let scene = SceneConfig::default();
        Self {
            views: 20,
            width: 512,
            height: 512,
            radius: 2.2 * scene.extent,
            r_target: 0.3 * scene.extent,
            master_seed: 0,
            scene,
            intrinsics: None,
            ambient_only: false,
        }
    }
}

impl DatasetConfig {
    pub fn intrinsics(&self) -> Intrinsics {
        self.intrinsics.unwrap_or_else(|| default_intrinsics(self.width, self.height))
    }

    pub fn validate(&self) -> Result<()> {
        if self.views == 0 {
            return Err(Error::invalid("at least one view per material is required"));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("render size must be positive"));
        }
        if !(self.r_target >= 0.0 && self.radius > self.r_target) {
            return Err(Error::invalid("camera radius must exceed the target radius"));
        }
        self.scene.validate()?;
        self.intrinsics().validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSeeds {
    pub tps_seed: u64,
    pub camera_seed: u64,
    pub lighting_seed: u64,
}

impl SampleSeeds {
    pub fn derive(master: u64, material_index: usize, view: usize) -> Self {
        let path = |stream| derive_seed(master, &[material_index as u64, view as u64, stream]);
        Self { tps_seed: path(TPS_STREAM), camera_seed: path(CAMERA_STREAM), lighting_seed: path(LIGHTING_STREAM) }
    }
}

/// Paths relative to the dataset root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleFiles {
    pub rgb: String,
    pub mask: String,
    pub depth: String,
}

/// One line of `manifest.jsonl`. `alpha = atan2(v_y, v_x)` of the view
/// vector; the matching ground truth is the canonical material rotated by
/// `−alpha` (see [`aligned_ground_truth`](super::aligned_ground_truth)).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub material_id: String,
    pub view_index: usize,
    pub files: SampleFiles,
    pub width: usize,
    pub height: usize,
    pub intrinsics: Intrinsics,
    pub pose: CameraPose,
    pub alpha: f64,
    pub seeds: SampleSeeds,
    pub lighting: LightingConfig,
    pub raw_depth_range: [f64; 2],
    pub tps: TpsSpec,
}

fn render_sample(
    root: &Path,
    material_id: &str,
    material: &MaterialSet,
    material_index: usize,
    view: usize,
    config: &DatasetConfig,
) -> Result<ManifestEntry> {
    let seeds = SampleSeeds::derive(config.master_seed, material_index, view);
    let lighting = if config.ambient_only {
        LightingConfig::ambient_only()
    } else {
        sample_lighting(&mut rng_from_seed(seeds.lighting_seed))
    };
    let scene = build_plane_scene(material.clone(), config.scene, lighting, &mut rng_from_seed(seeds.tps_seed))?;
    let pose = sample_camera(&mut rng_from_seed(seeds.camera_seed), config.radius, config.r_target)?;
    let k = config.intrinsics();
    let out = rasterize(&scene, &pose, &k, config.width, config.height)?;
    let alpha = view_azimuth(&pose)?;

    let rel = format!("{material_id}/view_{view:03}");
    let dir = root.join(&rel);
    let write = || -> Result<()> {
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        save_image(&out.rgb, &dir.join("rgb.png"), 8)?;
        save_mask(&out.mask, &dir.join("mask.png"))?;
        write_pfm(&out.depth.to_image(), &dir.join("depth.pfm"))
    };
    if let Err(e) = write() {
        let _ = fs::remove_dir_all(&dir);
        return Err(e);
    }
    Ok(ManifestEntry {
        material_id: material_id.to_string(),
        view_index: view,
        files: SampleFiles { rgb: format!("{rel}/rgb.png"), mask: format!("{rel}/mask.png"), depth: format!("{rel}/depth.pfm") },
        width: config.width,
        height: config.height,
        intrinsics: k,
        pose,
        alpha,
        seeds,
        lighting,
        raw_depth_range: out.raw_depth_range,
        tps: scene.tps,
    })
}

/// Renders every material × view, writes the sample files under `root` and
/// `manifest.jsonl` with one entry per sample, ordered by material then view.
pub fn generate_dataset(materials: &[(String, MaterialSet)], config: &DatasetConfig, root: &Path) -> Result<Vec<ManifestEntry>> {
    config.validate()?;
    if materials.is_empty() {
        return Err(Error::invalid("at least one material is required"));
    }
    let mut ids: Vec<&str> = materials.iter().map(|(id, _)| id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() != materials.len() {
        return Err(Error::invalid("material ids must be unique"));
    }
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let jobs: Vec<(usize, usize)> = (0..materials.len()).flat_map(|m| (0..config.views).map(move |v| (m, v))).collect();
    let entries = jobs
        .par_iter()
        .map(|&(m, v)| render_sample(root, &materials[m].0, &materials[m].1, m, v, config))
        .collect::<Result<Vec<_>>>()?;
    write_manifest(&entries, &root.join(MANIFEST_FILE))?;
    Ok(entries)
}

pub fn write_manifest(entries: &[ManifestEntry], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    for e in entries {
        serde_json::to_writer(&mut buf, e).map_err(|e| Error::invalid(format!("manifest serialization: {e}")))?;
        buf.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::Decode { path: PathBuf::from(path), message: format!("line {}: {e}", i + 1) })?,
        );
    }
    Ok(out)
}
