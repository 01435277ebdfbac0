use std::path::PathBuf;

use clap::Args;
use matkit_core::imaging::{load_material_dir, save_material_dir, Sampling};
use matkit_core::synth::{aligned_ground_truth, read_manifest, MANIFEST_FILE};
use serde::Serialize;

use super::synth::MATERIALS_DIR;
use super::{invalid, out_path, Named};
use crate::output::{CliResult, Outputs};
use crate::Global;

#[derive(Args, Debug)]
pub struct AlignArgs {
    /// Dataset directory written by `synth`.
    #[arg(long)]
    dataset: PathBuf,
    /// Manifest line to align; all entries when omitted.
    #[arg(long)]
    index: Option<usize>,
    #[arg(long, value_enum, default_value = "bilinear")]
    sampling: SamplingArg,
    /// Output directory; one material per entry under `{material_id}/view_{k}`.
    #[arg(long, default_value = "aligned")]
    out: PathBuf,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum SamplingArg {
    Nearest,
    Bilinear,
}

#[derive(Debug, Serialize)]
pub struct AlignConfig {
    dataset: PathBuf,
    index: Option<usize>,
    sampling: Sampling,
    out: PathBuf,
    master_seed: u64,
}

impl Named for AlignConfig {
    const NAME: &'static str = "align";
}

impl AlignArgs {
    pub fn resolve(self, g: &Global) -> CliResult<AlignConfig> {
        Ok(AlignConfig {
            dataset: self.dataset,
            index: self.index,
            sampling: match self.sampling {
                SamplingArg::Nearest => Sampling::Nearest,
                SamplingArg::Bilinear => Sampling::Bilinear,
            },
            out: out_path(g, &self.out),
            master_seed: g.seed,
        })
    }
}

#[derive(Serialize)]
struct AlignRecord<'a> {
    material_id: &'a str,
    view_index: usize,
    alpha: f64,
    rotation: f64,
    sampling: Sampling,
}

pub fn run(c: &AlignConfig) -> CliResult<Vec<PathBuf>> {
    let manifest = read_manifest(&c.dataset.join(MANIFEST_FILE))?;
    let entries = match c.index {
        Some(i) => vec![manifest
            .get(i)
            .ok_or_else(|| invalid(format!("--index {i} is out of range for {} manifest entries", manifest.len())))?],
        None => manifest.iter().collect(),
    };
    let mut out = Outputs::new();
    out.dir(&c.out)?;
    let mut cache: Option<(String, matkit_core::imaging::MaterialSet)> = None;
    for e in entries {
        if cache.as_ref().is_none_or(|(id, _)| *id != e.material_id) {
            let mat = load_material_dir(&c.dataset.join(MATERIALS_DIR).join(&e.material_id))?;
            cache = Some((e.material_id.clone(), mat));
        }
        let (_, mat) = cache.as_ref().expect("material loaded");
        let aligned = aligned_ground_truth(e.alpha, mat, c.sampling)?;
        let dir = c.out.join(&e.material_id).join(format!("view_{:03}", e.view_index));
        out.external_dir(&dir)?;
        save_material_dir(&aligned, &dir, 16)?;
        let record = AlignRecord {
            material_id: &e.material_id,
            view_index: e.view_index,
            alpha: e.alpha,
            rotation: -e.alpha,
            sampling: c.sampling,
        };
        out.json(&dir.join("align.json"), &record)?;
    }
    Ok(out.commit())
}
