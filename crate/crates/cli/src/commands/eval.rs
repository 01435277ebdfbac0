use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use matkit_core::imaging::{load_material_dir, MaterialSet};
use matkit_core::metrics::{evaluate_pair, reports_to_csv, RotationMode};
use serde::Serialize;

use super::{invalid, out_path, Named};
use crate::output::{io_err, CliResult, Outputs};
use crate::Global;

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Predicted material directory, or a directory of them.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth material directory, or a directory of them with matching names.
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, default_value = "search")]
    mode: RotationMode,
    /// Output CSV.
    #[arg(long, default_value = "report.csv")]
    out: PathBuf,
}

#[derive(Debug, Serialize)]
pub struct EvalConfig {
    pred: PathBuf,
    gt: PathBuf,
    mode: RotationMode,
    out: PathBuf,
    master_seed: u64,
}

impl Named for EvalConfig {
    const NAME: &'static str = "eval";
}

impl EvalArgs {
    pub fn resolve(self, g: &Global) -> CliResult<EvalConfig> {
        Ok(EvalConfig { pred: self.pred, gt: self.gt, mode: self.mode, out: out_path(g, &self.out), master_seed: g.seed })
    }
}

fn is_material(dir: &Path) -> bool {
    dir.join("albedo.png").is_file()
}

/// Material directories below `root`, keyed by their path relative to it.
fn collect(root: &Path, rel: &Path, found: &mut Vec<PathBuf>) -> CliResult<()> {
    let dir = root.join(rel);
    if is_material(&dir) {
        found.push(rel.to_path_buf());
        return Ok(());
    }
    let mut children: Vec<_> = fs::read_dir(&dir)
        .map_err(|e| io_err(&dir, e))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .map(|e| e.file_name())
        .collect();
    children.sort();
    for child in children {
        collect(root, &rel.join(child), found)?;
    }
    Ok(())
}

fn sample_name(rel: &Path) -> String {
    let s = rel.to_string_lossy().replace('\\', "/");
    if s.is_empty() {
        "sample".into()
    } else {
        s
    }
}

pub fn run(c: &EvalConfig) -> CliResult<Vec<PathBuf>> {
    if !c.gt.is_dir() {
        return Err(io_err(&c.gt, "not a directory"));
    }
    if !c.pred.is_dir() {
        return Err(io_err(&c.pred, "not a directory"));
    }
    let mut samples = Vec::new();
    collect(&c.gt, Path::new(""), &mut samples)?;
    if samples.is_empty() {
        return Err(invalid(format!("--gt {}: no material directories found", c.gt.display())));
    }
    let load = |root: &Path, rel: &Path| -> CliResult<MaterialSet> { Ok(load_material_dir(&root.join(rel))?) };
    let mut reports = Vec::new();
    for rel in &samples {
        let gt = load(&c.gt, rel)?;
        let pred = load(&c.pred, rel)?;
        reports.push((sample_name(rel), evaluate_pair(&pred, &gt, c.mode, true)?));
    }
    let csv = reports_to_csv(reports.iter().map(|(n, r)| (n.as_str(), r)));
    let mut out = Outputs::new();
    out.text(&c.out, &csv)?;
    Ok(out.commit())
}
