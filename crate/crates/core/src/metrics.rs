//! Image similarity, pixel diagnostics, tileability scoring and material reports.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::imaging::{resample_bilinear, rotate_material_set, Image, Mask, MaterialSet, NormalMap, Sampling, ATTRIBUTES};
use crate::{Error, Result};

const C1: f64 = 1e-4;
const C2: f64 = 9e-4;
const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SEAM_EPS: f64 = 1e-6;

/// Seam ratios above this are reported as seamy.
pub const SEAMY_THRESHOLD: f64 = 2.0;

fn check_same(a: &Image, b: &Image) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width(),
            a.height(),
            a.channels(),
            b.width(),
            b.height(),
            b.channels()
        )));
    }
    Ok(())
}

fn gaussian_window(size: usize) -> Vec<f64> {
    let r = (size / 2) as f64;
    let g: Vec<f64> = (0..size).map(|i| (-((i as f64 - r).powi(2)) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()).collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|v| v / s).collect()
}

/// Separable "valid" filtering of a plane: output is `(w−k+1) × (h−k+1)`.
fn filter_valid(plane: &[f64], w: usize, h: usize, g: &[f64]) -> Vec<f64> {
    let k = g.len();
    let (ow, oh) = (w + 1 - k, h + 1 - k);
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        let row = &plane[y * w..(y + 1) * w];
        for x in 0..ow {
            tmp[y * ow + x] = g.iter().zip(&row[x..x + k]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = g.iter().enumerate().map(|(i, gv)| gv * tmp[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Per-window SSIM map of one channel, with window centers offset by `k / 2`.
fn ssim_map(a: &[f32], b: &[f32], w: usize, h: usize) -> (Vec<f64>, usize) {
    let mut k = SSIM_WINDOW.min(w).min(h);
    if k.is_multiple_of(2) {
        k -= 1;
    }
    let g = gaussian_window(k);
    let a: Vec<f64> = a.iter().map(|&v| v as f64).collect();
    let b: Vec<f64> = b.iter().map(|&v| v as f64).collect();
    let prod = |p: &[f64], q: &[f64]| -> Vec<f64> { p.iter().zip(q).map(|(x, y)| x * y).collect() };
    let mu_a = filter_valid(&a, w, h, &g);
    let mu_b = filter_valid(&b, w, h, &g);
    let aa = filter_valid(&prod(&a, &a), w, h, &g);
    let bb = filter_valid(&prod(&b, &b), w, h, &g);
    let ab = filter_valid(&prod(&a, &b), w, h, &g);
    let map = (0..mu_a.len())
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = aa[i] - ma * ma;
            let vb = bb[i] - mb * mb;
            let cov = ab[i] - ma * mb;
            ((2.0 * ma * mb + C1) * (2.0 * cov + C2)) / ((ma * ma + mb * mb + C1) * (va + vb + C2))
        })
        .collect();
    (map, k)
}

/// Mean windowed SSIM (Gaussian window 11, σ = 1.5, unit dynamic range),
/// averaged over channels. Images smaller than the window use the largest
/// odd window that fits.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    check_same(a, b)?;
    let (w, h) = (a.width(), a.height());
    let mut total = 0.0;
    for c in 0..a.channels() {
        let (map, _) = ssim_map(a.plane(c), b.plane(c), w, h);
        total += map.iter().sum::<f64>() / map.len() as f64;
    }
    Ok(total / a.channels() as f64)
}

/// SSIM averaged over windows whose center lies inside the mask.
pub fn ssim_masked(a: &Image, b: &Image, mask: &Mask) -> Result<f64> {
    check_same(a, b)?;
    let (w, h) = (a.width(), a.height());
    if mask.width() != w || mask.height() != h {
        return Err(Error::DimensionMismatch("mask does not match images".into()));
    }
    let mut total = 0.0;
    for c in 0..a.channels() {
        let (map, k) = ssim_map(a.plane(c), b.plane(c), w, h);
        let ow = w + 1 - k;
        let r = k / 2;
        let (mut s, mut n) = (0.0, 0usize);
        for (i, v) in map.iter().enumerate() {
            if mask.get(i % ow + r, i / ow + r) {
                s += v;
                n += 1;
            }
        }
        if n == 0 {
            return Err(Error::EmptyMask);
        }
        total += s / n as f64;
    }
    Ok(total / a.channels() as f64)
}

pub fn mae(a: &Image, b: &Image) -> Result<f64> {
    check_same(a, b)?;
    let s: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (*x as f64 - *y as f64).abs()).sum();
    Ok(s / a.data().len() as f64)
}

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    check_same(a, b)?;
    let s: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (*x as f64 - *y as f64).powi(2)).sum();
    Ok(s / a.data().len() as f64)
}

/// `10·log10(1 / MSE)`; identical images give `+∞`.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    let m = mse(a, b)?;
    Ok(if m == 0.0 { f64::INFINITY } else { -10.0 * m.log10() })
}

/// Mean absolute differences across the wrap-around boundary and between
/// interior neighbours, per direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeamStats {
    pub boundary_h: f64,
    pub interior_h: f64,
    pub boundary_v: f64,
    pub interior_v: f64,
}

impl SeamStats {
    pub fn ratio(&self) -> f64 {
        let b = 0.5 * (self.boundary_h + self.boundary_v);
        let i = 0.5 * (self.interior_h + self.interior_v);
        (b + SEAM_EPS) / (i + SEAM_EPS)
    }
}

pub fn seam_stats(image: &Image) -> Result<SeamStats> {
    let (w, h) = (image.width(), image.height());
    if w < 4 || h < 4 {
        return Err(Error::invalid(format!("seam ratio needs at least 4x4 pixels, got {w}x{h}")));
    }
    let ch = image.channels();
    let (mut bh, mut ih, mut bv, mut iv) = (0.0, 0.0, 0.0, 0.0);
    for c in 0..ch {
        let p = image.plane(c);
        let at = |x: usize, y: usize| p[y * w + x] as f64;
        for y in 0..h {
            bh += (at(0, y) - at(w - 1, y)).abs();
            for x in 0..w - 1 {
                ih += (at(x + 1, y) - at(x, y)).abs();
            }
        }
        for x in 0..w {
            bv += (at(x, 0) - at(x, h - 1)).abs();
            for y in 0..h - 1 {
                iv += (at(x, y + 1) - at(x, y)).abs();
            }
        }
    }
    let chf = ch as f64;
    Ok(SeamStats {
        boundary_h: bh / (chf * h as f64),
        interior_h: ih / (chf * (h * (w - 1)) as f64),
        boundary_v: bv / (chf * w as f64),
        interior_v: iv / (chf * (w * (h - 1)) as f64),
    })
}

/// Boundary-to-interior gradient ratio; about 1 for a seamless tile.
///
/// Horizontal and vertical directions are averaged separately before the
/// ratio is formed, so a texture that varies along one axis only is not
/// penalised for its constant axis.
pub fn seam_ratio(image: &Image) -> Result<f64> {
    seam_stats(image).map(|s| s.ratio())
}

/// Tiles an image `n × n` times.
pub fn tile(image: &Image, n: usize) -> Result<Image> {
    if n < 2 {
        return Err(Error::invalid(format!("tile count must be at least 2, got {n}")));
    }
    let (w, h) = (image.width(), image.height());
    Ok(Image::from_fn(w * n, h * n, image.channels(), |x, y, c| image.get(x % w, y % h, c))?.with_color_space(image.color_space))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationMode {
    /// Best score over the four quarter-turn rotations of the prediction.
    #[default]
    Search,
    Fixed,
}

impl std::str::FromStr for RotationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "search" => Ok(Self::Search),
            "fixed" => Ok(Self::Fixed),
            other => Err(Error::invalid(format!("unknown rotation mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeScore {
    pub attribute: String,
    pub ssim: f64,
    pub mae: f64,
    pub psnr: f64,
    pub seam_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub attributes: Vec<AttributeScore>,
    /// Counter-clockwise quarter turns applied to the prediction.
    pub quarter_turns: u8,
}

impl EvalReport {
    pub fn mean_ssim(&self) -> f64 {
        self.attributes.iter().map(|a| a.ssim).sum::<f64>() / self.attributes.len() as f64
    }

    pub fn get(&self, attribute: &str) -> Option<&AttributeScore> {
        self.attributes.iter().find(|a| a.attribute == attribute)
    }
}

fn resample_material(mat: &MaterialSet, n: usize) -> Result<MaterialSet> {
    MaterialSet::new(
        resample_bilinear(&mat.albedo, n, n)?,
        NormalMap::new(resample_bilinear(mat.normal.encoded(), n, n)?)?,
        resample_bilinear(&mat.roughness, n, n)?,
        resample_bilinear(&mat.height, n, n)?,
    )
}

fn score(pred: &MaterialSet, gt: &MaterialSet, seams: bool, quarter_turns: u8) -> Result<EvalReport> {
    let attributes = ATTRIBUTES
        .iter()
        .zip(pred.maps().into_iter().zip(gt.maps()))
        .map(|(name, (p, g))| {
            Ok(AttributeScore {
                attribute: name.to_string(),
                ssim: ssim(p, g)?,
                mae: mae(p, g)?,
                psnr: psnr(p, g)?,
                seam_ratio: if seams { Some(seam_ratio(p)?) } else { None },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport { attributes, quarter_turns })
}

/// Per-attribute comparison. The prediction is resampled to the ground-truth
/// resolution when they differ. In search mode the rotation maximising the
/// mean SSIM over all attributes is kept.
pub fn evaluate_pair(pred: &MaterialSet, gt: &MaterialSet, mode: RotationMode, seams: bool) -> Result<EvalReport> {
    let n = gt.resolution();
    let pred = if pred.resolution() != n { resample_material(pred, n)? } else { pred.clone() };
    match mode {
        RotationMode::Fixed => score(&pred, gt, seams, 0),
        RotationMode::Search => {
            let mut best = score(&pred, gt, seams, 0)?;
            for k in 1..4u8 {
                let rotated = rotate_material_set(&pred, k as f64 * FRAC_PI_2, Sampling::Nearest)?;
                let r = score(&rotated, gt, seams, k)?;
                if r.mean_ssim() > best.mean_ssim() {
                    best = r;
                }
            }
            Ok(best)
        }
    }
}

pub const REPORT_CSV_HEADER: &str = "sample,attribute,ssim,mae,psnr,seam_ratio";

fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v}")
    }
}

/// CSV with one row per (sample, attribute); empty seam column when not computed.
pub fn reports_to_csv<'a>(reports: impl IntoIterator<Item = (&'a str, &'a EvalReport)>) -> String {
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    for (sample, report) in reports {
        for a in &report.attributes {
            let seam = a.seam_ratio.map(fmt_f64).unwrap_or_default();
            let _ = writeln!(out, "{sample},{},{},{},{},{seam}", a.attribute, fmt_f64(a.ssim), fmt_f64(a.mae), fmt_f64(a.psnr));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::rotate_image;
    use crate::procedural;
    use proptest::prelude::*;
    use rand::Rng;

    fn noise(seed: u64, w: usize, h: usize, ch: usize) -> Image {
        let mut rng = crate::rng::rng_from_seed(seed);
        Image::new(w, h, ch, (0..w * h * ch).map(|_| rng.random::<f32>()).collect()).unwrap()
    }

    /// Triangle wave with period `p`: every neighbour difference has magnitude `2/p`.
    fn triangle(w: usize, h: usize, p: usize, shift: usize) -> Image {
        Image::from_fn(w, h, 1, |x, _, _| {
            let t = (x + shift) % p;
            let half = p / 2;
            (if t <= half { t } else { p - t }) as f32 / half as f32
        })
        .unwrap()
    }

    #[test]
    fn ssim_identity_and_constants() {
        let a = noise(1, 32, 24, 3);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let zero = Image::filled(16, 16, 1, 0.0).unwrap();
        let one = Image::filled(16, 16, 1, 1.0).unwrap();
        let expected = C1 / (1.0 + C1);
        assert!((ssim(&zero, &one).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn ssim_half_shift_is_low() {
        let a = noise(2, 64, 64, 1);
        let shifted = Image::from_fn(64, 64, 1, |x, y, _| a.get((x + 32) % 64, y, 0)).unwrap();
        assert!(ssim(&a, &shifted).unwrap() < 0.3);
    }

    #[test]
    fn ssim_rejects_mismatch_and_handles_small_images() {
        assert!(ssim(&noise(1, 8, 8, 1), &noise(1, 8, 9, 1)).is_err());
        let a = noise(3, 4, 4, 1);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ssim_masked_full_matches_unmasked() {
        let (a, b) = (noise(4, 20, 20, 3), noise(5, 20, 20, 3));
        let full = ssim_masked(&a, &b, &Mask::full(20, 20).unwrap()).unwrap();
        assert!((full - ssim(&a, &b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn pixel_metrics() {
        let a = Image::new(2, 1, 1, vec![0.0, 0.5]).unwrap();
        let b = Image::new(2, 1, 1, vec![0.5, 0.5]).unwrap();
        assert!((mae(&a, &b).unwrap() - 0.25).abs() < 1e-12);
        assert!((mse(&a, &b).unwrap() - 0.125).abs() < 1e-12);
        let expected = 10.0 * (1.0f64 / 0.125).log10();
        assert!((psnr(&a, &b).unwrap() - expected).abs() < 1e-9);
        assert!((expected - 9.0309).abs() < 1e-4);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        assert_eq!(mae(&a, &a).unwrap(), 0.0);
        let zero = Image::filled(3, 3, 1, 0.0).unwrap();
        let one = Image::filled(3, 3, 1, 1.0).unwrap();
        assert_eq!(mae(&zero, &one).unwrap(), 1.0);
        assert_eq!(psnr(&zero, &one).unwrap(), 0.0);
    }

    #[test]
    fn seam_ratio_examples() {
        assert!((seam_ratio(&triangle(32, 8, 32, 0)).unwrap() - 1.0).abs() < 1e-6);
        assert_eq!(seam_ratio(&Image::filled(8, 8, 3, 0.4).unwrap()).unwrap(), 1.0);
        let w = 32;
        let split = Image::from_fn(w, 16, 1, |x, _, _| if x < w / 2 { 0.0 } else { 1.0 }).unwrap();
        let s = seam_stats(&split).unwrap();
        assert!((s.boundary_h - 1.0).abs() < 1e-12);
        assert!((s.interior_h - 1.0 / (w - 1) as f64).abs() < 1e-12);
        assert!(seam_ratio(&split).unwrap() > 20.0);
        assert!(seam_ratio(&Image::filled(3, 8, 1, 0.0).unwrap()).is_err());
    }

    #[test]
    fn seam_ratio_of_periodic_sinusoid_is_order_one() {
        let w = 64;
        let img = Image::from_fn(w, w, 1, |x, _, _| {
            (0.5 + 0.5 * (2.0 * std::f64::consts::PI * (x as f64 + 0.5) / w as f64).cos()) as f32
        })
        .unwrap();
        let r = seam_ratio(&img).unwrap();
        assert!(r < 0.1, "cosine peaks at the seam, ratio {r}");
        let mean: f64 = (0..8).map(|seed| seam_ratio(&noise(seed, w, w, 3)).unwrap()).sum::<f64>() / 8.0;
        assert!((mean - 1.0).abs() < 0.05, "white noise ratio {mean}");
    }

    #[test]
    fn tile_composite() {
        let img = noise(6, 5, 4, 3);
        let t = tile(&img, 3).unwrap();
        assert_eq!((t.width(), t.height()), (15, 12));
        assert_eq!(t.get(7, 9, 2), img.get(2, 1, 2));
        assert!(tile(&img, 1).is_err());
    }

    #[test]
    fn evaluate_pair_identity_and_rotation_search() {
        let gt = procedural::material(11, 48).unwrap();
        let same = evaluate_pair(&gt, &gt, RotationMode::Fixed, true).unwrap();
        for a in &same.attributes {
            assert!((a.ssim - 1.0).abs() < 1e-12);
            assert_eq!(a.mae, 0.0);
            assert!(a.seam_ratio.is_some());
        }
        let rotated = rotate_material_set(&gt, FRAC_PI_2, Sampling::Nearest).unwrap();
        let search = evaluate_pair(&rotated, &gt, RotationMode::Search, false).unwrap();
        let fixed = evaluate_pair(&rotated, &gt, RotationMode::Fixed, false).unwrap();
        assert!((search.mean_ssim() - 1.0).abs() < 1e-12);
        assert_eq!(search.quarter_turns, 3);
        assert!(fixed.mean_ssim() < search.mean_ssim());
        let csv = reports_to_csv([("s0", &search)]);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.contains("s0,albedo,1,0,inf,"));
    }

    #[test]
    fn evaluate_pair_resamples_prediction() {
        let gt = procedural::material(12, 32).unwrap();
        let pred = procedural::material(12, 64).unwrap();
        let r = evaluate_pair(&pred, &gt, RotationMode::Fixed, false).unwrap();
        assert_eq!(r.attributes.len(), 4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn ssim_symmetric_and_rotation_invariant(seed in any::<u64>(), k in 0u8..4) {
            let a = noise(seed, 24, 24, 3);
            let b = noise(seed ^ 0xabcdef, 24, 24, 3);
            let ab = ssim(&a, &b).unwrap();
            prop_assert!((ab - ssim(&b, &a).unwrap()).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&ab));
            let alpha = k as f64 * FRAC_PI_2;
            let ra = rotate_image(&a, alpha, Sampling::Nearest).unwrap();
            let rb = rotate_image(&b, alpha, Sampling::Nearest).unwrap();
            prop_assert!((ssim(&ra, &rb).unwrap() - ab).abs() < 1e-9);
        }

        #[test]
        fn seam_ratio_shift_invariant_for_periodic_tiles(shift in 0usize..32, p in prop::sample::select(vec![4usize, 8, 16, 32])) {
            let base = seam_ratio(&triangle(32, 6, p, 0)).unwrap();
            let shifted = seam_ratio(&triangle(32, 6, p, shift)).unwrap();
            prop_assert!((base - shifted).abs() < 1e-6);
            prop_assert!((base - 1.0).abs() < 1e-6);
        }

        #[test]
        fn search_never_below_fixed(seed in 0u64..1000) {
            let gt = procedural::material(seed, 16).unwrap();
            let pred = procedural::material(seed + 1, 16).unwrap();
            let s = evaluate_pair(&pred, &gt, RotationMode::Search, false).unwrap();
            let f = evaluate_pair(&pred, &gt, RotationMode::Fixed, false).unwrap();
            prop_assert!(s.mean_ssim() >= f.mean_ssim());
        }
    }
}
