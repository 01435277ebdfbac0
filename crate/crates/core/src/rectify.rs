//! Coarse geometric rectification.
//!
//! Every masked source pixel is unprojected with its depth,
//! `x = (u − c_x)·(D + d_shift)/f_x` (and likewise for `y`), the resulting
//! orthographic coordinates are normalized over the masked set and scaled
//! onto a target grid. Forward splatting onto that grid leaves holes, which
//! are filled from the mean of valid pixels in a `k × k` neighbourhood.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::imaging::{resample_bilinear, resample_mask_nearest, DepthMap, Image, Mask};
use crate::{Error, Result};

/// Pinhole intrinsics in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        let k = Self { fx, fy, cx, cy };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()) {
            return Err(Error::invalid("focal lengths must be positive and finite"));
        }
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(Error::invalid("principal point must be finite"));
        }
        Ok(())
    }

    fn check_bounds(&self, width: usize, height: usize) -> Result<()> {
        let inside = |c: f64, n: usize| c >= -0.5 && c <= n as f64 - 0.5;
        if !inside(self.cx, width) || !inside(self.cy, height) {
            return Err(Error::invalid(format!("principal point ({}, {}) outside the {width}x{height} image", self.cx, self.cy)));
        }
        Ok(())
    }
}

/// Centered principal point and `f = max(width, height)` (about 53° field of view).
pub fn default_intrinsics(width: usize, height: usize) -> Intrinsics {
    let f = width.max(height).max(1) as f64;
    Intrinsics { fx: f, fy: f, cx: (width.max(1) as f64 - 1.0) * 0.5, cy: (height.max(1) as f64 - 1.0) * 0.5 }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizeMode {
    /// Each axis is mapped onto `[0, 1]` independently.
    #[default]
    PerAxis,
    /// Both axes are divided by the larger extent and centered.
    AspectPreserving,
}

impl std::str::FromStr for NormalizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-axis" => Ok(Self::PerAxis),
            "aspect-preserving" => Ok(Self::AspectPreserving),
            other => Err(Error::invalid(format!("unknown normalize mode `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RectifyParams {
    pub d_shift: f64,
    pub target_w: usize,
    pub target_h: usize,
    /// Scale of the intermediate splat grid relative to the target, in `(0, 1]`.
    pub s_sample: f64,
    /// Odd hole-filling kernel size, at least 3.
    pub hole_kernel: usize,
    pub normalize: NormalizeMode,
}

impl RectifyParams {
    pub fn new(target_w: usize, target_h: usize) -> Self {
        Self { d_shift: 1.0, target_w, target_h, s_sample: 1.0, hole_kernel: 5, normalize: NormalizeMode::PerAxis }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d_shift >= 0.0 && self.d_shift.is_finite()) {
            return Err(Error::invalid("d_shift must be finite and non-negative"));
        }
        if !(self.s_sample > 0.0 && self.s_sample <= 1.0) {
            return Err(Error::invalid("s_sample must lie in (0, 1]"));
        }
        if self.target_w == 0 || self.target_h == 0 {
            return Err(Error::invalid("target dimensions must be at least 1"));
        }
        check_kernel(self.hole_kernel)
    }

    /// Dimensions of the intermediate splat grid.
    pub fn grid_dims(&self) -> (usize, usize) {
        let g = |t: usize| ((t as f64 * self.s_sample).round() as usize).max(1);
        (g(self.target_w), g(self.target_h))
    }
}

fn check_kernel(k: usize) -> Result<()> {
    if k < 3 || k.is_multiple_of(2) {
        return Err(Error::invalid(format!("hole kernel must be odd and at least 3, got {k}")));
    }
    Ok(())
}

/// Canonical coordinates for every masked source pixel, expressed on the
/// splat grid (`[0, grid_w − 1] × [0, grid_h − 1]`).
#[derive(Clone, Debug, PartialEq)]
pub struct RemapField {
    width: usize,
    height: usize,
    grid_w: usize,
    grid_h: usize,
    coords: Vec<Option<[f64; 2]>>,
}

impl RemapField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn grid_dims(&self) -> (usize, usize) {
        (self.grid_w, self.grid_h)
    }

    pub fn get(&self, x: usize, y: usize) -> Option<[f64; 2]> {
        self.coords[y * self.width + x]
    }

    pub fn coords(&self) -> &[Option<[f64; 2]>] {
        &self.coords
    }

    pub fn valid_count(&self) -> usize {
        self.coords.iter().filter(|c| c.is_some()).count()
    }

    /// Mean and maximum Euclidean distance to another field over entries
    /// valid in both.
    pub fn deviation_from(&self, other: &RemapField) -> Result<(f64, f64)> {
        if self.coords.len() != other.coords.len() {
            return Err(Error::DimensionMismatch("remap fields differ in size".into()));
        }
        let (mut sum, mut max, mut n) = (0.0, 0.0f64, 0usize);
        for (a, b) in self.coords.iter().zip(&other.coords) {
            if let (Some(a), Some(b)) = (a, b) {
                let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
                sum += d;
                max = max.max(d);
                n += 1;
            }
        }
        if n == 0 {
            return Err(Error::EmptyMask);
        }
        Ok((sum / n as f64, max))
    }
}

fn check_dims(what: &str, w: usize, h: usize, mask: &Mask) -> Result<()> {
    if w != mask.width() || h != mask.height() {
        return Err(Error::DimensionMismatch(format!("{what} is {w}x{h}, mask is {}x{}", mask.width(), mask.height())));
    }
    Ok(())
}

/// Unprojects masked pixels with per-pixel factors `(D + d_shift)` and
/// normalizes onto the splat grid.
fn remap_with_factor(
    mask: &Mask,
    k: &Intrinsics,
    params: &RectifyParams,
    factor: impl Fn(usize, usize) -> f64,
) -> Result<RemapField> {
    let (w, h) = (mask.width(), mask.height());
    let mut xs = Vec::with_capacity(mask.count());
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                let f = factor(x, y);
                xs.push((x, y, (x as f64 - k.cx) * f / k.fx, (y as f64 - k.cy) * f / k.fy));
            }
        }
    }
    if xs.is_empty() {
        return Err(Error::EmptyMask);
    }
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(_, _, px, py) in &xs {
        xmin = xmin.min(px);
        xmax = xmax.max(px);
        ymin = ymin.min(py);
        ymax = ymax.max(py);
    }
    let (ex, ey) = (xmax - xmin, ymax - ymin);
    let degenerate = |e: f64, lo: f64, hi: f64| e.is_nan() || e <= 1e-12 * (lo.abs() + hi.abs()).max(f64::MIN_POSITIVE);
    if degenerate(ex, xmin, xmax) {
        return Err(Error::DegenerateExtent { axis: "x" });
    }
    if degenerate(ey, ymin, ymax) {
        return Err(Error::DegenerateExtent { axis: "y" });
    }
    let (grid_w, grid_h) = params.grid_dims();
    let (sx, sy) = ((grid_w - 1) as f64, (grid_h - 1) as f64);
    let normalize: Box<dyn Fn(f64, f64) -> [f64; 2]> = match params.normalize {
        NormalizeMode::PerAxis => Box::new(move |px, py| [(px - xmin) / ex, (py - ymin) / ey]),
        NormalizeMode::AspectPreserving => {
            let e = ex.max(ey);
            let (ox, oy) = ((1.0 - ex / e) * 0.5, (1.0 - ey / e) * 0.5);
            Box::new(move |px, py| [(px - xmin) / e + ox, (py - ymin) / e + oy])
        }
    };
    let mut coords = vec![None; w * h];
    for (x, y, px, py) in xs {
        let [nx, ny] = normalize(px, py);
        coords[y * w + x] = Some([(nx * sx).clamp(0.0, sx), (ny * sy).clamp(0.0, sy)]);
    }
    Ok(RemapField { width: w, height: h, grid_w, grid_h, coords })
}

/// Maps every masked pixel of the source image to canonical grid coordinates.
pub fn unproject_remap(depth: &DepthMap, mask: &Mask, k: &Intrinsics, params: &RectifyParams) -> Result<RemapField> {
    params.validate()?;
    k.validate()?;
    check_dims("depth map", depth.width(), depth.height(), mask)?;
    k.check_bounds(mask.width(), mask.height())?;
    if mask.count() == 0 {
        return Err(Error::EmptyMask);
    }
    if params.d_shift == 0.0 {
        let min_masked = (0..depth.height())
            .flat_map(|y| (0..depth.width()).map(move |x| (x, y)))
            .filter(|&(x, y)| mask.get(x, y))
            .map(|(x, y)| depth.get(x, y))
            .fold(f64::INFINITY, f64::min);
        if min_masked <= 0.0 {
            return Err(Error::invalid("d_shift = 0 with zero masked depth collapses pixels onto the principal point"));
        }
    }
    remap_with_factor(mask, k, params, |x, y| depth.get(x, y) + params.d_shift)
}

/// The remap a constant depth would produce: an axis-aligned affine map of
/// the masked pixel coordinates.
pub fn constant_depth_remap(mask: &Mask, k: &Intrinsics, params: &RectifyParams) -> Result<RemapField> {
    params.validate()?;
    k.validate()?;
    remap_with_factor(mask, k, params, |_, _| 1.0)
}

/// Accumulation and hit counts of a forward splat; cells with a zero count
/// are holes.
#[derive(Clone, Debug, PartialEq)]
pub struct SplatCanvas {
    width: usize,
    height: usize,
    channels: usize,
    accum: Vec<f64>,
    count: Vec<u32>,
}

impl SplatCanvas {
    pub fn new(width: usize, height: usize, channels: usize) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::invalid("canvas dimensions must be positive"));
        }
        Ok(Self { width, height, channels, accum: vec![0.0; width * height * channels], count: vec![0; width * height] })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn count(&self, x: usize, y: usize) -> u32 {
        self.count[y * self.width + x]
    }

    pub fn accum(&self, x: usize, y: usize, c: usize) -> f64 {
        self.accum[(c * self.height + y) * self.width + x]
    }

    /// Adds one contribution to a cell.
    pub fn deposit(&mut self, x: usize, y: usize, values: &[f64]) {
        let n = self.width * self.height;
        let i = y * self.width + x;
        self.count[i] += 1;
        for (c, v) in values.iter().enumerate().take(self.channels) {
            self.accum[c * n + i] += v;
        }
    }

    pub fn hole_fraction(&self) -> f64 {
        self.count.iter().filter(|&&c| c == 0).count() as f64 / self.count.len() as f64
    }

    /// Per-cell mean of the contributions; holes are zero.
    pub fn normalized(&self) -> Image {
        let n = self.width * self.height;
        let data = (0..self.channels * n)
            .map(|j| {
                let cnt = self.count[j % n];
                if cnt == 0 {
                    0.0
                } else {
                    (self.accum[j] / cnt as f64) as f32
                }
            })
            .collect();
        Image::new(self.width, self.height, self.channels, data).expect("canvas dimensions validated")
    }

    pub fn hit_mask(&self) -> Mask {
        Mask::new(self.width, self.height, self.count.iter().map(|&c| c > 0).collect()).expect("canvas dimensions validated")
    }
}

/// Splats masked source pixels onto the nearest grid cell; overlaps average.
pub fn splat(image: &Image, mask: &Mask, remap: &RemapField, target_w: usize, target_h: usize) -> Result<SplatCanvas> {
    check_dims("image", image.width(), image.height(), mask)?;
    if remap.width != image.width() || remap.height != image.height() {
        return Err(Error::DimensionMismatch("remap field does not match image".into()));
    }
    let mut canvas = SplatCanvas::new(target_w, target_h, image.channels())?;
    let mut values = vec![0.0; image.channels()];
    for y in 0..image.height() {
        for x in 0..image.width() {
            if !mask.get(x, y) {
                continue;
            }
            let Some([u, v]) = remap.get(x, y) else { continue };
            let (cu, cv) = (u.round(), v.round());
            if cu < 0.0 || cv < 0.0 || cu >= target_w as f64 || cv >= target_h as f64 {
                continue;
            }
            for (c, val) in values.iter_mut().enumerate() {
                *val = image.get(x, y, c) as f64;
            }
            canvas.deposit(cu as usize, cv as usize, &values);
        }
    }
    Ok(canvas)
}

/// Fills holes with the mean of valid pixels in the clipped `k × k`
/// neighbourhood, in a single pass over the original validity map. Returns
/// the filled image and the mask of pixels that ended up with data.
pub fn fill_holes_with_mask(canvas: &SplatCanvas, k: usize) -> Result<(Image, Mask)> {
    check_kernel(k)?;
    let base = canvas.normalized();
    let (w, h, ch) = (canvas.width, canvas.height, canvas.channels);
    let r = (k / 2) as isize;
    let mut out = base.clone();
    let mut valid = canvas.hit_mask().data().to_vec();
    let mut sums = vec![0.0f64; ch];
    for y in 0..h {
        for x in 0..w {
            if canvas.count(x, y) > 0 {
                continue;
            }
            sums.iter_mut().for_each(|s| *s = 0.0);
            let mut cs = 0usize;
            for ny in (y as isize - r).max(0)..=(y as isize + r).min(h as isize - 1) {
                for nx in (x as isize - r).max(0)..=(x as isize + r).min(w as isize - 1) {
                    let (nx, ny) = (nx as usize, ny as usize);
                    if canvas.count(nx, ny) > 0 {
                        cs += 1;
                        for (c, s) in sums.iter_mut().enumerate() {
                            *s += base.get(nx, ny, c) as f64;
                        }
                    }
                }
            }
            if cs > 0 {
                for (c, s) in sums.iter().enumerate() {
                    out.set(x, y, c, (s / cs as f64) as f32);
                }
                valid[y * w + x] = true;
            }
        }
    }
    Ok((out, Mask::new(w, h, valid)?))
}

pub fn fill_holes(canvas: &SplatCanvas, k: usize) -> Result<Image> {
    fill_holes_with_mask(canvas, k).map(|(img, _)| img)
}

/// Rectified texture plus bookkeeping from the intermediate stages.
#[derive(Clone, Debug)]
pub struct Rectified {
    pub texture: Image,
    pub mask: Mask,
    /// Fraction of splat-grid cells that received no source pixel.
    pub hole_fraction: f64,
    pub grid_w: usize,
    pub grid_h: usize,
}

/// Remap, splat, fill holes and, for `s_sample < 1`, upsample to the target.
pub fn rectify_detailed(
    image: &Image,
    mask: &Mask,
    depth: &DepthMap,
    k: &Intrinsics,
    params: &RectifyParams,
) -> Result<Rectified> {
    check_dims("image", image.width(), image.height(), mask)?;
    let remap = unproject_remap(depth, mask, k, params)?;
    let (gw, gh) = remap.grid_dims();
    let canvas = splat(image, mask, &remap, gw, gh)?;
    let hole_fraction = canvas.hole_fraction();
    let (mut texture, mut valid) = fill_holes_with_mask(&canvas, params.hole_kernel)?;
    if (gw, gh) != (params.target_w, params.target_h) {
        texture = resample_bilinear(&texture, params.target_w, params.target_h)?;
        valid = resample_mask_nearest(&valid, params.target_w, params.target_h)?;
    }
    texture.color_space = image.color_space;
    Ok(Rectified { texture, mask: valid, hole_fraction, grid_w: gw, grid_h: gh })
}

pub fn rectify(image: &Image, mask: &Mask, depth: &DepthMap, k: &Intrinsics, params: &RectifyParams) -> Result<(Image, Mask)> {
    rectify_detailed(image, mask, depth, k, params).map(|r| (r.texture, r.mask))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub d_shift: f64,
    /// Mean distance, in splat-grid pixels, from the constant-depth remap.
    pub remap_deviation_px: f64,
    /// Hole fraction of the splat grid before filling.
    pub hole_fraction: f64,
}

/// Evaluates remap deviation and hole fraction for each `d_shift`.
pub fn sweep_d_shift(
    image: &Image,
    mask: &Mask,
    depth: &DepthMap,
    k: &Intrinsics,
    params: &RectifyParams,
    values: &[f64],
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::invalid("sweep needs at least one d_shift value"));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::invalid(format!("sweep values must be positive, got {v}")));
    }
    let baseline = constant_depth_remap(mask, k, params)?;
    values
        .iter()
        .map(|&d_shift| {
            let p = RectifyParams { d_shift, ..*params };
            let remap = unproject_remap(depth, mask, k, &p)?;
            let (gw, gh) = remap.grid_dims();
            let canvas = splat(image, mask, &remap, gw, gh)?;
            let (mean_dev, _) = remap.deviation_from(&baseline)?;
            Ok(SweepRow { d_shift, remap_deviation_px: mean_dev, hole_fraction: canvas.hole_fraction() })
        })
        .collect()
}

pub const SWEEP_CSV_HEADER: &str = "d_shift,remap_deviation_px,hole_fraction";

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.d_shift, r.remap_deviation_px, r.hole_fraction);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(tw: usize, th: usize) -> RectifyParams {
        RectifyParams::new(tw, th)
    }

    #[test]
    fn default_intrinsics_examples() {
        assert_eq!(default_intrinsics(512, 512), Intrinsics { fx: 512.0, fy: 512.0, cx: 255.5, cy: 255.5 });
        assert_eq!(default_intrinsics(640, 480), Intrinsics { fx: 640.0, fy: 640.0, cx: 319.5, cy: 239.5 });
        assert_eq!(default_intrinsics(1, 1), Intrinsics { fx: 1.0, fy: 1.0, cx: 0.0, cy: 0.0 });
    }

    #[test]
    fn hand_derived_four_by_four_remap() {
        let depth = DepthMap::constant(4, 4, 0.5).unwrap();
        let mask = Mask::full(4, 4).unwrap();
        let k = Intrinsics::new(2.0, 2.0, 2.0, 2.0).unwrap();
        let p = RectifyParams { d_shift: 0.5, ..params(9, 9) };
        let remap = unproject_remap(&depth, &mask, &k, &p).unwrap();
        // x = (u - 2) * 1 / 2 spans [-1, 0.5]; u = 3 is the right edge
        let s = 8.0;
        let [u, v] = remap.get(3, 1).unwrap();
        assert!((u - s).abs() < 1e-9);
        assert!((v - (1.0 - 0.0) / 3.0 * s).abs() < 1e-9);
        let [u0, _] = remap.get(0, 0).unwrap();
        assert!(u0.abs() < 1e-9);
    }

    #[test]
    fn empty_mask_and_degenerate_extent() {
        let depth = DepthMap::constant(4, 4, 0.5).unwrap();
        let k = default_intrinsics(4, 4);
        let empty = Mask::new(4, 4, vec![false; 16]).unwrap();
        assert!(matches!(unproject_remap(&depth, &empty, &k, &params(8, 8)), Err(Error::EmptyMask)));
        let row = Mask::from_fn(4, 4, |_, y| y == 2).unwrap();
        assert!(matches!(unproject_remap(&depth, &row, &k, &params(8, 8)), Err(Error::DegenerateExtent { axis: "y" })));
    }

    #[test]
    fn zero_shift_with_zero_depth_is_rejected() {
        let depth = DepthMap::constant(4, 4, 0.0).unwrap();
        let k = default_intrinsics(4, 4);
        let p = RectifyParams { d_shift: 0.0, ..params(8, 8) };
        assert!(unproject_remap(&depth, &Mask::full(4, 4).unwrap(), &k, &p).is_err());
        let ok = DepthMap::constant(4, 4, 0.2).unwrap();
        assert!(unproject_remap(&ok, &Mask::full(4, 4).unwrap(), &k, &p).is_ok());
    }

    #[test]
    fn per_axis_extrema_hit_grid_edges() {
        let depth = DepthMap::new(5, 4, (0..20).map(|i| (i as f64 * 0.37).sin().abs()).collect()).unwrap();
        let mask = Mask::full(5, 4).unwrap();
        let remap = unproject_remap(&depth, &mask, &default_intrinsics(5, 4), &params(16, 12)).unwrap();
        let us: Vec<f64> = remap.coords().iter().flatten().map(|c| c[0]).collect();
        let vs: Vec<f64> = remap.coords().iter().flatten().map(|c| c[1]).collect();
        assert_eq!(us.iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
        assert_eq!(us.iter().cloned().fold(0.0, f64::max), 15.0);
        assert_eq!(vs.iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
        assert_eq!(vs.iter().cloned().fold(0.0, f64::max), 11.0);
    }

    #[test]
    fn aspect_preserving_keeps_ratio() {
        let depth = DepthMap::constant(8, 4, 0.5).unwrap();
        let mask = Mask::full(8, 4).unwrap();
        let p = RectifyParams { normalize: NormalizeMode::AspectPreserving, ..params(15, 15) };
        let remap = unproject_remap(&depth, &mask, &default_intrinsics(8, 4), &p).unwrap();
        let a = remap.get(0, 0).unwrap();
        let b = remap.get(7, 3).unwrap();
        // x extent 7 px, y extent 3 px, both divided by 7 and centered
        assert!((b[0] - a[0] - 14.0).abs() < 1e-9);
        assert!((b[1] - a[1] - 14.0 * 3.0 / 7.0).abs() < 1e-9);
        assert!(((a[1] + b[1]) * 0.5 - 7.0).abs() < 1e-9);
    }

    #[test]
    fn single_splat_and_overlap_average() {
        let img = Image::new(2, 1, 1, vec![0.2, 0.6]).unwrap();
        let mask = Mask::full(2, 1).unwrap();
        let remap = RemapField { width: 2, height: 1, grid_w: 6, grid_h: 6, coords: vec![Some([3.2, 4.1]), Some([2.6, 3.9])] };
        let canvas = splat(&img, &mask, &remap, 6, 6).unwrap();
        assert_eq!(canvas.count(3, 4), 2);
        assert!((canvas.normalized().get(3, 4, 0) - 0.4).abs() < 1e-7);
        let one = Mask::new(2, 1, vec![false, true]).unwrap();
        let c1 = splat(&Image::new(2, 1, 1, vec![0.0, 0.7]).unwrap(), &one, &remap, 6, 6).unwrap();
        assert_eq!(c1.count(3, 4), 1);
        assert!((c1.accum(3, 4, 0) - 0.7).abs() < 1e-7);
        let total: u32 = (0..6).flat_map(|y| (0..6).map(move |x| (x, y))).map(|(x, y)| c1.count(x, y)).sum();
        assert_eq!(total, 1);
    }

    #[test]
    fn identity_remap_copies_the_image() {
        let img = Image::from_fn(6, 5, 3, |x, y, c| ((x * 7 + y * 3 + c) % 11) as f32 / 10.0).unwrap();
        let mask = Mask::full(6, 5).unwrap();
        let depth = DepthMap::constant(6, 5, 0.3).unwrap();
        let remap = unproject_remap(&depth, &mask, &default_intrinsics(6, 5), &params(6, 5)).unwrap();
        let canvas = splat(&img, &mask, &remap, 6, 5).unwrap();
        assert_eq!(canvas.hole_fraction(), 0.0);
        assert_eq!(canvas.normalized(), img);
    }

    fn canvas_from(values: &[Option<f64>], w: usize, h: usize) -> SplatCanvas {
        let mut c = SplatCanvas::new(w, h, 1).unwrap();
        for (i, v) in values.iter().enumerate() {
            if let Some(v) = v {
                c.deposit(i % w, i / w, &[*v]);
            }
        }
        c
    }

    #[test]
    fn hole_fill_center_is_neighbour_mean() {
        let vals = [1.0, 2.0, 3.0, 4.0, 0.0, 6.0, 7.0, 8.0, 9.0];
        let cells: Vec<Option<f64>> = vals.iter().enumerate().map(|(i, &v)| (i != 4).then_some(v)).collect();
        let out = fill_holes(&canvas_from(&cells, 3, 3), 3).unwrap();
        assert_eq!(out.get(1, 1, 0), 5.0);
        assert_eq!(out.get(0, 0, 0), 1.0);
    }

    #[test]
    fn hole_fill_degenerate_canvases() {
        let full: Vec<Option<f64>> = (0..12).map(|i| Some(i as f64 / 12.0)).collect();
        let c = canvas_from(&full, 4, 3);
        assert_eq!(fill_holes(&c, 5).unwrap(), c.normalized());
        let empty = canvas_from(&[None; 12], 4, 3);
        assert!(fill_holes(&empty, 3).unwrap().data().iter().all(|&v| v == 0.0));
        assert!(fill_holes(&c, 4).is_err());
        assert!(fill_holes(&c, 1).is_err());
    }

    #[test]
    fn hole_fill_is_single_pass_and_clipped() {
        // only (0,0) valid; k = 3 reaches (1,1) but not (2,2)
        let mut cells = vec![None; 9];
        cells[0] = Some(0.8);
        let (out, valid) = fill_holes_with_mask(&canvas_from(&cells, 3, 3), 3).unwrap();
        assert!((out.get(1, 1, 0) - 0.8).abs() < 1e-7);
        assert_eq!(out.get(2, 2, 0), 0.0);
        assert!(valid.get(1, 1) && !valid.get(2, 2));
    }

    #[test]
    fn sweep_rejects_bad_values_and_emits_csv() {
        let img = Image::filled(8, 8, 1, 0.5).unwrap();
        let mask = Mask::full(8, 8).unwrap();
        let depth = DepthMap::constant(8, 8, 0.5).unwrap();
        let k = default_intrinsics(8, 8);
        assert!(sweep_d_shift(&img, &mask, &depth, &k, &params(8, 8), &[]).is_err());
        assert!(sweep_d_shift(&img, &mask, &depth, &k, &params(8, 8), &[1.0, -1.0]).is_err());
        let rows = sweep_d_shift(&img, &mask, &depth, &k, &params(8, 8), &[2.0]).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].remap_deviation_px < 1e-9);
        assert_eq!(sweep_to_csv(&rows).lines().next(), Some(SWEEP_CSV_HEADER));
    }
}
