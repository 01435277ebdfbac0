//! Image, mask, depth and material-set types plus the codecs and resampling
//! used across the pipeline.
//!
//! Samples are stored planar (`channel`, `row`, `column`) as `f32`. Depth is
//! kept in `f64` because rectification and the rasterizer oracle compare
//! depths at tolerances below single precision.

mod io;
mod normal;
mod pfm;
mod resample;
mod rotate;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use io::{load_depth, load_image, load_mask, load_material_dir, save_image, save_mask, save_material_dir, ImageKind};
pub use normal::{decode_normal, encode_normal};
pub use pfm::{read_pfm, write_pfm};
pub use resample::{resample_bilinear, resample_mask_nearest};
pub use rotate::{rotate_image, rotate_material_set, Sampling};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorSpace {
    #[default]
    Linear,
    Display,
}

/// Edge handling for continuous lookups.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Clamp,
    Wrap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
    pub color_space: ColorSpace,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!("image dimensions must be positive, got {width}x{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(format!("images carry 1 or 3 channels, got {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::DimensionMismatch(format!(
                "{}x{}x{} image needs {} samples, got {}",
                width,
                height,
                channels,
                width * height * channels,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {i}")));
        }
        Ok(Self { width, height, channels, data, color_space: ColorSpace::Linear })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Builds an image from `f(x, y, channel)`.
    pub fn from_fn(width: usize, height: usize, channels: usize, mut f: impl FnMut(usize, usize, usize) -> f32) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    pub fn with_color_space(mut self, cs: ColorSpace) -> Self {
        self.color_space = cs;
        self
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

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, c: usize) -> usize {
        (c * self.height + y) * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[self.index(x, y, c)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f32) {
        let i = self.index(x, y, c);
        self.data[i] = v;
    }

    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.width * self.height;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn is_unit_range(&self) -> bool {
        self.data.iter().all(|v| (0.0..=1.0).contains(v))
    }

    pub fn clamp01(mut self) -> Self {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
        self
    }

    /// Multiplies every channel by the mask (1 inside, 0 outside).
    pub fn masked(&self, mask: &Mask) -> Result<Image> {
        if mask.width() != self.width || mask.height() != self.height {
            return Err(Error::DimensionMismatch("mask does not match image".into()));
        }
        let mut out = self.clone();
        let n = self.width * self.height;
        for c in 0..self.channels {
            for (i, &m) in mask.data().iter().enumerate() {
                if !m {
                    out.data[c * n + i] = 0.0;
                }
            }
        }
        Ok(out)
    }

    /// Crops the rectangle `[x0, x0 + w) × [y0, y0 + h)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Image> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(Error::invalid("crop rectangle outside image"));
        }
        Image::from_fn(w, h, self.channels, |x, y, c| self.get(x0 + x, y0 + y, c)).map(|i| i.with_color_space(self.color_space))
    }

    /// Bilinear lookup at continuous pixel coordinates (pixel centers at integers).
    pub fn sample_bilinear(&self, x: f64, y: f64, c: usize, boundary: Boundary) -> f64 {
        let x0f = x.floor();
        let y0f = y.floor();
        let fx = x - x0f;
        let fy = y - y0f;
        let (x0, x1) = self.axis_pair(x0f as i64, self.width, boundary);
        let (y0, y1) = self.axis_pair(y0f as i64, self.height, boundary);
        let a = self.get(x0, y0, c) as f64;
        let b = self.get(x1, y0, c) as f64;
        let d = self.get(x0, y1, c) as f64;
        let e = self.get(x1, y1, c) as f64;
        let top = a + fx * (b - a);
        let bottom = d + fx * (e - d);
        top + fy * (bottom - top)
    }

    /// Nearest-neighbour lookup at continuous pixel coordinates.
    pub fn sample_nearest(&self, x: f64, y: f64, c: usize, boundary: Boundary) -> f32 {
        let xi = resolve(x.round() as i64, self.width, boundary);
        let yi = resolve(y.round() as i64, self.height, boundary);
        self.get(xi, yi, c)
    }

    fn axis_pair(&self, i0: i64, n: usize, boundary: Boundary) -> (usize, usize) {
        (resolve(i0, n, boundary), resolve(i0 + 1, n, boundary))
    }
}

#[inline]
fn resolve(i: i64, n: usize, boundary: Boundary) -> usize {
    match boundary {
        Boundary::Clamp => i.clamp(0, n as i64 - 1) as usize,
        Boundary::Wrap => i.rem_euclid(n as i64) as usize,
    }
}

/// Binary region annotation; `true` marks pixels inside the region.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("mask dimensions must be positive"));
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} mask needs {} flags, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn full(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![true; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    /// Any nonzero sample in any channel marks the pixel as inside.
    pub fn from_image(image: &Image) -> Self {
        let (w, h) = (image.width(), image.height());
        let data = (0..w * h).map(|i| (0..image.channels()).any(|c| image.plane(c)[i] != 0.0)).collect();
        Self { width: w, height: h, data }
    }

    pub fn to_image(&self) -> Image {
        let data = self.data.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        Image::new(self.width, self.height, 1, data).expect("mask dimensions already validated")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Inclusive bounding box `(x0, y0, x1, y1)` of the set pixels.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bb: Option<(usize, usize, usize, usize)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    bb = Some(match bb {
                        None => (x, y, x, y),
                        Some((a, b, c, d)) => (a.min(x), b.min(y), c.max(x), d.max(y)),
                    });
                }
            }
        }
        bb
    }
}

/// Per-pixel depth normalized to `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("depth map dimensions must be positive"));
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} depth map needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::invalid(format!("depth sample {} at index {i} outside [0, 1]", data[i])));
        }
        Ok(Self { width, height, data })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Min-max normalizes arbitrary finite samples; a flat input maps to all zeros.
    pub fn from_unnormalized(width: usize, height: usize, raw: &[f64]) -> Result<Self> {
        let (lo, hi) = finite_range(raw.iter().copied()).ok_or_else(|| Error::invalid("depth map contains no finite samples"))?;
        let span = hi - lo;
        let data =
            raw.iter().map(|&v| if !v.is_finite() || span <= 0.0 { 0.0 } else { ((v - lo) / span).clamp(0.0, 1.0) }).collect();
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn to_image(&self) -> Image {
        let data = self.data.iter().map(|&v| v as f32).collect();
        Image::new(self.width, self.height, 1, data).expect("depth dimensions already validated")
    }
}

pub(crate) fn finite_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.filter(|v| v.is_finite()).fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

/// Tangent-space normal map: three channels encoding unit vectors as
/// `n = 2·pixel − 1`, +X right, +Y up (towards row 0), +Z out of the surface.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalMap(Image);

impl NormalMap {
    pub fn new(encoded: Image) -> Result<Self> {
        if encoded.channels() != 3 {
            return Err(Error::invalid("normal maps need three channels"));
        }
        Ok(Self(encoded))
    }

    /// A map of `(0, 0, 1)` normals.
    pub fn flat(size: usize) -> Result<Self> {
        Self::new(Image::from_fn(size, size, 3, |_, _, c| if c == 2 { 1.0 } else { 0.5 })?)
    }

    pub fn encoded(&self) -> &Image {
        &self.0
    }

    pub fn into_encoded(self) -> Image {
        self.0
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        [self.0.get(x, y, 0), self.0.get(x, y, 1), self.0.get(x, y, 2)]
    }

    /// Decoded, renormalized vector at a pixel.
    pub fn vector(&self, x: usize, y: usize) -> Result<[f64; 3]> {
        decode_normal(self.pixel(x, y))
    }
}

/// Albedo, normal, roughness and height maps sharing one square resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialSet {
    pub albedo: Image,
    pub normal: NormalMap,
    pub roughness: Image,
    pub height: Image,
}

/// Names of the four material attributes, in latent-stack order.
pub const ATTRIBUTES: [&str; 4] = ["albedo", "normal", "roughness", "height"];

impl MaterialSet {
    pub fn new(albedo: Image, normal: NormalMap, roughness: Image, height: Image) -> Result<Self> {
        let n = albedo.width();
        if albedo.height() != n {
            return Err(Error::invalid("material maps must be square"));
        }
        if albedo.channels() != 3 || roughness.channels() != 1 || height.channels() != 1 {
            return Err(Error::invalid("material maps need 3-channel albedo and 1-channel roughness/height"));
        }
        for (name, img) in [("normal", normal.encoded()), ("roughness", &roughness), ("height", &height)] {
            if img.width() != n || img.height() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{name} map is {}x{}, albedo is {n}x{n}",
                    img.width(),
                    img.height()
                )));
            }
        }
        Ok(Self { albedo, normal, roughness, height })
    }

    pub fn resolution(&self) -> usize {
        self.albedo.width()
    }

    /// The maps in [`ATTRIBUTES`] order.
    pub fn maps(&self) -> [&Image; 4] {
        [&self.albedo, self.normal.encoded(), &self.roughness, &self.height]
    }
}
