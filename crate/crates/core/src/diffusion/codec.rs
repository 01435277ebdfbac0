use nalgebra::DMatrix;
use rand::Rng;

use super::latent::{ChannelRange, LatentStack, LATENT_CHANNELS_PER_MAP};
use crate::imaging::{Image, Mask, MaterialSet, NormalMap};
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result};

pub const DEFAULT_FACTOR: usize = 8;
pub const DEFAULT_CODEC_SEED: u64 = 0x5eed_c0de;

/// Stand-in for a learned autoencoder: average pooling followed by a fixed
/// linear lift of each map's channels to four latent channels.
#[derive(Clone, Debug, PartialEq)]
pub struct StubCodec {
    factor: usize,
    lift1: DMatrix<f64>,
    lift3: DMatrix<f64>,
    pinv1: DMatrix<f64>,
    pinv3: DMatrix<f64>,
}

impl Default for StubCodec {
    fn default() -> Self {
        Self::new(DEFAULT_FACTOR, DEFAULT_CODEC_SEED).expect("default codec parameters are valid")
    }
}

/// A `4 × c` matrix with full column rank and its pseudo-inverse.
fn lift_matrix(seed: u64, c: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut rng = rng_from_seed(derive_seed(seed, &[c as u64]));
    loop {
        let m = DMatrix::from_fn(LATENT_CHANNELS_PER_MAP, c, |_, _| rng.random_range(-1.0..1.0));
        let sv = m.singular_values();
        if sv.min() > 0.2 {
            let pinv = (m.transpose() * &m).try_inverse().expect("full column rank") * m.transpose();
            return (m, pinv);
        }
    }
}

impl StubCodec {
    pub fn new(factor: usize, seed: u64) -> Result<Self> {
        if factor == 0 {
            return Err(Error::invalid("downsample factor must be positive"));
        }
        let (lift1, pinv1) = lift_matrix(seed, 1);
        let (lift3, pinv3) = lift_matrix(seed, 3);
        Ok(Self { factor, lift1, lift3, pinv1, pinv3 })
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    /// The `4 × channels` lift applied to pooled pixels.
    pub fn lift(&self, channels: usize) -> &DMatrix<f64> {
        if channels == 1 {
            &self.lift1
        } else {
            &self.lift3
        }
    }

    fn pinv(&self, channels: usize) -> &DMatrix<f64> {
        if channels == 1 {
            &self.pinv1
        } else {
            &self.pinv3
        }
    }

    fn check_side(&self, w: usize, h: usize) -> Result<()> {
        if w != h {
            return Err(Error::invalid(format!("codec input must be square, got {w}x{h}")));
        }
        if !w.is_multiple_of(self.factor) || w == 0 {
            return Err(Error::invalid(format!("side {w} is not divisible by the factor {}", self.factor)));
        }
        Ok(())
    }

    /// Four latent channels for one image.
    fn encode_map(&self, image: &Image) -> Result<Vec<f64>> {
        let (w, f) = (image.width(), self.factor);
        let s = w / f;
        let ch = image.channels();
        let lift = self.lift(ch);
        let mut out = vec![0.0; LATENT_CHANNELS_PER_MAP * s * s];
        let mut pooled = vec![0.0; ch];
        let inv = 1.0 / (f * f) as f64;
        for by in 0..s {
            for bx in 0..s {
                for (c, p) in pooled.iter_mut().enumerate() {
                    let mut sum = 0.0;
                    for y in by * f..(by + 1) * f {
                        for x in bx * f..(bx + 1) * f {
                            sum += image.get(x, y, c) as f64;
                        }
                    }
                    *p = sum * inv;
                }
                for l in 0..LATENT_CHANNELS_PER_MAP {
                    out[(l * s + by) * s + bx] = (0..ch).map(|c| lift[(l, c)] * pooled[c]).sum();
                }
            }
        }
        Ok(out)
    }

    /// Encodes the four maps into a 16-channel latent.
    pub fn encode_material(&self, mat: &MaterialSet) -> Result<LatentStack> {
        let n = mat.resolution();
        self.check_side(n, n)?;
        let s = n / self.factor;
        let mut data = Vec::with_capacity(16 * s * s);
        for map in mat.maps() {
            data.extend(self.encode_map(map)?);
        }
        LatentStack::new(16, s, s, data, LatentStack::material_layout())
    }

    /// Encodes an image, zeroing pixels outside the mask when one is given.
    pub fn encode_image(&self, image: &Image, mask: Option<&Mask>) -> Result<LatentStack> {
        self.check_side(image.width(), image.height())?;
        if image.channels() != 1 && image.channels() != 3 {
            return Err(Error::invalid("codec accepts 1- or 3-channel images"));
        }
        let masked;
        let src = match mask {
            Some(m) => {
                masked = image.masked(m)?;
                &masked
            }
            None => image,
        };
        let s = image.width() / self.factor;
        let layout = vec![ChannelRange { name: "condition".into(), start: 0, len: LATENT_CHANNELS_PER_MAP }];
        LatentStack::new(LATENT_CHANNELS_PER_MAP, s, s, self.encode_map(src)?, layout)
    }

    /// Decodes four latent channels starting at `start` into an image of
    /// `channels` channels, upsampled by `upsample` with nearest blocks.
    fn decode_map(&self, z: &LatentStack, start: usize, channels: usize, upsample: usize) -> Result<Image> {
        let (h, w) = (z.height(), z.width());
        let pinv = self.pinv(channels);
        let mut pooled = vec![0.0f32; channels * h * w];
        for y in 0..h {
            for x in 0..w {
                for c in 0..channels {
                    let v: f64 = (0..LATENT_CHANNELS_PER_MAP).map(|l| pinv[(c, l)] * z.get(start + l, y, x)).sum();
                    pooled[(c * h + y) * w + x] = v.clamp(0.0, 1.0) as f32;
                }
            }
        }
        let small = Image::new(w, h, channels, pooled)?;
        if upsample == 1 {
            return Ok(small);
        }
        Image::from_fn(w * upsample, h * upsample, channels, |x, y, c| small.get(x / upsample, y / upsample, c))
    }

    fn decode_with(&self, z: &LatentStack, upsample: usize) -> Result<MaterialSet> {
        if z.channels() != 16 {
            return Err(Error::DimensionMismatch(format!("material latent needs 16 channels, got {}", z.channels())));
        }
        if z.height() != z.width() {
            return Err(Error::invalid("material latent must be square"));
        }
        MaterialSet::new(
            self.decode_map(z, 0, 3, upsample)?,
            NormalMap::new(self.decode_map(z, 4, 3, upsample)?)?,
            self.decode_map(z, 8, 1, upsample)?,
            self.decode_map(z, 12, 1, upsample)?,
        )
    }

    /// Pseudo-inverse lift, clamp to `[0, 1]` and nearest upsampling by the factor.
    pub fn decode_material(&self, z: &LatentStack) -> Result<MaterialSet> {
        self.decode_with(z, self.factor)
    }

    /// Decoding without the upsampling step.
    pub fn decode_material_pooled(&self, z: &LatentStack) -> Result<MaterialSet> {
        self.decode_with(z, 1)
    }

    pub fn decode_image(&self, z: &LatentStack, channels: usize) -> Result<Image> {
        if z.channels() != LATENT_CHANNELS_PER_MAP || !(channels == 1 || channels == 3) {
            return Err(Error::invalid("image latents have 4 channels and decode to 1 or 3"));
        }
        self.decode_map(z, 0, channels, self.factor)
    }
}
