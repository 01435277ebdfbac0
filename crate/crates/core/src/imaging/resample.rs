use super::{Boundary, Image, Mask};
use crate::{Error, Result};

/// Source coordinate for corner-aligned resampling: the first and last
/// output samples land on the first and last input samples.
#[inline]
fn corner_aligned(i: usize, n_out: usize, n_in: usize) -> f64 {
    if n_out == 1 {
        (n_in as f64 - 1.0) * 0.5
    } else {
        i as f64 * (n_in as f64 - 1.0) / (n_out as f64 - 1.0)
    }
}

/// Corner-aligned bilinear resampling.
pub fn resample_bilinear(image: &Image, target_w: usize, target_h: usize) -> Result<Image> {
    if target_w == 0 || target_h == 0 {
        return Err(Error::invalid("target dimensions must be at least 1"));
    }
    if target_w == image.width() && target_h == image.height() {
        return Ok(image.clone());
    }
    let xs: Vec<f64> = (0..target_w).map(|x| corner_aligned(x, target_w, image.width())).collect();
    let ys: Vec<f64> = (0..target_h).map(|y| corner_aligned(y, target_h, image.height())).collect();
    Image::from_fn(target_w, target_h, image.channels(), |x, y, c| image.sample_bilinear(xs[x], ys[y], c, Boundary::Clamp) as f32)
        .map(|i| i.with_color_space(image.color_space))
}

/// Corner-aligned nearest-neighbour resampling of a mask.
pub fn resample_mask_nearest(mask: &Mask, target_w: usize, target_h: usize) -> Result<Mask> {
    if target_w == 0 || target_h == 0 {
        return Err(Error::invalid("target dimensions must be at least 1"));
    }
    Mask::from_fn(target_w, target_h, |x, y| {
        let sx = corner_aligned(x, target_w, mask.width()).round() as usize;
        let sy = corner_aligned(y, target_h, mask.height()).round() as usize;
        mask.get(sx.min(mask.width() - 1), sy.min(mask.height() - 1))
    })
}
