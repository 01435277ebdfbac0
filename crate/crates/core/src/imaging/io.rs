//! PNG (8/16-bit) and PFM loading and saving.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageError, ImageFormat, Luma, Rgb};

use super::{pfm, ColorSpace, DepthMap, Image, Mask, MaterialSet, NormalMap};
use crate::{Error, Result};

/// What a file is expected to hold; decides channel checks and normalization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageKind {
    Albedo,
    Normal,
    Roughness,
    Height,
    Mask,
    Depth,
}

impl ImageKind {
    fn expected_channels(self) -> Option<usize> {
        match self {
            ImageKind::Albedo | ImageKind::Normal => Some(3),
            ImageKind::Roughness | ImageKind::Height | ImageKind::Depth => Some(1),
            ImageKind::Mask => None,
        }
    }

    fn color_space(self) -> ColorSpace {
        match self {
            ImageKind::Albedo => ColorSpace::Display,
            _ => ColorSpace::Linear,
        }
    }
}

fn is_pfm(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("pfm"))
}

fn map_image_err(path: &Path, err: ImageError) -> Error {
    match err {
        ImageError::IoError(e) => Error::io(path, e),
        ImageError::Unsupported(e) => Error::UnsupportedFormat { path: path.to_path_buf(), message: e.to_string() },
        other => Error::Decode { path: path.to_path_buf(), message: other.to_string() },
    }
}

/// Decodes a PNG into planar unit-range samples, dropping any alpha channel.
fn decode_png(path: &Path) -> Result<Image> {
    let reader = image::ImageReader::open(path).map_err(|e| Error::io(path, e))?;
    let dynimg = reader.with_guessed_format().map_err(|e| Error::io(path, e))?.decode().map_err(|e| map_image_err(path, e))?;
    let (w, h) = (dynimg.width() as usize, dynimg.height() as usize);
    let unsupported = |m: &str| Error::UnsupportedFormat { path: path.to_path_buf(), message: m.to_string() };
    let (channels, samples): (usize, Vec<f32>) = match &dynimg {
        DynamicImage::ImageLuma8(b) => (1, b.as_raw().iter().map(|&v| v as f32 / 255.0).collect()),
        DynamicImage::ImageLumaA8(b) => (1, b.as_raw().chunks(2).map(|p| p[0] as f32 / 255.0).collect()),
        DynamicImage::ImageRgb8(b) => (3, b.as_raw().iter().map(|&v| v as f32 / 255.0).collect()),
        DynamicImage::ImageRgba8(b) => {
            (3, b.as_raw().chunks(4).flat_map(|p| [p[0], p[1], p[2]]).map(|v| v as f32 / 255.0).collect())
        }
        DynamicImage::ImageLuma16(b) => (1, b.as_raw().iter().map(|&v| v as f32 / 65535.0).collect()),
        DynamicImage::ImageLumaA16(b) => (1, b.as_raw().chunks(2).map(|p| p[0] as f32 / 65535.0).collect()),
        DynamicImage::ImageRgb16(b) => (3, b.as_raw().iter().map(|&v| v as f32 / 65535.0).collect()),
        DynamicImage::ImageRgba16(b) => {
            (3, b.as_raw().chunks(4).flat_map(|p| [p[0], p[1], p[2]]).map(|v| v as f32 / 65535.0).collect())
        }
        _ => return Err(unsupported("only 8-bit and 16-bit integer PNGs are supported")),
    };
    // interleaved -> planar
    let mut data = vec![0f32; samples.len()];
    for (i, v) in samples.into_iter().enumerate() {
        let (px, c) = (i / channels, i % channels);
        data[c * w * h + px] = v;
    }
    Image::new(w, h, channels, data)
}

fn normalize_min_max(image: Image) -> Result<Image> {
    let raw: Vec<f64> = image.data().iter().map(|&v| v as f64).collect();
    let depth = DepthMap::from_unnormalized(image.width(), image.height(), &raw)?;
    Ok(depth.to_image())
}

/// Loads an image of the given kind.
///
/// PNG samples are divided by the full-scale value of their bit depth. PFM
/// files are accepted for height and depth; depth loads are min-max
/// normalized regardless of format.
pub fn load_image(path: &Path, kind: ImageKind) -> Result<Image> {
    let image = if is_pfm(path) {
        if !matches!(kind, ImageKind::Depth | ImageKind::Height) {
            return Err(Error::UnsupportedFormat {
                path: path.to_path_buf(),
                message: "PFM is only accepted for depth and height".into(),
            });
        }
        pfm::read_pfm(path)?
    } else {
        decode_png(path)?
    };
    if let Some(expected) = kind.expected_channels() {
        if image.channels() != expected {
            return Err(Error::invalid(format!(
                "{} holds {} channel(s); {:?} maps need {}",
                path.display(),
                image.channels(),
                kind,
                expected
            )));
        }
    }
    let image = if kind == ImageKind::Depth { normalize_min_max(image)? } else { image };
    Ok(image.with_color_space(kind.color_space()))
}

pub fn load_depth(path: &Path) -> Result<DepthMap> {
    let img = load_image(path, ImageKind::Depth)?;
    DepthMap::new(img.width(), img.height(), img.data().iter().map(|&v| v as f64).collect())
}

/// Any nonzero pixel is inside.
pub fn load_mask(path: &Path) -> Result<Mask> {
    Ok(Mask::from_image(&load_image(path, ImageKind::Mask)?))
}

pub fn save_mask(mask: &Mask, path: &Path) -> Result<()> {
    save_image(&mask.to_image(), path, 8)
}

/// Saves as PNG with 8 or 16 bits per sample; samples are clamped to `[0, 1]`.
pub fn save_image(image: &Image, path: &Path, bit_depth: u8) -> Result<()> {
    let (w, h, ch) = (image.width(), image.height(), image.channels());
    let interleaved = |scale: f32| -> Vec<f32> {
        let mut out = Vec::with_capacity(w * h * ch);
        for y in 0..h {
            for x in 0..w {
                for c in 0..ch {
                    out.push((image.get(x, y, c).clamp(0.0, 1.0) * scale).round());
                }
            }
        }
        out
    };
    let result = match (bit_depth, ch) {
        (8, 1) => {
            let buf = interleaved(255.0).into_iter().map(|v| v as u8).collect();
            ImageBuffer::<Luma<u8>, Vec<u8>>::from_raw(w as u32, h as u32, buf)
                .expect("buffer sized from image")
                .save_with_format(path, ImageFormat::Png)
        }
        (8, 3) => {
            let buf = interleaved(255.0).into_iter().map(|v| v as u8).collect();
            ImageBuffer::<Rgb<u8>, Vec<u8>>::from_raw(w as u32, h as u32, buf)
                .expect("buffer sized from image")
                .save_with_format(path, ImageFormat::Png)
        }
        (16, 1) => {
            let buf = interleaved(65535.0).into_iter().map(|v| v as u16).collect();
            ImageBuffer::<Luma<u16>, Vec<u16>>::from_raw(w as u32, h as u32, buf)
                .expect("buffer sized from image")
                .save_with_format(path, ImageFormat::Png)
        }
        (16, 3) => {
            let buf = interleaved(65535.0).into_iter().map(|v| v as u16).collect();
            ImageBuffer::<Rgb<u16>, Vec<u16>>::from_raw(w as u32, h as u32, buf)
                .expect("buffer sized from image")
                .save_with_format(path, ImageFormat::Png)
        }
        (b, _) => return Err(Error::invalid(format!("bit depth must be 8 or 16, got {b}"))),
    };
    result.map_err(|e| map_image_err(path, e))
}

/// Loads `albedo.png`, `normal.png`, `roughness.png` and `height.png` (or
/// `height.pfm`) from a directory.
pub fn load_material_dir(dir: &Path) -> Result<MaterialSet> {
    let albedo = load_image(&dir.join("albedo.png"), ImageKind::Albedo)?;
    let normal = NormalMap::new(load_image(&dir.join("normal.png"), ImageKind::Normal)?)?;
    let roughness = load_image(&dir.join("roughness.png"), ImageKind::Roughness)?;
    let height_pfm = dir.join("height.pfm");
    let height = if height_pfm.exists() {
        load_image(&height_pfm, ImageKind::Height)?
    } else {
        load_image(&dir.join("height.png"), ImageKind::Height)?
    };
    MaterialSet::new(albedo, normal, roughness, height)
}

/// Writes the four maps of a material as PNGs; height is written at 16 bits.
pub fn save_material_dir(mat: &MaterialSet, dir: &Path, bit_depth: u8) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_image(&mat.albedo, &dir.join("albedo.png"), bit_depth)?;
    save_image(mat.normal.encoded(), &dir.join("normal.png"), bit_depth)?;
    save_image(&mat.roughness, &dir.join("roughness.png"), bit_depth)?;
    save_image(&mat.height, &dir.join("height.png"), 16)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn max_abs_diff(a: &Image, b: &Image) -> f32 {
        a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f32::max)
    }

    #[test]
    fn eight_bit_full_scale_and_midpoint() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.png");
        ImageBuffer::<Luma<u8>, Vec<u8>>::from_raw(3, 1, vec![255, 128, 0]).unwrap().save(&p).unwrap();
        let img = load_image(&p, ImageKind::Roughness).unwrap();
        assert_eq!(img.get(0, 0, 0), 1.0);
        assert!((img.get(1, 0, 0) - 128.0 / 255.0).abs() < 1e-7);
        assert!((img.get(1, 0, 0) - 0.50196).abs() < 1e-5);
        assert_eq!(img.get(2, 0, 0), 0.0);
    }

    #[test]
    fn sixteen_bit_zero() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g16.png");
        ImageBuffer::<Luma<u16>, Vec<u16>>::from_raw(2, 1, vec![0, 65535]).unwrap().save(&p).unwrap();
        let img = load_image(&p, ImageKind::Height).unwrap();
        assert_eq!(img.data(), &[0.0, 1.0]);
    }

    #[test]
    fn channel_mismatch_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rgb.png");
        save_image(&Image::filled(2, 2, 3, 0.2).unwrap(), &p, 8).unwrap();
        assert!(load_image(&p, ImageKind::Roughness).is_err());
        assert!(load_image(&p, ImageKind::Albedo).is_ok());
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_image(Path::new("/nonexistent/x.png"), ImageKind::Albedo).unwrap_err();
        assert!(err.is_io());
    }

    #[test]
    fn constant_half_survives_eight_bit() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("half.png");
        let img = Image::filled(4, 4, 3, 0.5).unwrap();
        save_image(&img, &p, 8).unwrap();
        let back = load_image(&p, ImageKind::Albedo).unwrap();
        // quantize-dequantize oracle: round(0.5 * 255) / 255
        let oracle = (0.5f32 * 255.0).round() / 255.0;
        assert!(back.data().iter().all(|&v| v == oracle));
        assert!(max_abs_diff(&img, &back) <= 1.0 / 255.0);
    }

    #[test]
    fn depth_loads_are_min_max_normalized() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.pfm");
        pfm::write_pfm(&Image::new(3, 1, 1, vec![2.0, 6.0, 4.0]).unwrap(), &p).unwrap();
        let d = load_depth(&p).unwrap();
        assert_eq!(d.data(), &[0.0, 1.0, 0.5]);
        // height PFM passes through untouched
        let h = load_image(&p, ImageKind::Height).unwrap();
        assert_eq!(h.data(), &[2.0, 6.0, 4.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn png_round_trip_within_quantization(
            seed in any::<u64>(), ch in prop::sample::select(vec![1usize, 3]), bits in prop::sample::select(vec![8u8, 16])
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let img = Image::from_fn(7, 5, ch, |_, _, _| rng.random::<f32>()).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("r.png");
            save_image(&img, &p, bits).unwrap();
            let kind = if ch == 1 { ImageKind::Roughness } else { ImageKind::Albedo };
            let back = load_image(&p, kind).unwrap();
            let step = 1.0 / ((1u32 << bits) - 1) as f32;
            prop_assert!(max_abs_diff(&img, &back) <= step);
        }
    }
}
