//! Rotation of material maps about their center with periodic boundaries.
//!
//! A positive angle turns the content counter-clockwise as displayed (image
//! rows growing downwards). Normal vectors are rotated by the same angle in
//! the tangent frame (+Y towards row 0) so shading stays consistent.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::{Boundary, Image, MaterialSet, NormalMap};
use crate::Result;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    Nearest,
    #[default]
    Bilinear,
}

/// `(cos, sin)` with exact values at multiples of a quarter turn so that
/// quarter-turn rotations reduce to index permutations.
pub(crate) fn snapped_trig(alpha: f64) -> (f64, f64) {
    let quarters = alpha / FRAC_PI_2;
    let k = quarters.round();
    if (quarters - k).abs() < 1e-12 {
        match (k as i64).rem_euclid(4) {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        }
    } else {
        (alpha.cos(), alpha.sin())
    }
}

/// Maps output pixel `(x, y)` to its source location.
#[inline]
fn source_coords(x: usize, y: usize, cx: f64, cy: f64, cos: f64, sin: f64) -> (f64, f64) {
    let dx = x as f64 - cx;
    let dy = cy - y as f64;
    // inverse rotation R(-alpha) in the y-up frame
    let sx = dx * cos + dy * sin;
    let sy = -dx * sin + dy * cos;
    (cx + sx, cy - sy)
}

/// Rotates every channel of an image about its center.
pub fn rotate_image(image: &Image, alpha: f64, sampling: Sampling) -> Result<Image> {
    let (cos, sin) = snapped_trig(alpha);
    if cos == 1.0 && sin == 0.0 {
        return Ok(image.clone());
    }
    let cx = (image.width() as f64 - 1.0) * 0.5;
    let cy = (image.height() as f64 - 1.0) * 0.5;
    Image::from_fn(image.width(), image.height(), image.channels(), |x, y, c| {
        let (sx, sy) = source_coords(x, y, cx, cy, cos, sin);
        match sampling {
            Sampling::Nearest => image.sample_nearest(sx, sy, c, Boundary::Wrap),
            Sampling::Bilinear => image.sample_bilinear(sx, sy, c, Boundary::Wrap) as f32,
        }
    })
    .map(|i| i.with_color_space(image.color_space))
}

fn rotate_normal_map(normal: &NormalMap, alpha: f64, sampling: Sampling) -> Result<NormalMap> {
    let (cos, sin) = snapped_trig(alpha);
    let moved = rotate_image(normal.encoded(), alpha, sampling)?;
    let (w, h) = (moved.width(), moved.height());
    let mut out = moved.clone();
    for y in 0..h {
        for x in 0..w {
            let mut v = [0usize, 1, 2].map(|c| 2.0 * moved.get(x, y, c) as f64 - 1.0);
            if sampling == Sampling::Bilinear {
                // interpolation shortens vectors
                let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if len > 1e-6 {
                    v = v.map(|c| c / len);
                }
            }
            let rx = v[0] * cos - v[1] * sin;
            let ry = v[0] * sin + v[1] * cos;
            out.set(x, y, 0, ((rx + 1.0) * 0.5).clamp(0.0, 1.0) as f32);
            out.set(x, y, 1, ((ry + 1.0) * 0.5).clamp(0.0, 1.0) as f32);
            out.set(x, y, 2, ((v[2] + 1.0) * 0.5).clamp(0.0, 1.0) as f32);
        }
    }
    NormalMap::new(out)
}

/// Rotates all four maps by `alpha` radians; normal vectors are re-oriented.
pub fn rotate_material_set(mat: &MaterialSet, alpha: f64, sampling: Sampling) -> Result<MaterialSet> {
    let (cos, sin) = snapped_trig(alpha);
    if cos == 1.0 && sin == 0.0 {
        return Ok(mat.clone());
    }
    MaterialSet::new(
        rotate_image(&mat.albedo, alpha, sampling)?,
        rotate_normal_map(&mat.normal, alpha, sampling)?,
        rotate_image(&mat.roughness, alpha, sampling)?,
        rotate_image(&mat.height, alpha, sampling)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::decode_normal;
    use crate::procedural;
    use std::f64::consts::PI;

    fn single_normal_material(n: [f32; 3]) -> MaterialSet {
        let size = 6;
        MaterialSet::new(
            Image::filled(size, size, 3, 0.4).unwrap(),
            NormalMap::new(Image::from_fn(size, size, 3, |_, _, c| n[c]).unwrap()).unwrap(),
            Image::filled(size, size, 1, 0.5).unwrap(),
            Image::filled(size, size, 1, 0.5).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn zero_angle_is_identity() {
        let mat = procedural::material(3, 32).unwrap();
        for s in [Sampling::Nearest, Sampling::Bilinear] {
            assert_eq!(rotate_material_set(&mat, 0.0, s).unwrap(), mat);
        }
    }

    #[test]
    fn flat_normals_are_rotation_invariant() {
        let mat = single_normal_material([0.5, 0.5, 1.0]);
        for alpha in [0.3, 1.0, PI / 2.0, 2.5, -1.1] {
            for s in [Sampling::Nearest, Sampling::Bilinear] {
                let r = rotate_material_set(&mat, alpha, s).unwrap();
                assert_eq!(r.normal, mat.normal, "alpha {alpha}");
            }
        }
    }

    #[test]
    fn x_axis_normal_turns_into_y_axis() {
        let mat = single_normal_material([1.0, 0.5, 0.5]);
        let r = rotate_material_set(&mat, PI / 2.0, Sampling::Nearest).unwrap();
        assert_eq!(r.normal.pixel(2, 3), [0.5, 1.0, 0.5]);
    }

    #[test]
    fn quarter_turn_moves_content_counter_clockwise() {
        // a bright pixel right of center ends up above center
        let img = Image::from_fn(5, 5, 1, |x, y, _| if (x, y) == (4, 2) { 1.0 } else { 0.0 }).unwrap();
        let r = rotate_image(&img, PI / 2.0, Sampling::Nearest).unwrap();
        assert_eq!(r.get(2, 0, 0), 1.0);
        assert_eq!(r.data().iter().sum::<f32>(), 1.0);
    }

    #[test]
    fn quarter_turn_nearest_is_an_index_permutation() {
        let mat = procedural::material(11, 16).unwrap();
        let r = rotate_material_set(&mat, PI / 2.0, Sampling::Nearest).unwrap();
        let n = 16;
        for y in 0..n {
            for x in 0..n {
                // CCW quarter turn: output (x, y) reads input (n-1-y, x)
                let (sx, sy) = (n - 1 - y, x);
                for c in 0..3 {
                    assert_eq!(r.albedo.get(x, y, c).to_bits(), mat.albedo.get(sx, sy, c).to_bits());
                }
                assert_eq!(r.height.get(x, y, 0).to_bits(), mat.height.get(sx, sy, 0).to_bits());
                let p = mat.normal.pixel(sx, sy);
                let q = r.normal.pixel(x, y);
                assert_eq!(q, [1.0 - p[1], p[0], p[2]]);
            }
        }
    }

    #[test]
    fn bilinear_rotation_keeps_normals_unit_length() {
        let mat = procedural::material(5, 32).unwrap();
        let r = rotate_material_set(&mat, 0.7, Sampling::Bilinear).unwrap();
        for y in 0..32 {
            for x in 0..32 {
                let raw = r.normal.pixel(x, y).map(|p| 2.0 * p as f64 - 1.0);
                let len = (raw[0] * raw[0] + raw[1] * raw[1] + raw[2] * raw[2]).sqrt();
                assert!((len - 1.0).abs() < 1e-3, "len {len}");
                assert!(decode_normal(r.normal.pixel(x, y)).is_ok());
            }
        }
    }

    #[test]
    fn composition_matches_sum_of_angles() {
        let mat = procedural::material(9, 64).unwrap();
        let (a, b) = (0.4, 0.9);
        let two = rotate_material_set(&rotate_material_set(&mat, a, Sampling::Bilinear).unwrap(), b, Sampling::Bilinear).unwrap();
        let one = rotate_material_set(&mat, a + b, Sampling::Bilinear).unwrap();
        for (p, q) in two.maps().iter().zip(one.maps()) {
            let mae: f64 = p.data().iter().zip(q.data()).map(|(x, y)| (x - y).abs() as f64).sum::<f64>() / p.data().len() as f64;
            assert!(mae <= 0.02, "mean abs error {mae}");
        }
    }
}
