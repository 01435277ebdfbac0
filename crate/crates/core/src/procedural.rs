//! Seeded, exactly tileable, band-limited materials for demos and tests.

use std::f64::consts::TAU;

use rand::Rng;

use crate::imaging::{ColorSpace, Image, MaterialSet, NormalMap};
use crate::rng::{derive_seed, rng_from_seed};
use crate::Result;

/// Sum of periodic cosines with integer frequencies up to `max_freq` cycles
/// per tile, rescaled into `[0, 1]`.
pub fn periodic_field(seed: u64, size: usize, terms: usize, max_freq: i32) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    let waves: Vec<(f64, f64, f64, f64)> = (0..terms)
        .map(|_| {
            let (kx, ky) = loop {
                let kx = rng.random_range(-max_freq..=max_freq);
                let ky = rng.random_range(-max_freq..=max_freq);
                if kx != 0 || ky != 0 {
                    break (kx, ky);
                }
            };
            let k = ((kx * kx + ky * ky) as f64).sqrt();
            let amp = rng.random_range(0.5..1.0) / k;
            (kx as f64, ky as f64, rng.random_range(0.0..TAU), amp)
        })
        .collect();
    let total: f64 = waves.iter().map(|w| w.3).sum();
    let n = size as f64;
    let mut out = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let s: f64 = waves.iter().map(|&(kx, ky, ph, a)| a * (TAU * (kx * x as f64 + ky * y as f64) / n + ph).cos()).sum();
            out.push(0.5 + 0.5 * s / total);
        }
    }
    out
}

/// A tileable material whose normal map is derived from its height map.
pub fn material(seed: u64, size: usize) -> Result<MaterialSet> {
    let mut rng = rng_from_seed(derive_seed(seed, &[0]));
    let color_a: [f64; 3] = [rng.random_range(0.05..0.5), rng.random_range(0.05..0.5), rng.random_range(0.05..0.5)];
    let color_b: [f64; 3] = [rng.random_range(0.5..0.95), rng.random_range(0.5..0.95), rng.random_range(0.5..0.95)];
    let pattern = periodic_field(derive_seed(seed, &[1]), size, 8, 6);
    let detail = periodic_field(derive_seed(seed, &[2]), size, 6, 10);
    let height = periodic_field(derive_seed(seed, &[3]), size, 8, 5);
    let rough = periodic_field(derive_seed(seed, &[4]), size, 5, 4);

    let albedo = Image::from_fn(size, size, 3, |x, y, c| {
        let i = y * size + x;
        let t = 0.75 * pattern[i] + 0.25 * detail[i];
        (color_a[c] + (color_b[c] - color_a[c]) * t) as f32
    })?
    .with_color_space(ColorSpace::Display);

    let strength = 0.08 * size as f64;
    let h = |x: isize, y: isize| {
        let n = size as isize;
        height[(y.rem_euclid(n) as usize) * size + x.rem_euclid(n) as usize]
    };
    let normal = Image::from_fn(size, size, 3, |x, y, c| {
        let (xi, yi) = (x as isize, y as isize);
        let dx = (h(xi + 1, yi) - h(xi - 1, yi)) * 0.5;
        let drow = (h(xi, yi + 1) - h(xi, yi - 1)) * 0.5;
        // +Y points towards row 0, so dh/dY = -dh/drow
        let v = [-strength * dx, strength * drow, 1.0];
        let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        ((v[c] / len + 1.0) * 0.5) as f32
    })?;

    let roughness = Image::from_fn(size, size, 1, |x, y, _| (0.2 + 0.7 * rough[y * size + x]) as f32)?;
    let height = Image::from_fn(size, size, 1, |x, y, _| height[y * size + x] as f32)?;
    MaterialSet::new(albedo, NormalMap::new(normal)?, roughness, height)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fields_are_deterministic_periodic_and_bounded() {
        let a = periodic_field(4, 32, 6, 5);
        assert_eq!(a, periodic_field(4, 32, 6, 5));
        assert!(a.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_ne!(a, periodic_field(5, 32, 6, 5));
    }

    #[test]
    fn material_is_valid() {
        let m = material(1, 16).unwrap();
        assert_eq!(m.resolution(), 16);
        for img in m.maps() {
            assert!(img.is_unit_range());
        }
    }
}
