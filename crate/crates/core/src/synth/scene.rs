use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::imaging::{rotate_material_set, Boundary, MaterialSet, Sampling};
use crate::tps::{tps_fit_scalar, TpsSpec};
use crate::{Error, Result};

/// Ambient plus one directional light with a Blinn-Phong highlight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LightingConfig {
    pub ambient: f64,
    /// Unit vector pointing from the surface towards the light.
    pub light_dir: [f64; 3],
    pub light_intensity: f64,
    pub specular_strength: f64,
}

impl LightingConfig {
    pub fn ambient_only() -> Self {
        Self { ambient: 1.0, light_dir: [0.0, 0.0, 1.0], light_intensity: 0.0, specular_strength: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.ambient) {
            return Err(Error::invalid("ambient must lie in [0, 1]"));
        }
        let len = Vector3::from(self.light_dir).norm();
        if (len - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(format!("light direction must be unit length, got {len}")));
        }
        if !(self.light_intensity >= 0.0 && self.specular_strength >= 0.0) {
            return Err(Error::invalid("light intensity and specular strength must be non-negative"));
        }
        Ok(())
    }
}

/// Random light from the upper hemisphere at least ~17° above the horizon.
pub fn sample_lighting<R: Rng + ?Sized>(rng: &mut R) -> LightingConfig {
    let z: f64 = rng.random_range(0.3..1.0);
    let phi = rng.random_range(0.0..std::f64::consts::TAU);
    let s = (1.0 - z * z).sqrt();
    LightingConfig {
        ambient: rng.random_range(0.1..0.4),
        light_dir: [s * phi.cos(), s * phi.sin(), z],
        light_intensity: rng.random_range(0.5..1.0),
        specular_strength: rng.random_range(0.0..0.5),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    /// Vertices per side of the plane grid.
    pub grid_n: usize,
    pub extent: f64,
    /// TPS control points per side.
    pub control_grid: usize,
    /// Control-point z targets are drawn uniformly from `[−amplitude, amplitude]`.
    pub amplitude: f64,
    /// World-space displacement for a height-map value of 1.
    pub height_scale: f64,
    pub tps_lambda: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self::with_extent(1.0)
    }
}

impl SceneConfig {
    pub fn with_extent(extent: f64) -> Self {
        Self { grid_n: 64, extent, control_grid: 4, amplitude: 0.08 * extent, height_scale: 0.02 * extent, tps_lambda: 0.0 }
    }

    /// A flat, undisplaced plane.
    pub fn flat(extent: f64) -> Self {
        Self { amplitude: 0.0, height_scale: 0.0, ..Self::with_extent(extent) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_n < 2 || self.control_grid < 2 {
            return Err(Error::invalid("grid and control grid need at least 2 points per side"));
        }
        if !(self.extent > 0.0 && self.extent.is_finite()) {
            return Err(Error::invalid("extent must be positive"));
        }
        if !(self.amplitude >= 0.0 && self.height_scale >= 0.0 && self.tps_lambda >= 0.0) {
            return Err(Error::invalid("amplitude, height scale and lambda must be non-negative"));
        }
        Ok(())
    }
}

/// Triangle mesh with per-vertex texture coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub positions: Vec<Vector3<f64>>,
    /// `(column, row)` fractions of the texture, both in `[0, 1]`.
    pub uvs: Vec<[f64; 2]>,
    /// Counter-clockwise seen from `+z`.
    pub triangles: Vec<[usize; 3]>,
}

impl Mesh {
    pub fn bounding_box(&self) -> (Vector3<f64>, Vector3<f64>) {
        let mut lo = Vector3::repeat(f64::INFINITY);
        let mut hi = Vector3::repeat(f64::NEG_INFINITY);
        for p in &self.positions {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }

    /// Area-weighted vertex normals.
    pub fn vertex_normals(&self) -> Vec<Vector3<f64>> {
        let mut normals = vec![Vector3::zeros(); self.positions.len()];
        for t in &self.triangles {
            let [a, b, c] = t.map(|i| self.positions[i]);
            let n = (b - a).cross(&(c - a));
            for &i in t {
                normals[i] += n;
            }
        }
        normals
            .into_iter()
            .map(|n| {
                let len = n.norm();
                if len > 0.0 {
                    n / len
                } else {
                    Vector3::z()
                }
            })
            .collect()
    }
}

/// A TPS-deformed plane carrying a material.
///
/// Grid vertex `(i, j)` (column `i`, row `j`) has `uv = (i/(n−1), j/(n−1))`
/// and sits at `x = e/2 − j·e/(n−1)`, `y = e/2 − i·e/(n−1)`: texture rows
/// run along `−x` and columns along `−y`, so a camera looking along `+x`
/// with `+z` up sees the texture upright.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneScene {
    pub mesh: Mesh,
    pub material: MaterialSet,
    pub lighting: LightingConfig,
    pub config: SceneConfig,
    pub tps: TpsSpec,
}

impl PlaneScene {
    /// Mesh displaced along its vertex normals by the height map.
    pub fn displaced_mesh(&self) -> Mesh {
        if self.config.height_scale == 0.0 {
            return self.mesh.clone();
        }
        let normals = self.mesh.vertex_normals();
        let n = self.material.resolution();
        let s = (n - 1) as f64;
        let positions = self
            .mesh
            .positions
            .iter()
            .zip(&self.mesh.uvs)
            .zip(normals)
            .map(|((p, uv), nrm)| {
                let h = self.material.height.sample_bilinear(uv[0] * s, uv[1] * s, 0, Boundary::Clamp);
                p + nrm * (h * self.config.height_scale)
            })
            .collect();
        Mesh { positions, uvs: self.mesh.uvs.clone(), triangles: self.mesh.triangles.clone() }
    }
}

pub fn build_plane_scene<R: Rng + ?Sized>(
    material: MaterialSet,
    config: SceneConfig,
    lighting: LightingConfig,
    rng: &mut R,
) -> Result<PlaneScene> {
    config.validate()?;
    lighting.validate()?;
    let e = config.extent;
    let c = config.control_grid;
    let control: Vec<[f64; 2]> = (0..c)
        .flat_map(|j| (0..c).map(move |i| [-e / 2.0 + e * i as f64 / (c - 1) as f64, -e / 2.0 + e * j as f64 / (c - 1) as f64]))
        .collect();
    let targets: Vec<f64> = control
        .iter()
        .map(|_| if config.amplitude > 0.0 { rng.random_range(-config.amplitude..=config.amplitude) } else { 0.0 })
        .collect();
    let model = tps_fit_scalar(&control, &targets, config.tps_lambda)?;

    let n = config.grid_n;
    let step = e / (n - 1) as f64;
    let mut positions = Vec::with_capacity(n * n);
    let mut uvs = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let x = e / 2.0 - j as f64 * step;
            let y = e / 2.0 - i as f64 * step;
            let z = if config.amplitude > 0.0 { model.eval([x, y])[0] } else { 0.0 };
            positions.push(Vector3::new(x, y, z));
            uvs.push([i as f64 / (n - 1) as f64, j as f64 / (n - 1) as f64]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * (n - 1) * (n - 1));
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let v00 = j * n + i;
            let v10 = v00 + 1;
            let v01 = v00 + n;
            let v11 = v01 + 1;
            triangles.push([v00, v01, v10]);
            triangles.push([v10, v01, v11]);
        }
    }
    Ok(PlaneScene { mesh: Mesh { positions, uvs, triangles }, material, lighting, config, tps: model.spec() })
}

/// Canonical maps rotated to the orientation in which a camera with view
/// azimuth `alpha` (and `+z` up) sees the plane: `−alpha` counter-clockwise.
pub fn aligned_ground_truth(alpha: f64, material: &MaterialSet, sampling: Sampling) -> Result<MaterialSet> {
    rotate_material_set(material, -alpha, sampling)
}
