use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::camera::{CameraFrame, CameraPose};
use super::scene::{Mesh, PlaneScene};
use crate::imaging::{decode_normal, Boundary, ColorSpace, DepthMap, Image, Mask};
use crate::rectify::Intrinsics;
use crate::{Error, Result};

const SHININESS_EPS: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct RenderOutput {
    pub rgb: Image,
    pub mask: Mask,
    /// Camera depth min-max normalized over the mask; zero outside.
    pub depth: DepthMap,
    /// Camera-space `Z_c` per pixel, `+∞` where nothing was hit.
    pub raw_depth: Vec<f64>,
    pub raw_depth_range: [f64; 2],
    pub pose: CameraPose,
    pub intrinsics: Intrinsics,
}

/// Blinn-Phong exponent for a roughness value.
pub fn shininess(roughness: f64) -> f64 {
    (2.0 / (roughness.powi(4) + SHININESS_EPS) - 2.0).max(0.0)
}

#[derive(Clone, Copy)]
struct Fragment {
    tri: usize,
    /// Perspective-correct barycentric weights.
    weights: [f64; 3],
}

struct FaceFrame {
    tangent: Vector3<f64>,
    bitangent: Vector3<f64>,
    normal: Vector3<f64>,
}

fn face_frame(mesh: &Mesh, t: &[usize; 3]) -> FaceFrame {
    let [p0, p1, p2] = t.map(|i| mesh.positions[i]);
    let [t0, t1, t2] = t.map(|i| mesh.uvs[i]);
    let (e1, e2) = (p1 - p0, p2 - p0);
    let normal = e1.cross(&e2).normalize();
    let (du1, dv1, du2, dv2) = (t1[0] - t0[0], t1[1] - t0[1], t2[0] - t0[0], t2[1] - t0[1]);
    let det = du1 * dv2 - du2 * dv1;
    let dp_du = (e1 * dv2 - e2 * dv1) / det;
    let tangent = (dp_du - normal * dp_du.dot(&normal)).normalize();
    // tangent-space +Y points towards texture row 0
    let bitangent = normal.cross(&tangent);
    FaceFrame { tangent, bitangent, normal }
}

/// Renders a scene with a z-buffer and perspective-correct interpolation.
pub fn rasterize(scene: &PlaneScene, pose: &CameraPose, k: &Intrinsics, out_w: usize, out_h: usize) -> Result<RenderOutput> {
    k.validate()?;
    scene.lighting.validate()?;
    if out_w == 0 || out_h == 0 {
        return Err(Error::invalid("render size must be positive"));
    }
    let frame = pose.frame()?;
    let mesh = scene.displaced_mesh();
    let (lo, hi) = mesh.bounding_box();
    let cam = frame.origin;
    if (0..3).all(|a| cam[a] >= lo[a] && cam[a] <= hi[a]) {
        return Err(Error::Render("camera lies inside the mesh bounding box".into()));
    }
    let projected: Vec<(f64, f64, f64)> = mesh
        .positions
        .iter()
        .map(|p| frame.project(k, p).filter(|v| v.2 > 1e-6))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::Render("mesh extends behind the camera".into()))?;

    let (zbuf, frags) = scan(&mesh, &projected, out_w, out_h);
    if frags.iter().all(Option::is_none) {
        return Err(Error::Render("mesh covers no pixels".into()));
    }
    let faces: Vec<FaceFrame> = mesh.triangles.iter().map(|t| face_frame(&mesh, t)).collect();
    let rgb = shade(scene, &mesh, &faces, &frame, &frags, out_w, out_h)?;

    let mask = Mask::new(out_w, out_h, frags.iter().map(Option::is_some).collect())?;
    let (zmin, zmax) =
        zbuf.iter().filter(|z| z.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &z| (a.min(z), b.max(z)));
    // spans at rounding level would otherwise be stretched onto [0, 1]
    let depth = if zmax - zmin <= 1e-12 * zmax {
        DepthMap::constant(out_w, out_h, 0.0)?
    } else {
        DepthMap::from_unnormalized(out_w, out_h, &zbuf)?
    };
    Ok(RenderOutput { rgb, mask, depth, raw_depth: zbuf, raw_depth_range: [zmin, zmax], pose: *pose, intrinsics: *k })
}

fn scan(mesh: &Mesh, projected: &[(f64, f64, f64)], w: usize, h: usize) -> (Vec<f64>, Vec<Option<Fragment>>) {
    let mut zbuf = vec![f64::INFINITY; w * h];
    let mut frags: Vec<Option<Fragment>> = vec![None; w * h];
    for (ti, t) in mesh.triangles.iter().enumerate() {
        let [a, b, c] = t.map(|i| projected[i]);
        let area = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
        if area.abs() < 1e-12 {
            continue;
        }
        let x0 = a.0.min(b.0).min(c.0).ceil().max(0.0);
        let x1 = a.0.max(b.0).max(c.0).floor().min(w as f64 - 1.0);
        let y0 = a.1.min(b.1).min(c.1).ceil().max(0.0);
        let y1 = a.1.max(b.1).max(c.1).floor().min(h as f64 - 1.0);
        if x0 > x1 || y0 > y1 {
            continue;
        }
        let inv_z = [1.0 / a.2, 1.0 / b.2, 1.0 / c.2];
        let flat_z = (a.2 == b.2 && b.2 == c.2).then_some(a.2);
        for py in y0 as usize..=y1 as usize {
            let y = py as f64;
            for px in x0 as usize..=x1 as usize {
                let x = px as f64;
                let w0 = ((b.0 - x) * (c.1 - y) - (b.1 - y) * (c.0 - x)) / area;
                let w1 = ((c.0 - x) * (a.1 - y) - (c.1 - y) * (a.0 - x)) / area;
                let w2 = 1.0 - w0 - w1;
                if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                    continue;
                }
                let q = [w0 * inv_z[0], w1 * inv_z[1], w2 * inv_z[2]];
                let s = q[0] + q[1] + q[2];
                let z = flat_z.unwrap_or(1.0 / s);
                let i = py * w + px;
                if z < zbuf[i] {
                    zbuf[i] = z;
                    frags[i] = Some(Fragment { tri: ti, weights: [q[0] / s, q[1] / s, q[2] / s] });
                }
            }
        }
    }
    (zbuf, frags)
}

fn shade(
    scene: &PlaneScene,
    mesh: &Mesh,
    faces: &[FaceFrame],
    frame: &CameraFrame,
    frags: &[Option<Fragment>],
    w: usize,
    h: usize,
) -> Result<Image> {
    let mat = &scene.material;
    let light = &scene.lighting;
    let l = Vector3::from(light.light_dir);
    let s = (mat.resolution() - 1) as f64;
    let rows: Vec<Result<Vec<[f32; 3]>>> = (0..h)
        .into_par_iter()
        .map(|y| {
            (0..w)
                .map(|x| {
                    let Some(f) = frags[y * w + x] else { return Ok([0.0; 3]) };
                    let t = mesh.triangles[f.tri];
                    let mut uv = [0.0; 2];
                    let mut p = Vector3::zeros();
                    for (corner, wgt) in t.iter().zip(f.weights) {
                        uv[0] += wgt * mesh.uvs[*corner][0];
                        uv[1] += wgt * mesh.uvs[*corner][1];
                        p += mesh.positions[*corner] * wgt;
                    }
                    let (tx, ty) = (uv[0] * s, uv[1] * s);
                    let albedo = [0, 1, 2].map(|c| mat.albedo.sample_bilinear(tx, ty, c, Boundary::Clamp));
                    if light.light_intensity == 0.0 {
                        return Ok(albedo.map(|a| (light.ambient * a).clamp(0.0, 1.0) as f32));
                    }
                    let enc = [0, 1, 2].map(|c| mat.normal.encoded().sample_bilinear(tx, ty, c, Boundary::Clamp) as f32);
                    let tn = decode_normal(enc)?;
                    let ff = &faces[f.tri];
                    let n = (ff.tangent * tn[0] + ff.bitangent * tn[1] + ff.normal * tn[2]).normalize();
                    let rough = mat.roughness.sample_bilinear(tx, ty, 0, Boundary::Clamp);
                    let ndl = n.dot(&l).max(0.0);
                    let view = (frame.origin - p).normalize();
                    let half = (l + view).normalize();
                    let spec = if ndl > 0.0 {
                        light.specular_strength * light.light_intensity * n.dot(&half).max(0.0).powf(shininess(rough))
                    } else {
                        0.0
                    };
                    Ok(albedo.map(|a| (light.ambient * a + light.light_intensity * ndl * a + spec).clamp(0.0, 1.0) as f32))
                })
                .collect()
        })
        .collect();
    let mut data = vec![0.0f32; 3 * w * h];
    for (y, row) in rows.into_iter().enumerate() {
        for (x, px) in row?.into_iter().enumerate() {
            for c in 0..3 {
                data[(c * h + y) * w + x] = px[c];
            }
        }
    }
    Ok(Image::new(w, h, 3, data)?.with_color_space(ColorSpace::Display))
}

/// Summary of a render suitable for manifests.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderStats {
    pub covered_pixels: usize,
    pub raw_depth_range: [f64; 2],
}

impl RenderOutput {
    pub fn stats(&self) -> RenderStats {
        RenderStats { covered_pixels: self.mask.count(), raw_depth_range: self.raw_depth_range }
    }
}
