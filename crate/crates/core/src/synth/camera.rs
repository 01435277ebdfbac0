use std::f64::consts::TAU;

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rectify::Intrinsics;
use crate::{Error, Result};

/// Camera placement in world units (z up).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub position: [f64; 3],
    pub target: [f64; 3],
    pub up_hint: [f64; 3],
}

impl CameraPose {
    pub fn new(position: [f64; 3], target: [f64; 3], up_hint: [f64; 3]) -> Result<Self> {
        let pose = Self { position, target, up_hint };
        pose.frame()?;
        Ok(pose)
    }

    /// Unit vector from the camera towards its target.
    pub fn view_vector(&self) -> Result<Vector3<f64>> {
        let v = Vector3::from(self.target) - Vector3::from(self.position);
        let n = v.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::invalid("camera position coincides with its target"));
        }
        Ok(v / n)
    }

    /// Orthonormal `(right, down, forward)` camera axes in world coordinates.
    pub fn frame(&self) -> Result<CameraFrame> {
        let forward = self.view_vector()?;
        let right = forward.cross(&Vector3::from(self.up_hint));
        let rn = right.norm();
        if rn < 1e-9 {
            return Err(Error::invalid("camera up hint is parallel to the view direction"));
        }
        let right = right / rn;
        let down = forward.cross(&right);
        Ok(CameraFrame { origin: Vector3::from(self.position), right, down, forward })
    }
}

/// World-to-camera transform: `X_c` right, `Y_c` down, `Z_c` forward.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraFrame {
    pub origin: Vector3<f64>,
    pub right: Vector3<f64>,
    pub down: Vector3<f64>,
    pub forward: Vector3<f64>,
}

impl CameraFrame {
    pub fn to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let d = p - self.origin;
        Vector3::new(d.dot(&self.right), d.dot(&self.down), d.dot(&self.forward))
    }

    /// Pixel coordinates and camera depth of a world point.
    pub fn project(&self, k: &Intrinsics, p: &Vector3<f64>) -> Option<(f64, f64, f64)> {
        let c = self.to_camera(p);
        if c.z <= 0.0 {
            return None;
        }
        Some((k.cx + k.fx * c.x / c.z, k.cy + k.fy * c.y / c.z, c.z))
    }

    /// World-space ray through a pixel, scaled so its forward component is 1.
    pub fn ray(&self, k: &Intrinsics, u: f64, v: f64) -> Vector3<f64> {
        self.right * ((u - k.cx) / k.fx) + self.down * ((v - k.cy) / k.fy) + self.forward
    }
}

/// Position uniform on the spherical cap `z > 0.1·R` of radius `R`, target
/// uniform in the ball of radius `r_target`, up hint `+z`.
pub fn sample_camera<R: Rng + ?Sized>(rng: &mut R, radius: f64, r_target: f64) -> Result<CameraPose> {
    if !(r_target >= 0.0 && radius > r_target && radius.is_finite()) {
        return Err(Error::invalid(format!("camera radius {radius} must exceed target radius {r_target} >= 0")));
    }
    loop {
        let z = rng.random_range(0.1..1.0) * radius;
        let phi = rng.random_range(0.0..TAU);
        let rho = (radius * radius - z * z).max(0.0).sqrt();
        let position = [rho * phi.cos(), rho * phi.sin(), z];
        let target = if r_target == 0.0 {
            [0.0; 3]
        } else {
            let tz: f64 = rng.random_range(-1.0..1.0);
            let tphi = rng.random_range(0.0..TAU);
            let tr = r_target * rng.random::<f64>().cbrt();
            let s = (1.0 - tz * tz).sqrt();
            [tr * s * tphi.cos(), tr * s * tphi.sin(), tr * tz]
        };
        let pose = CameraPose { position, target, up_hint: [0.0, 0.0, 1.0] };
        if pose.frame().is_ok() && view_azimuth(&pose).is_ok() {
            return Ok(pose);
        }
    }
}

/// `atan2(v_y, v_x)` of the view vector, in `(−π, π]`.
pub fn view_azimuth(pose: &CameraPose) -> Result<f64> {
    let v = pose.view_vector()?;
    if v.x.hypot(v.y) < 1e-12 {
        return Err(Error::UndefinedAzimuth);
    }
    Ok(v.y.atan2(v.x))
}
