//! Thin-plate splines in the plane with kernel `U(r) = r² log r²`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::imaging::{Boundary, Image, Mask};
use crate::{Error, Result};

/// Radial kernel, `U(0) = 0`.
pub fn kernel(r: f64) -> f64 {
    let r2 = r * r;
    if r2 <= 0.0 {
        0.0
    } else {
        r2 * r2.ln()
    }
}

fn kernel_between(a: [f64; 2], b: [f64; 2]) -> f64 {
    kernel(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt())
}

/// A fitted spline mapping 2D points to `dim`-dimensional values.
#[derive(Clone, Debug, PartialEq)]
pub struct TpsModel {
    control_points: Vec<[f64; 2]>,
    targets: Vec<Vec<f64>>,
    /// `n × dim` radial coefficients.
    weights: DMatrix<f64>,
    /// `3 × dim`: constant, `x` and `y` coefficients.
    affine: DMatrix<f64>,
    lambda: f64,
}

/// Serializable form of a model: the data it was fitted from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TpsSpec {
    pub control_points: Vec<[f64; 2]>,
    pub targets: Vec<Vec<f64>>,
    pub lambda: f64,
}

impl TpsSpec {
    pub fn fit(&self) -> Result<TpsModel> {
        fit_rows(&self.control_points, &self.targets, self.lambda)
    }
}

impl TpsModel {
    /// The identity map of the plane.
    pub fn identity() -> Self {
        let mut affine = DMatrix::zeros(3, 2);
        affine[(1, 0)] = 1.0;
        affine[(2, 1)] = 1.0;
        Self { control_points: Vec::new(), targets: Vec::new(), weights: DMatrix::zeros(0, 2), affine, lambda: 0.0 }
    }

    pub fn control_points(&self) -> &[[f64; 2]] {
        &self.control_points
    }

    pub fn targets(&self) -> &[Vec<f64>] {
        &self.targets
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn affine(&self) -> &DMatrix<f64> {
        &self.affine
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.affine.ncols()
    }

    pub fn spec(&self) -> TpsSpec {
        TpsSpec { control_points: self.control_points.clone(), targets: self.targets.clone(), lambda: self.lambda }
    }

    pub fn max_abs_weight(&self) -> f64 {
        self.weights.iter().fold(0.0, |m, w| m.max(w.abs()))
    }

    /// Largest absolute value of `Σw`, `Σw·x`, `Σw·y` over output dimensions.
    pub fn side_condition_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for d in 0..self.dim() {
            let (mut s, mut sx, mut sy) = (0.0, 0.0, 0.0);
            for (i, c) in self.control_points.iter().enumerate() {
                let w = self.weights[(i, d)];
                s += w;
                sx += w * c[0];
                sy += w * c[1];
            }
            worst = worst.max(s.abs()).max(sx.abs()).max(sy.abs());
        }
        worst
    }

    /// `Σ_d w_dᵀ K w_d`.
    pub fn bending_energy(&self) -> f64 {
        let n = self.control_points.len();
        let mut e = 0.0;
        for d in 0..self.dim() {
            for i in 0..n {
                for j in 0..n {
                    e += self.weights[(i, d)]
                        * self.weights[(j, d)]
                        * kernel_between(self.control_points[i], self.control_points[j]);
                }
            }
        }
        e
    }

    pub fn eval_into(&self, p: [f64; 2], out: &mut [f64]) {
        for (d, o) in out.iter_mut().enumerate().take(self.dim()) {
            *o = self.affine[(0, d)] + self.affine[(1, d)] * p[0] + self.affine[(2, d)] * p[1];
        }
        for (i, c) in self.control_points.iter().enumerate() {
            let u = kernel_between(p, *c);
            if u != 0.0 {
                for (d, o) in out.iter_mut().enumerate().take(self.dim()) {
                    *o += self.weights[(i, d)] * u;
                }
            }
        }
    }

    pub fn eval(&self, p: [f64; 2]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(p, &mut out);
        out
    }

    /// Evaluation of a planar (two-output) model.
    pub fn eval_point(&self, p: [f64; 2]) -> [f64; 2] {
        let mut out = [0.0; 2];
        self.eval_into(p, &mut out);
        out
    }
}

fn check_points(src: &[[f64; 2]]) -> Result<()> {
    if src.len() < 3 {
        return Err(Error::invalid("a thin-plate spline needs at least 3 control points"));
    }
    if src.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("control points must be finite"));
    }
    let scale = src.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
    for i in 0..src.len() {
        for j in i + 1..src.len() {
            let d = ((src[i][0] - src[j][0]).powi(2) + (src[i][1] - src[j][1]).powi(2)).sqrt();
            if d <= 1e-12 * scale {
                return Err(Error::SingularSystem(format!("control points {i} and {j} coincide")));
            }
        }
    }
    let n = src.len() as f64;
    let (mx, my) = (src.iter().map(|p| p[0]).sum::<f64>() / n, src.iter().map(|p| p[1]).sum::<f64>() / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in src {
        let (dx, dy) = (p[0] - mx, p[1] - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let tr = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    let lmin = 0.5 * (tr - (tr * tr - 4.0 * det).max(0.0).sqrt());
    if lmin <= 1e-12 * tr {
        return Err(Error::SingularSystem("control points are collinear".into()));
    }
    Ok(())
}

fn fit_rows(src: &[[f64; 2]], dst: &[Vec<f64>], lambda: f64) -> Result<TpsModel> {
    if src.len() != dst.len() {
        return Err(Error::DimensionMismatch(format!("{} control points but {} targets", src.len(), dst.len())));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid("lambda must be finite and non-negative"));
    }
    check_points(src)?;
    let dim = dst[0].len();
    if dim == 0 || dst.iter().any(|t| t.len() != dim) {
        return Err(Error::DimensionMismatch("targets must share a positive dimension".into()));
    }
    let n = src.len();
    let mut a = DMatrix::zeros(n + 3, n + 3);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = kernel_between(src[i], src[j]);
        }
        a[(i, i)] += lambda;
        let row = [1.0, src[i][0], src[i][1]];
        for (k, v) in row.iter().enumerate() {
            a[(i, n + k)] = *v;
            a[(n + k, i)] = *v;
        }
    }
    let mut b = DMatrix::zeros(n + 3, dim);
    for (i, t) in dst.iter().enumerate() {
        for (d, v) in t.iter().enumerate() {
            b[(i, d)] = *v;
        }
    }
    let sol = a.lu().solve(&b).ok_or_else(|| Error::SingularSystem("thin-plate spline system is singular".into()))?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem("thin-plate spline system is ill-conditioned".into()));
    }
    Ok(TpsModel {
        control_points: src.to_vec(),
        targets: dst.to_vec(),
        weights: sol.rows(0, n).into_owned(),
        affine: sol.rows(n, 3).into_owned(),
        lambda,
    })
}

/// Fits a planar map `src_i → dst_i`.
pub fn tps_fit(src: &[[f64; 2]], dst: &[[f64; 2]], lambda: f64) -> Result<TpsModel> {
    let rows: Vec<Vec<f64>> = dst.iter().map(|p| p.to_vec()).collect();
    fit_rows(src, &rows, lambda)
}

/// Fits a scalar field `src_i → dst_i`.
pub fn tps_fit_scalar(src: &[[f64; 2]], dst: &[f64], lambda: f64) -> Result<TpsModel> {
    let rows: Vec<Vec<f64>> = dst.iter().map(|v| vec![*v]).collect();
    fit_rows(src, &rows, lambda)
}

pub fn tps_eval(model: &TpsModel, points: &[[f64; 2]]) -> Vec<Vec<f64>> {
    points.iter().map(|p| model.eval(*p)).collect()
}

/// Backward warp: `output(p) = image(f(p))` with bilinear sampling. Pixels
/// whose source falls outside the image are zero and unset in the mask.
pub fn tps_warp_image(image: &Image, model: &TpsModel) -> Result<(Image, Mask)> {
    if model.dim() != 2 {
        return Err(Error::invalid("image warping needs a planar thin-plate spline"));
    }
    let (w, h, ch) = (image.width(), image.height(), image.channels());
    let tol = 1e-9;
    let rows: Vec<(Vec<f32>, Vec<bool>)> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut vals = vec![0.0f32; w * ch];
            let mut valid = vec![false; w];
            for x in 0..w {
                let [sx, sy] = model.eval_point([x as f64, y as f64]);
                let inside = sx >= -tol && sy >= -tol && sx <= (w - 1) as f64 + tol && sy <= (h - 1) as f64 + tol;
                if !inside {
                    continue;
                }
                valid[x] = true;
                for c in 0..ch {
                    vals[c * w + x] = image.sample_bilinear(sx, sy, c, Boundary::Clamp) as f32;
                }
            }
            (vals, valid)
        })
        .collect();
    let mut out = Image::filled(w, h, ch, 0.0)?.with_color_space(image.color_space);
    let mut mask = Vec::with_capacity(w * h);
    for (y, (vals, valid)) in rows.into_iter().enumerate() {
        for c in 0..ch {
            for x in 0..w {
                out.set(x, y, c, vals[c * w + x]);
            }
        }
        mask.extend(valid);
    }
    Ok((out, Mask::new(w, h, mask)?))
}
