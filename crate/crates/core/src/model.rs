//! Floating-point camera model and the dense reference map.
//!
//! The mapping runs from output (corrected) pixels back to source (distorted)
//! pixels:
//!
//! ```text
//! (x, y)    = ((u - cx') / fx', (v - cy') / fy')        output camera
//! [X Y W]^T = R^T [x y 1]^T,  (x', y') = (X/W, Y/W)
//! r^2       = x'^2 + y'^2
//! radial    = (1 + k1 r^2 + k2 r^4 + k3 r^6) / (1 + k4 r^2 + k5 r^4 + k6 r^6)
//! x''       = x' radial + 2 p1 x' y' + p2 (r^2 + 2 x'^2)
//! y''       = y' radial + p1 (r^2 + 2 y'^2) + 2 p2 x' y'
//! (sx, sy)  = (fx x'' + cx, fy y'' + cy)                 source camera
//! ```

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROTATION_TOL: f64 = 1e-9;
const DEGENERATE_TOL: f64 = 1e-12;

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        let cam = CameraIntrinsics { fx, fy, cx, cy };
        cam.validate("intrinsics")?;
        Ok(cam)
    }

    pub(crate) fn validate(&self, field: &str) -> Result<()> {
        for (name, value) in [("fx", self.fx), ("fy", self.fy), ("cx", self.cx), ("cy", self.cy)] {
            if !value.is_finite() {
                return Err(Error::config(format!("{field}.{name}"), "must be finite"));
            }
        }
        if self.fx <= 0.0 {
            return Err(Error::config(format!("{field}.fx"), "must be positive"));
        }
        if self.fy <= 0.0 {
            return Err(Error::config(format!("{field}.fy"), "must be positive"));
        }
        Ok(())
    }
}

/// Radial (k1..k3), tangential (p1, p2) and rational-denominator (k4..k6)
/// coefficients. The default is the distortion-free lens.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistortionCoefficients {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub p1: f64,
    pub p2: f64,
    pub k4: f64,
    pub k5: f64,
    pub k6: f64,
}

impl DistortionCoefficients {
    pub fn radial_tangential(k1: f64, k2: f64, k3: f64, p1: f64, p2: f64) -> Self {
        DistortionCoefficients {
            k1,
            k2,
            k3,
            p1,
            p2,
            ..Default::default()
        }
    }

    /// True when any of k4..k6 is non-zero, i.e. the radial term needs a division.
    pub fn is_rational(&self) -> bool {
        self.k4 != 0.0 || self.k5 != 0.0 || self.k6 != 0.0
    }

    fn as_array(&self) -> [(&'static str, f64); 8] {
        [
            ("k1", self.k1),
            ("k2", self.k2),
            ("k3", self.k3),
            ("p1", self.p1),
            ("p2", self.p2),
            ("k4", self.k4),
            ("k5", self.k5),
            ("k6", self.k6),
        ]
    }

    pub(crate) fn validate(&self) -> Result<()> {
        for (name, value) in self.as_array() {
            if !value.is_finite() {
                return Err(Error::config(format!("coeffs.{name}"), "must be finite"));
            }
        }
        Ok(())
    }
}

/// Proper rotation (orthonormal, det = +1) applied to the output camera frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix {
    r: [[f64; 3]; 3],
}

impl Default for RotationMatrix {
    fn default() -> Self {
        Self::identity()
    }
}

impl RotationMatrix {
    pub const fn identity() -> Self {
        RotationMatrix {
            r: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn from_rows(r: [[f64; 3]; 3]) -> Result<Self> {
        if r.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::config("rotation", "entries must be finite"));
        }
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - expected).abs());
            }
        }
        if worst > ROTATION_TOL {
            return Err(Error::config(
                "rotation",
                format!("not orthonormal (max |R^T R - I| = {worst:e})"),
            ));
        }
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        if (det - 1.0).abs() > ROTATION_TOL {
            return Err(Error::config("rotation", format!("determinant {det} is not +1")));
        }
        Ok(RotationMatrix { r })
    }

    /// Rotation by `angle` radians about `axis` (Rodrigues' formula).
    pub fn about_axis(axis: [f64; 3], angle: f64) -> Result<Self> {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidParameter("rotation axis must be non-zero".into()));
        }
        let [x, y, z] = axis.map(|a| a / norm);
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        Self::from_rows([
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ])
    }

    pub fn rows(&self) -> &[[f64; 3]; 3] {
        &self.r
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }
}

/// One correction problem: frame size, source and output cameras, lens and rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct LensConfig {
    pub image_width: usize,
    pub image_height: usize,
    pub intrinsics: CameraIntrinsics,
    pub new_intrinsics: CameraIntrinsics,
    pub coeffs: DistortionCoefficients,
    pub rotation: RotationMatrix,
}

impl LensConfig {
    pub fn validate(&self) -> Result<()> {
        if self.image_width < 2 {
            return Err(Error::config("image_width", "must be at least 2"));
        }
        if self.image_height < 2 {
            return Err(Error::config("image_height", "must be at least 2"));
        }
        self.intrinsics.validate("intrinsics")?;
        self.new_intrinsics.validate("new_intrinsics")?;
        self.coeffs.validate()
    }

    /// Distortion-free configuration with identical input and output cameras.
    pub fn identity(width: usize, height: usize, cam: CameraIntrinsics) -> Self {
        LensConfig {
            image_width: width,
            image_height: height,
            intrinsics: cam,
            new_intrinsics: cam,
            coeffs: DistortionCoefficients::default(),
            rotation: RotationMatrix::identity(),
        }
    }

    /// The 640x480 calibration used across tests and examples: fx = fy = 500,
    /// centred principal point, mild barrel lens with a little decentering.
    pub fn base_fixture() -> Self {
        let cam = CameraIntrinsics {
            fx: 500.0,
            fy: 500.0,
            cx: 319.5,
            cy: 239.5,
        };
        LensConfig {
            coeffs: DistortionCoefficients::radial_tangential(-0.05, 0.01, 0.0, 0.001, -0.001),
            ..Self::identity(640, 480, cam)
        }
    }

    /// Same configuration with the primary coefficients scaled by `factor`.
    pub fn with_distortion_factor(&self, factor: f64) -> Result<Self> {
        Ok(LensConfig {
            coeffs: scale_distortion(&self.coeffs, factor)?,
            ..self.clone()
        })
    }
}

pub fn normalize_pixel(u: f64, v: f64, cam: &CameraIntrinsics) -> (f64, f64) {
    ((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy)
}

/// Applies `R^T` to the ray `(x, y, 1)` and dehomogenizes.
pub fn apply_inverse_rotation(x: f64, y: f64, rot: &RotationMatrix) -> Result<(f64, f64)> {
    let r = &rot.r;
    let big_x = r[0][0] * x + r[1][0] * y + r[2][0];
    let big_y = r[0][1] * x + r[1][1] * y + r[2][1];
    let w = r[0][2] * x + r[1][2] * y + r[2][2];
    if w.abs() < DEGENERATE_TOL {
        return Err(Error::RotationToInfinity { w });
    }
    Ok((big_x / w, big_y / w))
}

/// Offset `distort(x, y) - (x, y)`, computed without forming `1 + ...` so it
/// is exactly zero for a distortion-free lens.
pub fn distortion_offset(x: f64, y: f64, c: &DistortionCoefficients) -> Result<(f64, f64)> {
    let r2 = x * x + y * y;
    let numerator = r2 * (c.k1 + r2 * (c.k2 + r2 * c.k3));
    let den_excess = r2 * (c.k4 + r2 * (c.k5 + r2 * c.k6));
    let denominator = 1.0 + den_excess;
    if denominator <= DEGENERATE_TOL {
        return Err(Error::DegenerateDistortion { denominator });
    }
    // radial factor minus one
    let excess = if c.is_rational() {
        (numerator - den_excess) / denominator
    } else {
        numerator
    };
    let xy = x * y;
    Ok((
        x * excess + 2.0 * c.p1 * xy + c.p2 * (r2 + 2.0 * x * x),
        y * excess + c.p1 * (r2 + 2.0 * y * y) + 2.0 * c.p2 * xy,
    ))
}

pub fn distort(x: f64, y: f64, c: &DistortionCoefficients) -> Result<(f64, f64)> {
    let (ox, oy) = distortion_offset(x, y, c)?;
    Ok((x + ox, y + oy))
}

pub fn project(x: f64, y: f64, cam: &CameraIntrinsics) -> (f64, f64) {
    (cam.fx * x + cam.cx, cam.fy * y + cam.cy)
}

/// Source coordinates of a single output pixel.
///
/// Without rotation the projection is taken relative to the pixel,
/// `u + (fx/fx' - 1)(u - cx') + (cx - cx') + fx * offset_x`, which returns
/// the pixel grid exactly when both cameras agree and the lens is ideal.
pub fn map_point(u: f64, v: f64, cfg: &LensConfig) -> Result<(f64, f64)> {
    let (new, cam) = (&cfg.new_intrinsics, &cfg.intrinsics);
    let (x, y) = normalize_pixel(u, v, new);
    if cfg.rotation.is_identity() {
        let (ox, oy) = distortion_offset(x, y, &cfg.coeffs)?;
        let sx = u + ((cam.fx / new.fx - 1.0) * (u - new.cx) + (cam.cx - new.cx) + cam.fx * ox);
        let sy = v + ((cam.fy / new.fy - 1.0) * (v - new.cy) + (cam.cy - new.cy) + cam.fy * oy);
        return Ok((sx, sy));
    }
    let (x, y) = apply_inverse_rotation(x, y, &cfg.rotation)?;
    let (x, y) = distort(x, y, &cfg.coeffs)?;
    Ok(project(x, y, cam))
}

/// Returns coefficients with k1..k3, p1, p2 multiplied by `factor`.
pub fn scale_distortion(c: &DistortionCoefficients, factor: f64) -> Result<DistortionCoefficients> {
    if !(factor.is_finite() && factor >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "distortion factor must be finite and >= 0, got {factor}"
        )));
    }
    Ok(DistortionCoefficients {
        k1: c.k1 * factor,
        k2: c.k2 * factor,
        k3: c.k3 * factor,
        p1: c.p1 * factor,
        p2: c.p2 * factor,
        ..*c
    })
}

/// Dense per-pixel map holding absolute source coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct RemapField {
    width: usize,
    height: usize,
    map_x: Vec<f64>,
    map_y: Vec<f64>,
}

/// Extrema of the relative displacement `map - pixel` over a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacementBounds {
    pub min_dx: f64,
    pub max_dx: f64,
    pub min_dy: f64,
    pub max_dy: f64,
}

impl RemapField {
    pub fn new(width: usize, height: usize, map_x: Vec<f64>, map_y: Vec<f64>) -> Result<Self> {
        let n = width * height;
        if map_x.len() != n || map_y.len() != n {
            return Err(Error::InvalidParameter(format!(
                "map planes hold {} and {} values, expected {n}",
                map_x.len(),
                map_y.len()
            )));
        }
        if map_x.iter().chain(&map_y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("map values must be finite".into()));
        }
        Ok(RemapField {
            width,
            height,
            map_x,
            map_y,
        })
    }

    pub fn identity(width: usize, height: usize) -> Self {
        let mut map_x = Vec::with_capacity(width * height);
        let mut map_y = Vec::with_capacity(width * height);
        for v in 0..height {
            for u in 0..width {
                map_x.push(u as f64);
                map_y.push(v as f64);
            }
        }
        RemapField {
            width,
            height,
            map_x,
            map_y,
        }
    }

    /// Builds a field by evaluating `f` at every pixel, rows in parallel.
    /// The first failing pixel in row-major order is reported.
    pub fn try_from_fn<F>(width: usize, height: usize, f: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> Result<(f64, f64)> + Sync,
    {
        let rows: Vec<Result<Vec<(f64, f64)>>> = (0..height)
            .into_par_iter()
            .map(|v| {
                (0..width)
                    .map(|u| f(u, v).map_err(|e| e.at_pixel(u, v)))
                    .collect()
            })
            .collect();
        let mut map_x = Vec::with_capacity(width * height);
        let mut map_y = Vec::with_capacity(width * height);
        for row in rows {
            for (x, y) in row? {
                map_x.push(x);
                map_y.push(y);
            }
        }
        Self::new(width, height, map_x, map_y)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn map_x(&self) -> &[f64] {
        &self.map_x
    }

    pub fn map_y(&self) -> &[f64] {
        &self.map_y
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> (f64, f64) {
        let i = v * self.width + u;
        (self.map_x[i], self.map_y[i])
    }

    /// Relative displacement `(map_x - u, map_y - v)`.
    #[inline]
    pub fn relative(&self, u: usize, v: usize) -> (f64, f64) {
        let (x, y) = self.get(u, v);
        (x - u as f64, y - v as f64)
    }

    pub fn displacement_bounds(&self) -> DisplacementBounds {
        let mut b = DisplacementBounds {
            min_dx: f64::INFINITY,
            max_dx: f64::NEG_INFINITY,
            min_dy: f64::INFINITY,
            max_dy: f64::NEG_INFINITY,
        };
        for v in 0..self.height {
            for u in 0..self.width {
                let (dx, dy) = self.relative(u, v);
                b.min_dx = b.min_dx.min(dx);
                b.max_dx = b.max_dx.max(dx);
                b.min_dy = b.min_dy.min(dy);
                b.max_dy = b.max_dy.max(dy);
            }
        }
        b
    }
}

pub fn displacement_bounds(map: &RemapField) -> DisplacementBounds {
    map.displacement_bounds()
}

/// Dense floating-point reference map for `cfg`.
pub fn build_reference_map(cfg: &LensConfig) -> Result<RemapField> {
    cfg.validate()?;
    RemapField::try_from_fn(cfg.image_width, cfg.image_height, |u, v| {
        map_point(u as f64, v as f64, cfg)
    })
}
