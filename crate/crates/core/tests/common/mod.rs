//! Independent recomputations used as test oracles. Nothing here calls the
//! library's arithmetic; only plain configuration values cross over.

#![allow(dead_code)]

pub mod exact;
pub mod float;

use lensremap::model::{CameraIntrinsics, DistortionCoefficients, LensConfig, RotationMatrix};

/// 32x24 frame with a strong lens, for bit-exact fixed-point comparisons.
pub fn small_frame(factor: f64) -> LensConfig {
    let cam = CameraIntrinsics::new(25.0, 25.0, 15.5, 11.5).unwrap();
    let mut cfg = LensConfig::identity(32, 24, cam);
    cfg.coeffs = DistortionCoefficients::radial_tangential(-0.05, 0.01, 0.0, 0.001, -0.001);
    cfg.with_distortion_factor(factor).unwrap()
}

/// `small_frame` with a different output camera, a rotation and a rational lens.
pub fn small_frame_rectifying() -> LensConfig {
    let mut cfg = small_frame(3.0);
    cfg.new_intrinsics = CameraIntrinsics::new(24.0, 24.5, 16.0, 11.0).unwrap();
    cfg.rotation = RotationMatrix::about_axis([0.3, 1.0, -0.2], 0.04).unwrap();
    cfg.coeffs.k4 = 0.02;
    cfg.coeffs.k5 = -0.003;
    cfg
}
