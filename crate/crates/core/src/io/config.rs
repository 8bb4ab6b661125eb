use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CameraIntrinsics, DistortionCoefficients, LensConfig, RotationMatrix};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    image_width: usize,
    image_height: usize,
    intrinsics: CameraIntrinsics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    new_intrinsics: Option<CameraIntrinsics>,
    #[serde(default)]
    coeffs: DistortionCoefficients,
    /// Row-major; identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rotation: Option<Vec<f64>>,
}

/// Parses and validates a lens configuration. A missing `new_intrinsics`
/// reuses `intrinsics`; missing coefficients are zero.
pub fn parse_config(json: &str) -> Result<LensConfig> {
    let raw: RawConfig = serde_json::from_str(json)?;
    let rotation = match raw.rotation {
        None => RotationMatrix::identity(),
        Some(r) => {
            let r: [f64; 9] = r.as_slice().try_into().map_err(|_| {
                Error::config("rotation", format!("expected 9 numbers, got {}", r.len()))
            })?;
            RotationMatrix::from_rows([[r[0], r[1], r[2]], [r[3], r[4], r[5]], [r[6], r[7], r[8]]])?
        }
    };
    let cfg = LensConfig {
        image_width: raw.image_width,
        image_height: raw.image_height,
        intrinsics: raw.intrinsics,
        new_intrinsics: raw.new_intrinsics.unwrap_or(raw.intrinsics),
        coeffs: raw.coeffs,
        rotation,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<LensConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

pub fn config_to_json(cfg: &LensConfig) -> String {
    let raw = RawConfig {
        image_width: cfg.image_width,
        image_height: cfg.image_height,
        intrinsics: cfg.intrinsics,
        new_intrinsics: Some(cfg.new_intrinsics),
        coeffs: cfg.coeffs,
        rotation: Some(cfg.rotation.rows().iter().flatten().copied().collect()),
    };
    serde_json::to_string_pretty(&raw).expect("config serializes")
}
