//! Lens distortion correction maps and the approximations a streaming
//! hardware implementation can afford.
//!
//! - [`model`]: floating-point camera model and the dense reference map.
//! - [`fixedpoint`]: Q-format arithmetic and the per-pixel on-the-fly map.
//! - [`sampling`]: subsampled LUT with bilinear reconstruction.
//! - [`remap`]: image remapping, offline and through the line-buffer model.
//! - [`eval`]: geometric error, distortion sweeps, heatmaps.
//! - [`resources`]: operator and memory estimates per approach.
//! - [`io`]: configuration, image and map file formats.

pub mod error;
pub mod eval;
pub mod fixedpoint;
pub mod io;
pub mod model;
pub mod remap;
pub mod resources;
pub mod sampling;

pub use error::{Error, Result};
pub use model::{LensConfig, RemapField};
