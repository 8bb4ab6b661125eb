//! Image remapping `dst(u, v) = src(map_x(u, v), map_y(u, v))` with bilinear
//! pixel interpolation, offline or through the streaming line-buffer model.

mod stream;

pub use stream::{bank_index, required_lines, stream_remap, stream_remap_with, BufferSizing, LineBuffer};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fixedpoint::{OnTheFlyMapper, QFormat};
use crate::model::{LensConfig, RemapField};
use crate::sampling::SubsampledMap;

/// 8-bit image, row-major, channels interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidParameter(format!(
                "images have 1 or 3 channels, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidParameter(format!(
                "{width}x{height}x{channels} image needs {} bytes, got {}",
                width * height * channels,
                data.len()
            )));
        }
        Ok(Image {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn from_fn<F>(width: usize, height: usize, channels: usize, f: F) -> Result<Self>
    where
        F: Fn(usize, usize, usize) -> u8,
    {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    pub fn row(&self, y: usize) -> &[u8] {
        let stride = self.width * self.channels;
        &self.data[y * stride..(y + 1) * stride]
    }
}

/// Value used for interpolation taps that fall outside the source image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BorderPolicy {
    Constant(u8),
    Clamp,
}

impl Default for BorderPolicy {
    fn default() -> Self {
        BorderPolicy::Constant(0)
    }
}

/// Integer cell and fractional offsets of a source coordinate. `None` for
/// non-finite coordinates, which read as all-border.
#[inline]
pub(crate) fn split_coord(sx: f64, sy: f64) -> Option<(i64, i64, f64, f64)> {
    if !sx.is_finite() || !sy.is_finite() {
        return None;
    }
    let (fx, fy) = (sx.floor(), sy.floor());
    Some((fx as i64, fy as i64, sx - fx, sy - fy))
}

/// Taps in order `(i, j)`, `(i+1, j)`, `(i, j+1)`, `(i+1, j+1)`.
#[inline]
pub(crate) fn blend(taps: &[[u8; 3]; 4], a: f64, b: f64, channels: usize) -> [u8; 3] {
    let w = [(1.0 - a) * (1.0 - b), a * (1.0 - b), (1.0 - a) * b, a * b];
    let mut out = [0u8; 3];
    for (c, o) in out.iter_mut().enumerate().take(channels) {
        let acc: f64 = taps.iter().zip(w).map(|(t, w)| w * t[c] as f64).sum();
        *o = acc.round().clamp(0.0, 255.0) as u8;
    }
    out
}

/// Clamps `(x, y)` into the image, or `None` when the border is constant and
/// the tap is outside.
#[inline]
pub(crate) fn resolve_tap(src: &Image, x: i64, y: i64, border: BorderPolicy) -> Option<(usize, usize)> {
    let (w, h) = (src.width as i64, src.height as i64);
    if (0..w).contains(&x) && (0..h).contains(&y) {
        return Some((x as usize, y as usize));
    }
    match border {
        BorderPolicy::Constant(_) => None,
        BorderPolicy::Clamp => Some((x.clamp(0, w - 1) as usize, y.clamp(0, h - 1) as usize)),
    }
}

#[inline]
pub(crate) fn border_value(border: BorderPolicy) -> [u8; 3] {
    match border {
        BorderPolicy::Constant(c) => [c; 3],
        BorderPolicy::Clamp => [0; 3],
    }
}

#[inline]
pub(crate) fn tap_offsets() -> [(i64, i64); 4] {
    [(0, 0), (1, 0), (0, 1), (1, 1)]
}

/// Bilinear sample of `src` at real coordinates. Channels past
/// `src.channels()` are zero.
pub fn bilinear_fetch(src: &Image, sx: f64, sy: f64, border: BorderPolicy) -> [u8; 3] {
    let Some((i, j, a, b)) = split_coord(sx, sy) else {
        return border_value(border);
    };
    let mut taps = [[0u8; 3]; 4];
    for (tap, (di, dj)) in taps.iter_mut().zip(tap_offsets()) {
        *tap = match resolve_tap(src, i + di, j + dj, border) {
            Some((x, y)) => {
                let mut t = [0u8; 3];
                t[..src.channels].copy_from_slice(src.pixel(x, y));
                t
            }
            None => border_value(border),
        };
    }
    blend(&taps, a, b, src.channels)
}

/// Source of per-pixel map coordinates: one of the three map approaches.
pub enum MapProvider<'a> {
    /// Dense map held in memory (reference or full-resolution LUT).
    Dense(&'a RemapField),
    /// Model evaluated per pixel in fixed point.
    OnTheFly {
        mapper: Box<OnTheFlyMapper>,
        width: usize,
        height: usize,
    },
    /// Bilinear reconstruction from a subsampled grid.
    Sampled(&'a SubsampledMap),
}

impl<'a> MapProvider<'a> {
    pub fn on_the_fly(cfg: &LensConfig, fmt: QFormat) -> Result<Self> {
        Ok(MapProvider::OnTheFly {
            mapper: Box::new(OnTheFlyMapper::new(cfg, fmt)?),
            width: cfg.image_width,
            height: cfg.image_height,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        match self {
            MapProvider::Dense(f) => (f.width(), f.height()),
            MapProvider::OnTheFly { width, height, .. } => (*width, *height),
            MapProvider::Sampled(s) => s.image_size(),
        }
    }

    /// Absolute source coordinates for output pixel `(u, v)`.
    pub fn source(&self, u: usize, v: usize) -> Result<(f64, f64)> {
        match self {
            MapProvider::Dense(f) => Ok(f.get(u, v)),
            MapProvider::OnTheFly { mapper, .. } => {
                let (sx, sy) = mapper.map(u, v).map_err(|e| e.at_pixel(u, v))?;
                Ok((sx.to_f64(), sy.to_f64()))
            }
            MapProvider::Sampled(s) => {
                let (dx, dy) = s.reconstruct(u as f64, v as f64)?;
                Ok((u as f64 + dx, v as f64 + dy))
            }
        }
    }

    /// Materializes the provider as a dense field.
    pub fn to_field(&self) -> Result<RemapField> {
        let (w, h) = self.dims();
        RemapField::try_from_fn(w, h, |u, v| self.source(u, v))
    }
}

fn check_dims(src: &Image, provider: &MapProvider<'_>) -> Result<()> {
    let dims = provider.dims();
    if dims != (src.width, src.height) {
        return Err(Error::DimensionMismatch {
            expected: dims,
            found: (src.width, src.height),
        });
    }
    Ok(())
}

/// Offline remap, rows in parallel.
pub fn remap_image(src: &Image, provider: &MapProvider<'_>, border: BorderPolicy) -> Result<Image> {
    check_dims(src, provider)?;
    let (w, ch) = (src.width, src.channels);
    let rows: Vec<Result<Vec<u8>>> = (0..src.height)
        .into_par_iter()
        .map(|v| {
            let mut row = Vec::with_capacity(w * ch);
            for u in 0..w {
                let (sx, sy) = provider.source(u, v)?;
                row.extend_from_slice(&bilinear_fetch(src, sx, sy, border)[..ch]);
            }
            Ok(row)
        })
        .collect();
    let mut data = Vec::with_capacity(src.data.len());
    for row in rows {
        data.extend(row?);
    }
    Image::new(w, src.height, ch, data)
}
