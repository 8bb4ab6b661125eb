//! Binary map containers, little-endian throughout.
//!
//! FMAP (dense float map), 16-byte header:
//!
//! ```text
//! 0  "FMAP"
//! 4  version      u8
//! 5  reserved     3 bytes, zero
//! 8  width        u32
//! 12 height       u32
//! 16 map_x        width*height f64, row-major
//! .. map_y        width*height f64, row-major
//! ```
//!
//! SMAP (subsampled map), 16-byte header:
//!
//! ```text
//! 0  "SMAP"
//! 4  version          u8
//! 5  n                u8   (grid pitch 2^n)
//! 6  grid_w           u16
//! 8  grid_h           u16
//! 10 sample_frac_bits u8
//! 11 bits_per_sample  u8   (integer + fractional bits, sign included)
//! 12 image_width      u16
//! 14 image_height     u16
//! 16 samples_x        grid_w*grid_h two's-complement values, row-major
//! .. samples_y
//! ```
//!
//! Samples take 4 bytes each when `bits_per_sample <= 32`, 8 bytes otherwise.

use std::path::Path;

use crate::error::{Error, Result};
use crate::fixedpoint::QFormat;
use crate::model::RemapField;
use crate::sampling::{grid_len, SubsampledMap};

pub const FMAP_MAGIC: &[u8; 4] = b"FMAP";
pub const FMAP_VERSION: u8 = 1;
pub const SMAP_MAGIC: &[u8; 4] = b"SMAP";
pub const SMAP_VERSION: u8 = 1;

const HEADER_LEN: usize = 16;

/// A map file of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum MapArtifact {
    Dense(RemapField),
    Sampled(SubsampledMap),
}

pub fn encode_fmap(map: &RemapField) -> Vec<u8> {
    let n = map.width() * map.height();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * n);
    out.extend_from_slice(FMAP_MAGIC);
    out.push(FMAP_VERSION);
    out.extend_from_slice(&[0; 3]);
    out.extend_from_slice(&(map.width() as u32).to_le_bytes());
    out.extend_from_slice(&(map.height() as u32).to_le_bytes());
    for v in map.map_x().iter().chain(map.map_y()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn u16_at(b: &[u8], at: usize) -> usize {
    u16::from_le_bytes([b[at], b[at + 1]]) as usize
}

fn u32_at(b: &[u8], at: usize) -> usize {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap()) as usize
}

fn check_header(bytes: &[u8], magic: &[u8; 4], version: u8, kind: &'static str) -> Result<()> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != magic {
        return Err(Error::format(kind, "bad magic"));
    }
    if bytes[4] != version {
        return Err(Error::format(kind, format!("unsupported version {}", bytes[4])));
    }
    Ok(())
}

pub fn decode_fmap(bytes: &[u8]) -> Result<RemapField> {
    const KIND: &str = "FMAP";
    check_header(bytes, FMAP_MAGIC, FMAP_VERSION, KIND)?;
    let (w, h) = (u32_at(bytes, 8), u32_at(bytes, 12));
    let n = w
        .checked_mul(h)
        .ok_or_else(|| Error::format(KIND, "dimensions overflow"))?;
    if bytes.len() != HEADER_LEN + 16 * n {
        return Err(Error::format(
            KIND,
            format!("{w}x{h} map needs {} bytes, file has {}", HEADER_LEN + 16 * n, bytes.len()),
        ));
    }
    let values: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let (xs, ys) = values.split_at(n);
    RemapField::new(w, h, xs.to_vec(), ys.to_vec()).map_err(|e| Error::format(KIND, e.to_string()))
}

pub fn encode_smap(s: &SubsampledMap) -> Result<Vec<u8>> {
    let (gw, gh) = s.grid_size();
    let (w, h) = s.image_size();
    if w > u16::MAX as usize || h > u16::MAX as usize {
        return Err(Error::InvalidParameter(format!(
            "SMAP stores 16-bit image dimensions, got {w}x{h}"
        )));
    }
    let fmt = s.sample_format();
    let wide = fmt.total_bits() > 32;
    let mut out = Vec::with_capacity(HEADER_LEN + 2 * gw * gh * if wide { 8 } else { 4 });
    out.extend_from_slice(SMAP_MAGIC);
    out.push(SMAP_VERSION);
    out.push(s.sampling_factor() as u8);
    out.extend_from_slice(&(gw as u16).to_le_bytes());
    out.extend_from_slice(&(gh as u16).to_le_bytes());
    out.push(fmt.frac_bits() as u8);
    out.push(fmt.total_bits() as u8);
    out.extend_from_slice(&(w as u16).to_le_bytes());
    out.extend_from_slice(&(h as u16).to_le_bytes());
    for &raw in s.samples_x().iter().chain(s.samples_y()) {
        if wide {
            out.extend_from_slice(&raw.to_le_bytes());
        } else {
            out.extend_from_slice(&(raw as i32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_smap(bytes: &[u8]) -> Result<SubsampledMap> {
    const KIND: &str = "SMAP";
    check_header(bytes, SMAP_MAGIC, SMAP_VERSION, KIND)?;
    let n = bytes[5] as u32;
    let (gw, gh) = (u16_at(bytes, 6), u16_at(bytes, 8));
    let (frac, bits) = (bytes[10] as u32, bytes[11] as u32);
    let (w, h) = (u16_at(bytes, 12), u16_at(bytes, 14));
    let fmt = QFormat::new(frac, bits.saturating_sub(frac))
        .map_err(|e| Error::format(KIND, e.to_string()))?;
    if w < 2 || h < 2 || n == 0 || n > 15 || gw != grid_len(w, n) || gh != grid_len(h, n) {
        return Err(Error::format(
            KIND,
            format!("grid {gw}x{gh} does not match a {w}x{h} image at n = {n}"),
        ));
    }
    let width = if bits > 32 { 8 } else { 4 };
    let count = gw * gh;
    if bytes.len() != HEADER_LEN + 2 * count * width {
        return Err(Error::format(KIND, "sample data length does not match the header"));
    }
    let raws: Vec<i64> = bytes[HEADER_LEN..]
        .chunks_exact(width)
        .map(|c| match width {
            8 => i64::from_le_bytes(c.try_into().unwrap()),
            _ => i32::from_le_bytes(c.try_into().unwrap()) as i64,
        })
        .collect();
    let (xs, ys) = raws.split_at(count);
    SubsampledMap::from_parts(n, w, h, fmt, xs.to_vec(), ys.to_vec())
        .map_err(|e| Error::format(KIND, e.to_string()))
}

/// Decodes either container, dispatching on the magic.
pub fn decode_map(bytes: &[u8]) -> Result<MapArtifact> {
    match bytes.get(..4) {
        Some(m) if m == FMAP_MAGIC => decode_fmap(bytes).map(MapArtifact::Dense),
        Some(m) if m == SMAP_MAGIC => decode_smap(bytes).map(MapArtifact::Sampled),
        _ => Err(Error::format("map", "neither FMAP nor SMAP magic")),
    }
}

pub fn read_map(path: impl AsRef<Path>) -> Result<MapArtifact> {
    decode_map(&std::fs::read(path)?)
}

pub fn write_map(path: impl AsRef<Path>, map: &MapArtifact) -> Result<()> {
    let bytes = match map {
        MapArtifact::Dense(f) => encode_fmap(f),
        MapArtifact::Sampled(s) => encode_smap(s)?,
    };
    Ok(std::fs::write(path, bytes)?)
}
