//! Subsampled look-up table: the reference map kept only on a 2^n pixel grid,
//! stored as fixed-point relative displacements, and rebuilt per pixel by
//! bilinear interpolation.

use crate::error::{Error, Result};
use crate::fixedpoint::{quantize, QFormat};
use crate::model::RemapField;

/// Fractional bits of stored samples unless overridden.
pub const DEFAULT_SAMPLE_FRAC_BITS: u32 = 8;
/// Integer bits (sign included) of stored samples unless overridden.
pub const DEFAULT_SAMPLE_INT_BITS: u32 = 13;
/// Largest supported sampling factor.
pub const MAX_SAMPLING_FACTOR: u32 = 15;

/// Grid dimension covering `extent` pixels at pitch `2^n`.
pub fn grid_len(extent: usize, n: u32) -> usize {
    (extent - 1).div_ceil(1usize << n) + 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsampledMap {
    n: u32,
    image_width: usize,
    image_height: usize,
    grid_w: usize,
    grid_h: usize,
    fmt: QFormat,
    samples_x: Vec<i64>,
    samples_y: Vec<i64>,
}

impl SubsampledMap {
    /// Assembles a map from raw sample planes (row-major, `grid_w * grid_h` each).
    pub fn from_parts(
        n: u32,
        image_width: usize,
        image_height: usize,
        fmt: QFormat,
        samples_x: Vec<i64>,
        samples_y: Vec<i64>,
    ) -> Result<Self> {
        check_geometry(image_width, image_height, n)?;
        let grid_w = grid_len(image_width, n);
        let grid_h = grid_len(image_height, n);
        let count = grid_w * grid_h;
        if samples_x.len() != count || samples_y.len() != count {
            return Err(Error::InvalidParameter(format!(
                "expected {count} samples per axis, got {} and {}",
                samples_x.len(),
                samples_y.len()
            )));
        }
        if let Some(bad) = samples_x
            .iter()
            .chain(&samples_y)
            .find(|&&r| r < fmt.min_raw() || r > fmt.max_raw())
        {
            return Err(Error::InvalidParameter(format!(
                "sample {bad} does not fit {fmt}"
            )));
        }
        Ok(SubsampledMap {
            n,
            image_width,
            image_height,
            grid_w,
            grid_h,
            fmt,
            samples_x,
            samples_y,
        })
    }

    pub fn sampling_factor(&self) -> u32 {
        self.n
    }

    pub fn pitch(&self) -> usize {
        1 << self.n
    }

    pub fn image_size(&self) -> (usize, usize) {
        (self.image_width, self.image_height)
    }

    pub fn grid_size(&self) -> (usize, usize) {
        (self.grid_w, self.grid_h)
    }

    pub fn sample_count(&self) -> usize {
        self.grid_w * self.grid_h
    }

    pub fn sample_format(&self) -> QFormat {
        self.fmt
    }

    pub fn bits_per_sample(&self) -> u32 {
        self.fmt.total_bits()
    }

    pub fn samples_x(&self) -> &[i64] {
        &self.samples_x
    }

    pub fn samples_y(&self) -> &[i64] {
        &self.samples_y
    }

    /// Dequantized relative displacement stored at grid node `(i, j)`.
    pub fn sample(&self, i: usize, j: usize) -> (f64, f64) {
        let k = j * self.grid_w + i;
        let res = self.fmt.resolution();
        (self.samples_x[k] as f64 * res, self.samples_y[k] as f64 * res)
    }

    /// Bilinear blend inside cell `(i, j)` at offsets `a, b` in `[0, 1]`.
    fn blend_cell(&self, i: usize, j: usize, a: f64, b: f64) -> (f64, f64) {
        let s00 = self.sample(i, j);
        let s10 = self.sample(i + 1, j);
        let s01 = self.sample(i, j + 1);
        let s11 = self.sample(i + 1, j + 1);
        let w00 = (1.0 - a) * (1.0 - b);
        let w10 = a * (1.0 - b);
        let w01 = (1.0 - a) * b;
        let w11 = a * b;
        (
            w00 * s00.0 + w10 * s10.0 + w01 * s01.0 + w11 * s11.0,
            w00 * s00.1 + w10 * s10.1 + w01 * s01.1 + w11 * s11.1,
        )
    }

    /// Interpolated relative displacement at `(u, v)`.
    pub fn reconstruct(&self, u: f64, v: f64) -> Result<(f64, f64)> {
        if !(u >= 0.0 && v >= 0.0 && u < self.image_width as f64 && v < self.image_height as f64) {
            return Err(Error::OutOfRange {
                u,
                v,
                width: self.image_width,
                height: self.image_height,
            });
        }
        let pitch = self.pitch() as f64;
        // the last node may sit exactly on the final pixel; stay in the last cell
        let i = ((u / pitch).floor() as usize).min(self.grid_w - 2);
        let j = ((v / pitch).floor() as usize).min(self.grid_h - 2);
        let a = (u - i as f64 * pitch) / pitch;
        let b = (v - j as f64 * pitch) / pitch;
        Ok(self.blend_cell(i, j, a, b))
    }

    /// Bits needed to store both sample planes at `bits_per_sample` each.
    pub fn memory_footprint(&self, bits_per_sample: u32) -> u64 {
        self.sample_count() as u64 * 2 * bits_per_sample as u64
    }
}

fn check_geometry(width: usize, height: usize, n: u32) -> Result<()> {
    if width < 2 || height < 2 {
        return Err(Error::InvalidParameter(format!(
            "image {width}x{height} is too small to sample"
        )));
    }
    if !(1..=MAX_SAMPLING_FACTOR).contains(&n) || (1usize << n) >= width.min(height) {
        let (grid_w, grid_h) = if n <= MAX_SAMPLING_FACTOR {
            (grid_len(width, n), grid_len(height, n))
        } else {
            (1, 1)
        };
        return Err(Error::GridTooSmall { n, grid_w, grid_h });
    }
    Ok(())
}

/// Samples the relative displacements of `map` every `2^n` pixels with the
/// default sample integer width.
pub fn subsample(map: &RemapField, n: u32, sample_frac_bits: u32) -> Result<SubsampledMap> {
    subsample_with_format(map, n, QFormat::new(sample_frac_bits, DEFAULT_SAMPLE_INT_BITS)?)
}

pub fn subsample_with_format(map: &RemapField, n: u32, fmt: QFormat) -> Result<SubsampledMap> {
    let (w, h) = (map.width(), map.height());
    check_geometry(w, h, n)?;
    let grid_w = grid_len(w, n);
    let grid_h = grid_len(h, n);
    let mut samples_x = Vec::with_capacity(grid_w * grid_h);
    let mut samples_y = Vec::with_capacity(grid_w * grid_h);
    for j in 0..grid_h {
        let v = (j << n).min(h - 1);
        for i in 0..grid_w {
            let u = (i << n).min(w - 1);
            let (dx, dy) = map.relative(u, v);
            samples_x.push(quantize(dx, fmt).raw());
            samples_y.push(quantize(dy, fmt).raw());
        }
    }
    SubsampledMap::from_parts(n, w, h, fmt, samples_x, samples_y)
}

pub fn reconstruct(s: &SubsampledMap, u: f64, v: f64) -> Result<(f64, f64)> {
    s.reconstruct(u, v)
}

/// Absolute source coordinates rebuilt at every pixel.
pub fn sampled_field(s: &SubsampledMap) -> RemapField {
    RemapField::try_from_fn(s.image_width, s.image_height, |u, v| {
        let (dx, dy) = s.reconstruct(u as f64, v as f64)?;
        Ok((u as f64 + dx, v as f64 + dy))
    })
    .expect("every pixel lies inside the sampled grid")
}

pub fn memory_footprint(s: &SubsampledMap, bits_per_sample: u32) -> u64 {
    s.memory_footprint(bits_per_sample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_reference_map, LensConfig};
    use proptest::prelude::*;

    fn affine(w: usize, h: usize) -> RemapField {
        RemapField::try_from_fn(w, h, |u, v| {
            let (u, v) = (u as f64, v as f64);
            Ok((1.02 * u - 0.03 * v + 1.25, 0.01 * u + 0.97 * v - 2.5))
        })
        .unwrap()
    }

    #[test]
    fn vga_sample_counts() {
        let id = RemapField::identity(640, 480);
        let s5 = subsample(&id, 5, 8).unwrap();
        assert_eq!(s5.grid_size(), (21, 16));
        assert_eq!(s5.sample_count(), 336);
        let s3 = subsample(&id, 3, 8).unwrap();
        assert_eq!(s3.grid_size(), (81, 61));
        assert_eq!(s3.sample_count(), 4941);
    }

    #[test]
    fn grid_covers_image() {
        for (w, h) in [(640, 480), (1280, 720), (17, 9), (65, 33)] {
            for n in 1..=3 {
                let (gw, gh) = (grid_len(w, n), grid_len(h, n));
                assert!((gw - 1) << n >= w - 1 && (gh - 1) << n >= h - 1);
                assert!((gw - 2) << n < w - 1 && (gh - 2) << n < h - 1);
            }
        }
    }

    #[test]
    fn identity_map_has_zero_samples() {
        for n in [3, 5, 6, 7] {
            let s = subsample(&RemapField::identity(640, 480), n, 8).unwrap();
            assert!(s.samples_x().iter().chain(s.samples_y()).all(|&r| r == 0));
            assert_eq!(sampled_field(&s), RemapField::identity(640, 480));
        }
    }

    #[test]
    fn too_coarse_grid_is_rejected() {
        let id = RemapField::identity(64, 48);
        assert!(matches!(subsample(&id, 6, 8), Err(Error::GridTooSmall { .. })));
        assert!(matches!(subsample(&id, 0, 8), Err(Error::GridTooSmall { .. })));
        assert!(subsample(&id, 5, 8).is_ok());
    }

    #[test]
    fn reconstruct_at_nodes_and_midpoints() {
        let map = build_reference_map(&LensConfig::base_fixture()).unwrap();
        let s = subsample(&map, 6, 8).unwrap();
        assert_eq!(s.reconstruct(128.0, 192.0).unwrap(), s.sample(2, 3));
        let mid = s.reconstruct(160.0, 192.0).unwrap();
        let (l, r) = (s.sample(2, 3), s.sample(3, 3));
        assert!((mid.0 - (l.0 + r.0) / 2.0).abs() < 1e-12);
        assert!((mid.1 - (l.1 + r.1) / 2.0).abs() < 1e-12);

        // off-node: bilinear blend of the unquantized corner displacements,
        // up to one half-LSB of sample rounding
        let (dx, dy) = s.reconstruct(100.0, 100.0).unwrap();
        let t = 36.0 / 64.0;
        let c = [(64, 64), (128, 64), (64, 128), (128, 128)].map(|(u, v)| map.relative(u, v));
        let w = [(1.0 - t) * (1.0 - t), t * (1.0 - t), (1.0 - t) * t, t * t];
        let ex: f64 = (0..4).map(|k| w[k] * c[k].0).sum();
        let ey: f64 = (0..4).map(|k| w[k] * c[k].1).sum();
        let half_lsb = 0.5 / 256.0;
        assert!((dx - ex).abs() <= half_lsb + 1e-12 && (dy - ey).abs() <= half_lsb + 1e-12);
    }

    #[test]
    fn reconstruct_rejects_out_of_range() {
        let s = subsample(&RemapField::identity(64, 48), 3, 8).unwrap();
        assert!(s.reconstruct(64.0, 0.0).is_err());
        assert!(s.reconstruct(0.0, -0.5).is_err());
        assert!(s.reconstruct(f64::NAN, 0.0).is_err());
        assert!(s.reconstruct(63.0, 47.0).is_ok());
    }

    #[test]
    fn continuity_across_cell_edges() {
        let map = build_reference_map(&LensConfig::base_fixture().with_distortion_factor(3.0).unwrap())
            .unwrap();
        let s = subsample(&map, 5, 8).unwrap();
        let (gw, gh) = s.grid_size();
        for j in 0..gh - 1 {
            for i in 0..gw - 2 {
                for b in [0.0, 0.3, 0.75] {
                    let left = s.blend_cell(i, j, 1.0, b);
                    let right = s.blend_cell(i + 1, j, 0.0, b);
                    assert!((left.0 - right.0).abs() < 1e-12 && (left.1 - right.1).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn affine_maps_are_reproduced() {
        // (w - 1) and (h - 1) are multiples of the pitch, so no node is clamped
        let map = affine(65, 49);
        let s = subsample_with_format(&map, 4, QFormat::new(30, 13).unwrap()).unwrap();
        let rebuilt = sampled_field(&s);
        for (a, b) in rebuilt.map_x().iter().zip(map.map_x()) {
            assert!((a - b).abs() < 1e-8);
        }
        for (a, b) in rebuilt.map_y().iter().zip(map.map_y()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn footprint() {
        let vga = subsample(&RemapField::identity(640, 480), 5, 8).unwrap();
        assert_eq!(vga.bits_per_sample(), 21);
        assert_eq!(memory_footprint(&vga, 29), 19488);
        let tiny = subsample(&RemapField::identity(3, 3), 1, 8).unwrap();
        assert_eq!(tiny.grid_size(), (2, 2));
        assert_eq!(memory_footprint(&tiny, 12), 8 * 12);
    }

    proptest! {
        #[test]
        fn nodes_return_stored_samples(n in 1u32..=5, seed in 0usize..1000) {
            let map = affine(97, 70);
            let s = subsample(&map, n, 8).unwrap();
            let (gw, gh) = s.grid_size();
            let (i, j) = (seed % gw, (seed / gw) % gh);
            let (u, v) = (i << n, j << n);
            prop_assume!(u < 97 && v < 70);
            prop_assert_eq!(s.reconstruct(u as f64, v as f64).unwrap(), s.sample(i, j));
        }
    }
}
