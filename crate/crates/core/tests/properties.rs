use lensremap::eval::{geometric_error, sweep, Approach, SweepGrid};
use lensremap::model::{CameraIntrinsics, LensConfig, RemapField};
use lensremap::remap::{remap_image, required_lines, stream_remap, stream_remap_with, BorderPolicy, Image, MapProvider};
use lensremap::resources::{estimate_onthefly, estimate_sampling};
use lensremap::sampling::subsample;
use lensremap::Error;
use proptest::prelude::*;

fn field(w: usize, h: usize, seed: u64, amp: f64) -> RemapField {
    RemapField::try_from_fn(w, h, |u, v| {
        let t = (seed % 1000) as f64 / 100.0;
        let (u, v) = (u as f64, v as f64);
        Ok((u + amp * (0.3 * u + t).sin(), v + amp * (0.2 * v - t).cos()))
    })
    .unwrap()
}

fn scaled(map: &RemapField, s: f64) -> RemapField {
    RemapField::try_from_fn(map.width(), map.height(), |u, v| {
        let (dx, dy) = map.relative(u, v);
        Ok((u as f64 + s * dx, v as f64 + s * dy))
    })
    .unwrap()
}

fn small_lens(factor: f64) -> LensConfig {
    let cam = CameraIntrinsics::new(60.0, 60.0, 47.5, 35.5).unwrap();
    let mut cfg = LensConfig::identity(96, 72, cam);
    cfg.coeffs = LensConfig::base_fixture().coeffs;
    cfg.with_distortion_factor(factor).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn error_is_symmetric(a in any::<u64>(), b in any::<u64>()) {
        let (m, n) = (field(12, 9, a, 1.5), field(12, 9, b, 0.7));
        let (ab, ba) = (geometric_error(&m, &n).unwrap(), geometric_error(&n, &m).unwrap());
        prop_assert_eq!(ab.rmse, ba.rmse);
        prop_assert_eq!(ab.error_field, ba.error_field);
        prop_assert!(ab.rmse <= ab.max && ab.mean <= ab.max);
    }

    #[test]
    fn error_is_zero_only_for_identical_maps(a in any::<u64>(), u in 0usize..12, v in 0usize..9, d in 1e-6f64..3.0) {
        let m = field(12, 9, a, 2.0);
        prop_assert_eq!(geometric_error(&m, &m.clone()).unwrap().rmse, 0.0);
        let mut xs = m.map_x().to_vec();
        xs[v * 12 + u] += d;
        let moved = RemapField::new(12, 9, xs, m.map_y().to_vec()).unwrap();
        prop_assert!(geometric_error(&moved, &m).unwrap().rmse > 0.0);
    }

    #[test]
    fn rmse_is_homogeneous(a in any::<u64>(), b in any::<u64>(), s in -4.0f64..4.0) {
        let (m, n) = (field(10, 8, a, 1.0), field(10, 8, b, 2.0));
        let base = geometric_error(&m, &n).unwrap().rmse;
        let both = geometric_error(&scaled(&m, s), &scaled(&n, s)).unwrap().rmse;
        prop_assert!((both - s.abs() * base).abs() <= 1e-9 * (1.0 + base * s.abs()));
    }

    #[test]
    fn streaming_matches_offline(factor in 0.0f64..8.0, n in 2u32..=5, frac in 10u32..=20, border in prop_oneof![Just(BorderPolicy::Constant(0)), Just(BorderPolicy::Constant(200)), Just(BorderPolicy::Clamp)]) {
        let cfg = small_lens(factor);
        let src = Image::from_fn(96, 72, 1, |x, y, _| ((x * 11 + y * 5 + x * y) % 256) as u8).unwrap();
        let reference = lensremap::model::build_reference_map(&cfg).unwrap();
        let s = subsample(&reference, n, 8).unwrap();
        let providers = [
            MapProvider::Dense(&reference),
            MapProvider::Sampled(&s),
            MapProvider::on_the_fly(&cfg, lensremap::fixedpoint::QFormat::with_frac_bits(frac).unwrap()).unwrap(),
        ];
        for p in &providers {
            let sizing = required_lines(&p.to_field().unwrap().displacement_bounds());
            let offline = remap_image(&src, p, border).unwrap();
            prop_assert_eq!(&stream_remap_with(&src, p, sizing, border).unwrap(), &offline);
            prop_assert_eq!(&stream_remap(&src, p, sizing.lines + 3, border).unwrap(), &offline);
        }
    }
}

#[test]
fn undersized_buffer_names_the_violation() {
    let cfg = small_lens(6.0);
    let reference = lensremap::model::build_reference_map(&cfg).unwrap();
    let src = Image::filled(96, 72, 1, 9).unwrap();
    let p = MapProvider::Dense(&reference);
    let bounds = reference.displacement_bounds();
    let mut sizing = required_lines(&bounds);
    sizing.lines -= (0.25 * (bounds.max_dy - bounds.min_dy)).ceil() as usize;
    let e = stream_remap_with(&src, &p, sizing, BorderPolicy::default()).unwrap_err();
    assert!(matches!(e, Error::BufferOverwritten { .. }), "{e}");
    assert!(e.to_string().contains("source row"), "{e}");
}

#[test]
fn sweep_rows_follow_the_grid() {
    let grid = SweepGrid {
        factors: vec![0.0, 2.0],
        frac_bits: vec![12, 18],
        sampling: vec![3, 4],
        ..SweepGrid::default()
    };
    let base = small_lens(1.0);
    let result = sweep(&base, &grid).unwrap();
    let keys: Vec<(&str, u32, f64)> = result.rows.iter().map(|r| (r.approach, r.param, r.factor)).collect();
    assert_eq!(
        keys,
        [
            ("onthefly", 12, 0.0), ("onthefly", 18, 0.0), ("sampled", 3, 0.0), ("sampled", 4, 0.0),
            ("onthefly", 12, 2.0), ("onthefly", 18, 2.0), ("sampled", 3, 2.0), ("sampled", 4, 2.0),
        ]
    );
    for row in &result.rows {
        let cfg = base.with_distortion_factor(row.factor).unwrap();
        let expected = match row.approach {
            "onthefly" => estimate_onthefly(&cfg),
            _ => {
                let reference = lensremap::model::build_reference_map(&cfg).unwrap();
                let s = subsample(&reference, row.param, 8).unwrap();
                let (gw, gh) = s.grid_size();
                estimate_sampling(gw, gh, s.bits_per_sample())
            }
        };
        assert_eq!(row.resources, expected);
        if row.factor == 0.0 {
            assert_eq!(row.rmse, 0.0);
        }
    }
    assert_eq!(sweep(&base, &grid).unwrap(), result, "sweep is deterministic");
    let single = Approach::Sampled { n: 3, sample_frac_bits: 8 };
    assert_eq!(single.id(), "sampled");
}

/// First output pixel, in raster order, with an in-frame tap row outside the
/// rows held after `v + delay + 1` input rows have entered a `lines`-row buffer.
fn first_violation(map: &RemapField, lines: usize, delay: usize) -> Option<(usize, usize, i64, bool)> {
    let (w, h) = (map.width() as i64, map.height() as i64);
    for v in 0..map.height() {
        let written = ((v + delay + 1) as i64).min(h);
        let oldest = written - lines as i64;
        for u in 0..map.width() {
            let (sx, sy) = map.get(u, v);
            let (i, j) = (sx.floor() as i64, sy.floor() as i64);
            for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                let (x, y) = (i + di, j + dj);
                if !(0..w).contains(&x) || !(0..h).contains(&y) {
                    continue;
                }
                if y >= written || y < oldest {
                    return Some((u, v, y, y >= written));
                }
            }
        }
    }
    None
}

/// Smallest cut below `required_lines` that breaks the factor-5 VGA map, from
/// `first_violation`. The extreme vertical displacements sit on different rows,
/// so the formula has slack.
const FIRST_FAILING_CUT: usize = 9;

#[test]
fn vga_buffer_fails_at_the_first_violation() {
    let cfg = LensConfig::base_fixture().with_distortion_factor(5.0).unwrap();
    let reference = lensremap::model::build_reference_map(&cfg).unwrap();
    let src = Image::from_fn(cfg.image_width, cfg.image_height, 1, |x, y, _| ((x * 7 + y * 13) % 256) as u8).unwrap();
    let p = MapProvider::Dense(&reference);
    let sizing = required_lines(&reference.displacement_bounds());
    let cut = |k: usize| lensremap::remap::BufferSizing { lines: sizing.lines - k, ..sizing };
    for k in 0..FIRST_FAILING_CUT {
        assert_eq!(first_violation(&reference, sizing.lines - k, sizing.read_delay), None, "cut {k}");
    }
    let offline = remap_image(&src, &p, BorderPolicy::default()).unwrap();
    for k in [0, 5, FIRST_FAILING_CUT - 1] {
        assert_eq!(stream_remap_with(&src, &p, cut(k), BorderPolicy::default()).unwrap(), offline, "cut {k}");
    }
    let (u, v, row, underflow) = first_violation(&reference, sizing.lines - FIRST_FAILING_CUT, sizing.read_delay).unwrap();
    let e = stream_remap_with(&src, &p, cut(FIRST_FAILING_CUT), BorderPolicy::default()).unwrap_err();
    let expected = if underflow {
        Error::BufferUnderflow { u, v, row }
    } else {
        Error::BufferOverwritten { u, v, row }
    };
    assert_eq!(e.to_string(), expected.to_string());
}
