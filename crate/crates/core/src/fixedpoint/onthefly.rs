//! On-the-fly map evaluation: the complete camera model evaluated per pixel in
//! fixed point, the way a hardware map module would.
//!
//! The chain is written once against [`Datapath`] and run by two backends: the
//! fixed-point evaluator and an operator counter, so the resource estimate is
//! always a tally of the datapath that actually produced the map values.
//!
//! When the rotation is the identity the projection is folded into a relative
//! form, `sx = u + (fx/fx' - 1)(u - cx') + (cx - cx') + fx * corr_x`, which
//! needs no division and makes every correction term exactly zero for a
//! distortion-free lens.

use crate::error::Result;
use crate::model::{LensConfig, RemapField};

use super::{q_add, q_div, q_mul, q_sub, quantize, QFormat, QValue, WIDE_INT_BITS};

/// Arithmetic backend for the map chain.
trait Datapath {
    type Val: Clone;

    fn constant(&mut self, c: f64) -> Self::Val;
    fn add(&mut self, a: &Self::Val, b: &Self::Val) -> Self::Val;
    fn sub(&mut self, a: &Self::Val, b: &Self::Val) -> Self::Val;
    fn mul(&mut self, a: &Self::Val, b: &Self::Val) -> Self::Val;
    fn div(&mut self, a: &Self::Val, b: &Self::Val) -> Result<Self::Val>;
}

struct Fixed {
    fmt: QFormat,
}

impl Datapath for Fixed {
    type Val = QValue;

    fn constant(&mut self, c: f64) -> QValue {
        quantize(c, self.fmt)
    }
    fn add(&mut self, a: &QValue, b: &QValue) -> QValue {
        q_add(*a, *b)
    }
    fn sub(&mut self, a: &QValue, b: &QValue) -> QValue {
        q_sub(*a, *b)
    }
    fn mul(&mut self, a: &QValue, b: &QValue) -> QValue {
        q_mul(*a, *b)
    }
    fn div(&mut self, a: &QValue, b: &QValue) -> Result<QValue> {
        q_div(*a, *b)
    }
}

/// Operator instances in a fully pipelined datapath (one pixel per cycle).
/// Subtractors are counted as adders.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub multipliers: usize,
    pub adders: usize,
    pub dividers: usize,
}

impl Datapath for OpCounts {
    type Val = ();

    fn constant(&mut self, _: f64) {}
    fn add(&mut self, _: &(), _: &()) {
        self.adders += 1;
    }
    fn sub(&mut self, _: &(), _: &()) {
        self.adders += 1;
    }
    fn mul(&mut self, _: &(), _: &()) {
        self.multipliers += 1;
    }
    fn div(&mut self, _: &(), _: &()) -> Result<()> {
        self.dividers += 1;
        Ok(())
    }
}

enum Projection<V> {
    /// Identity rotation: output offset folded relative to the pixel.
    Relative {
        gain_x: V,
        gain_y: V,
        offset_x: V,
        offset_y: V,
        fx: V,
        fy: V,
    },
    Absolute {
        fx: V,
        fy: V,
        cx: V,
        cy: V,
    },
}

/// Constants quantized once per configuration.
struct Constants<V> {
    one: V,
    new_cx: V,
    new_cy: V,
    inv_new_fx: V,
    inv_new_fy: V,
    /// Rows of R, only for a non-identity rotation.
    rotation: Option<[[V; 3]; 3]>,
    radial: [V; 3],
    /// k4..k6, only for a rational lens.
    denominator: Option<[V; 3]>,
    p1: V,
    p2: V,
    p1_twice: V,
    p2_twice: V,
    projection: Projection<V>,
}

impl<V> Constants<V> {
    fn prepare<D: Datapath<Val = V>>(d: &mut D, cfg: &LensConfig) -> Self {
        let cam = &cfg.intrinsics;
        let new = &cfg.new_intrinsics;
        let c = &cfg.coeffs;
        let rotation = (!cfg.rotation.is_identity())
            .then(|| cfg.rotation.rows().map(|row| row.map(|r| d.constant(r))));
        let denominator = c
            .is_rational()
            .then(|| [d.constant(c.k4), d.constant(c.k5), d.constant(c.k6)]);
        let projection = if rotation.is_none() {
            Projection::Relative {
                gain_x: d.constant(cam.fx / new.fx - 1.0),
                gain_y: d.constant(cam.fy / new.fy - 1.0),
                offset_x: d.constant(cam.cx - new.cx),
                offset_y: d.constant(cam.cy - new.cy),
                fx: d.constant(cam.fx),
                fy: d.constant(cam.fy),
            }
        } else {
            Projection::Absolute {
                fx: d.constant(cam.fx),
                fy: d.constant(cam.fy),
                cx: d.constant(cam.cx),
                cy: d.constant(cam.cy),
            }
        };
        Constants {
            one: d.constant(1.0),
            new_cx: d.constant(new.cx),
            new_cy: d.constant(new.cy),
            inv_new_fx: d.constant(1.0 / new.fx),
            inv_new_fy: d.constant(1.0 / new.fy),
            rotation,
            radial: [d.constant(c.k1), d.constant(c.k2), d.constant(c.k3)],
            denominator,
            p1: d.constant(c.p1),
            p2: d.constant(c.p2),
            p1_twice: d.constant(2.0 * c.p1),
            p2_twice: d.constant(2.0 * c.p2),
            projection,
        }
    }
}

/// `r2 * (a + r2 * (b + r2 * c))`
fn horner<D: Datapath>(d: &mut D, r2: &D::Val, [a, b, c]: &[D::Val; 3]) -> D::Val {
    let t = d.mul(r2, c);
    let t = d.add(b, &t);
    let t = d.mul(r2, &t);
    let t = d.add(a, &t);
    d.mul(r2, &t)
}

fn evaluate<D: Datapath>(
    d: &mut D,
    k: &Constants<D::Val>,
    u: &D::Val,
    v: &D::Val,
) -> Result<(D::Val, D::Val)> {
    let du = d.sub(u, &k.new_cx);
    let dv = d.sub(v, &k.new_cy);
    let mut x = d.mul(&du, &k.inv_new_fx);
    let mut y = d.mul(&dv, &k.inv_new_fy);

    if let Some(r) = &k.rotation {
        // column c of R gives component c of R^T [x y 1]
        let mut component = |c: usize| {
            let a = d.mul(&r[0][c], &x);
            let b = d.mul(&r[1][c], &y);
            let w = d.mul(&r[2][c], &k.one);
            let s = d.add(&a, &b);
            d.add(&s, &w)
        };
        let big_x = component(0);
        let big_y = component(1);
        let w = component(2);
        x = d.div(&big_x, &w)?;
        y = d.div(&big_y, &w)?;
    }

    let xx = d.mul(&x, &x);
    let yy = d.mul(&y, &y);
    let xy = d.mul(&x, &y);
    let r2 = d.add(&xx, &yy);

    // radial - 1, as (N - D) / (1 + D) for a rational lens
    let numerator = horner(d, &r2, &k.radial);
    let excess = match &k.denominator {
        None => numerator,
        Some(den) => {
            let dpoly = horner(d, &r2, den);
            let diff = d.sub(&numerator, &dpoly);
            let den = d.add(&k.one, &dpoly);
            d.div(&diff, &den)?
        }
    };

    let xx2 = d.add(&xx, &xx);
    let yy2 = d.add(&yy, &yy);

    let corr_x = {
        let radial = d.mul(&x, &excess);
        let t1 = d.mul(&k.p1_twice, &xy);
        let s = d.add(&r2, &xx2);
        let t2 = d.mul(&k.p2, &s);
        let acc = d.add(&radial, &t1);
        d.add(&acc, &t2)
    };
    let corr_y = {
        let radial = d.mul(&y, &excess);
        let s = d.add(&r2, &yy2);
        let t1 = d.mul(&k.p1, &s);
        let t2 = d.mul(&k.p2_twice, &xy);
        let acc = d.add(&radial, &t1);
        d.add(&acc, &t2)
    };

    match &k.projection {
        Projection::Relative {
            gain_x,
            gain_y,
            offset_x,
            offset_y,
            fx,
            fy,
        } => {
            let mut axis = |p: &D::Val, dp: &D::Val, gain, offset, f, corr| {
                let scaled = d.mul(gain, dp);
                let lens = d.mul(f, corr);
                let rel = d.add(&scaled, offset);
                let rel = d.add(&rel, &lens);
                d.add(p, &rel)
            };
            let sx = axis(u, &du, gain_x, offset_x, fx, &corr_x);
            let sy = axis(v, &dv, gain_y, offset_y, fy, &corr_y);
            Ok((sx, sy))
        }
        Projection::Absolute { fx, fy, cx, cy } => {
            let xd = d.add(&x, &corr_x);
            let yd = d.add(&y, &corr_y);
            let sx = d.mul(fx, &xd);
            let sx = d.add(&sx, cx);
            let sy = d.mul(fy, &yd);
            let sy = d.add(&sy, cy);
            Ok((sx, sy))
        }
    }
}

/// Operator tally of the datapath `OnTheFlyMapper` runs for `cfg`.
pub fn operator_counts(cfg: &LensConfig) -> OpCounts {
    let mut counter = OpCounts::default();
    let k = Constants::prepare(&mut counter, cfg);
    evaluate(&mut counter, &k, &(), &()).expect("counting never fails");
    counter
}

/// Fixed-point map evaluator for one configuration and output format.
///
/// Intermediates run in a widened format (same fractional bits, at least
/// [`WIDE_INT_BITS`] integer bits); the final coordinates are narrowed to
/// the requested format.
pub struct OnTheFlyMapper {
    wide: QFormat,
    out: QFormat,
    constants: Constants<QValue>,
}

impl OnTheFlyMapper {
    pub fn new(cfg: &LensConfig, fmt: QFormat) -> Result<Self> {
        cfg.validate()?;
        let wide = QFormat::new(fmt.frac_bits(), fmt.int_bits().max(WIDE_INT_BITS))?;
        let constants = Constants::prepare(&mut Fixed { fmt: wide }, cfg);
        Ok(OnTheFlyMapper {
            wide,
            out: fmt,
            constants,
        })
    }

    pub fn output_format(&self) -> QFormat {
        self.out
    }

    pub fn internal_format(&self) -> QFormat {
        self.wide
    }

    /// Source coordinates of output pixel `(u, v)`.
    pub fn map(&self, u: usize, v: usize) -> Result<(QValue, QValue)> {
        let mut d = Fixed { fmt: self.wide };
        let u = quantize(u as f64, self.wide);
        let v = quantize(v as f64, self.wide);
        let (sx, sy) = evaluate(&mut d, &self.constants, &u, &v)?;
        Ok((sx.requantize(self.out), sy.requantize(self.out)))
    }
}

pub fn onthefly_map(u: usize, v: usize, cfg: &LensConfig, fmt: QFormat) -> Result<(QValue, QValue)> {
    OnTheFlyMapper::new(cfg, fmt)?
        .map(u, v)
        .map_err(|e| e.at_pixel(u, v))
}

/// Field of on-the-fly values plus the number of pixels where any stage saturated.
#[derive(Debug, Clone)]
pub struct OnTheFlyField {
    pub field: RemapField,
    pub saturated_pixels: usize,
}

pub fn onthefly_field_with_stats(cfg: &LensConfig, fmt: QFormat) -> Result<OnTheFlyField> {
    let mapper = OnTheFlyMapper::new(cfg, fmt)?;
    let saturated = std::sync::atomic::AtomicUsize::new(0);
    let field = RemapField::try_from_fn(cfg.image_width, cfg.image_height, |u, v| {
        let (sx, sy) = mapper.map(u, v)?;
        if sx.saturated() || sy.saturated() {
            saturated.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        }
        Ok((sx.to_f64(), sy.to_f64()))
    })?;
    Ok(OnTheFlyField {
        field,
        saturated_pixels: saturated.into_inner(),
    })
}

pub fn onthefly_field(cfg: &LensConfig, fmt: QFormat) -> Result<RemapField> {
    onthefly_field_with_stats(cfg, fmt).map(|f| f.field)
}

impl From<OnTheFlyField> for RemapField {
    fn from(f: OnTheFlyField) -> Self {
        f.field
    }
}
