//! Arbitrary-precision fixed-point oracle: every operation is computed
//! exactly as a rational and rounded once, half away from zero, onto the
//! `2^-frac` grid, then clamped to the signed range of `int + frac` bits.

use lensremap::model::LensConfig;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub struct ExactQ {
    frac: u32,
    lo: BigInt,
    hi: BigInt,
}

impl ExactQ {
    pub fn new(frac: u32, int: u32) -> Self {
        let top = BigInt::one() << (frac + int - 1);
        ExactQ {
            frac,
            lo: -top.clone(),
            hi: top - 1,
        }
    }

    fn scale(&self) -> BigInt {
        BigInt::one() << self.frac
    }

    fn clamp(&self, raw: BigInt) -> BigInt {
        raw.clamp(self.lo.clone(), self.hi.clone())
    }

    /// Nearest raw value to the exact rational `value`.
    pub fn round(&self, value: &BigRational) -> BigInt {
        let scaled = value * BigRational::from_integer(self.scale());
        let (n, d) = (scaled.numer().abs(), scaled.denom().clone());
        let q: BigInt = (n * 2 + &d) / (d * 2);
        self.clamp(if scaled.is_negative() { -q } else { q })
    }

    pub fn constant(&self, x: f64) -> BigInt {
        self.round(&BigRational::from_float(x).expect("finite constant"))
    }

    pub fn add(&self, a: &BigInt, b: &BigInt) -> BigInt {
        self.clamp(a + b)
    }

    pub fn sub(&self, a: &BigInt, b: &BigInt) -> BigInt {
        self.clamp(a - b)
    }

    pub fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        // (a / s)(b / s) = ab / s^2, i.e. raw ab / s
        self.round(&BigRational::new(a * b, self.scale() * self.scale()))
    }

    pub fn div(&self, a: &BigInt, b: &BigInt) -> BigInt {
        assert!(!b.is_zero(), "oracle division by zero");
        self.round(&BigRational::new(a.clone(), b.clone()))
    }

    pub fn to_f64(&self, raw: &BigInt) -> f64 {
        let r: i64 = raw.try_into().expect("raw fits i64");
        r as f64 / (self.frac as f64).exp2()
    }
}

/// Raw source coordinates of pixel `(u, v)`: computed with `frac` fractional
/// and `max(int, 16)` integer bits, then clamped to `int` integer bits.
pub fn onthefly_raw(cfg: &LensConfig, frac: u32, int: u32, u: usize, v: usize) -> (BigInt, BigInt) {
    let q = ExactQ::new(frac, int.max(16));
    let out = ExactQ::new(frac, int);
    let cam = &cfg.intrinsics;
    let new = &cfg.new_intrinsics;
    let c = &cfg.coeffs;
    let k = |x: f64| q.constant(x);

    let pu = k(u as f64);
    let pv = k(v as f64);
    let du = q.sub(&pu, &k(new.cx));
    let dv = q.sub(&pv, &k(new.cy));
    let mut x = q.mul(&du, &k(1.0 / new.fx));
    let mut y = q.mul(&dv, &k(1.0 / new.fy));

    let rotated = !cfg.rotation.is_identity();
    if rotated {
        let r = cfg.rotation.rows();
        let one = k(1.0);
        let comp = |col: usize, x: &BigInt, y: &BigInt| {
            let a = q.mul(&k(r[0][col]), x);
            let b = q.mul(&k(r[1][col]), y);
            let w = q.mul(&k(r[2][col]), &one);
            q.add(&q.add(&a, &b), &w)
        };
        let (bx, by, w) = (comp(0, &x, &y), comp(1, &x, &y), comp(2, &x, &y));
        x = q.div(&bx, &w);
        y = q.div(&by, &w);
    }

    let xx = q.mul(&x, &x);
    let yy = q.mul(&y, &y);
    let xy = q.mul(&x, &y);
    let r2 = q.add(&xx, &yy);
    let poly = |a: f64, b: f64, cc: f64| {
        let t = q.mul(&r2, &k(cc));
        let t = q.add(&k(b), &t);
        let t = q.mul(&r2, &t);
        let t = q.add(&k(a), &t);
        q.mul(&r2, &t)
    };
    let num = poly(c.k1, c.k2, c.k3);
    let excess = if c.k4 != 0.0 || c.k5 != 0.0 || c.k6 != 0.0 {
        let den = poly(c.k4, c.k5, c.k6);
        let diff = q.sub(&num, &den);
        q.div(&diff, &q.add(&k(1.0), &den))
    } else {
        num
    };
    let xx2 = q.add(&xx, &xx);
    let yy2 = q.add(&yy, &yy);
    let corr_x = {
        let t0 = q.mul(&x, &excess);
        let t1 = q.mul(&k(2.0 * c.p1), &xy);
        let t2 = q.mul(&k(c.p2), &q.add(&r2, &xx2));
        q.add(&q.add(&t0, &t1), &t2)
    };
    let corr_y = {
        let t0 = q.mul(&y, &excess);
        let t1 = q.mul(&k(c.p1), &q.add(&r2, &yy2));
        let t2 = q.mul(&k(2.0 * c.p2), &xy);
        q.add(&q.add(&t0, &t1), &t2)
    };

    let (sx, sy) = if rotated {
        let xd = q.add(&x, &corr_x);
        let yd = q.add(&y, &corr_y);
        (
            q.add(&q.mul(&k(cam.fx), &xd), &k(cam.cx)),
            q.add(&q.mul(&k(cam.fy), &yd), &k(cam.cy)),
        )
    } else {
        let rel = |p: &BigInt, dp: &BigInt, gain: f64, offset: f64, f: f64, corr: &BigInt| {
            let scaled = q.mul(&k(gain), dp);
            let lens = q.mul(&k(f), corr);
            let r = q.add(&q.add(&scaled, &k(offset)), &lens);
            q.add(p, &r)
        };
        (
            rel(&pu, &du, cam.fx / new.fx - 1.0, cam.cx - new.cx, cam.fx, &corr_x),
            rel(&pv, &dv, cam.fy / new.fy - 1.0, cam.cy - new.cy, cam.fy, &corr_y),
        )
    };
    (out.clamp(sx), out.clamp(sy))
}

/// `onthefly_raw` over the whole frame, dequantized, row-major planes.
pub fn onthefly_planes(cfg: &LensConfig, frac: u32, int: u32) -> (Vec<f64>, Vec<f64>) {
    let out = ExactQ::new(frac, int);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for v in 0..cfg.image_height {
        for u in 0..cfg.image_width {
            let (sx, sy) = onthefly_raw(cfg, frac, int, u, v);
            xs.push(out.to_f64(&sx));
            ys.push(out.to_f64(&sy));
        }
    }
    (xs, ys)
}
