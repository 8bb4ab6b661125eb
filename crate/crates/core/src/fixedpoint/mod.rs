//! Signed fixed-point arithmetic with saturating, round-half-away-from-zero
//! semantics, and the per-pixel on-the-fly map datapath built on it.

mod onthefly;

pub use onthefly::{
    onthefly_field, onthefly_field_with_stats, onthefly_map, operator_counts, OnTheFlyField,
    OnTheFlyMapper, OpCounts,
};

use std::fmt;

use crate::error::{Error, Result};

/// Integer width used for map coordinates unless overridden.
pub const DEFAULT_INT_BITS: u32 = 12;
/// Integer width of the internal datapath format.
pub const WIDE_INT_BITS: u32 = 16;

/// Two's-complement fixed-point layout: `int_bits` (sign included) plus
/// `frac_bits` fractional bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QFormat {
    frac_bits: u32,
    int_bits: u32,
}

impl QFormat {
    pub fn new(frac_bits: u32, int_bits: u32) -> Result<Self> {
        if !(1..=30).contains(&frac_bits) {
            return Err(Error::InvalidParameter(format!(
                "frac_bits must be in 1..=30, got {frac_bits}"
            )));
        }
        if !(2..=32).contains(&int_bits) {
            return Err(Error::InvalidParameter(format!(
                "int_bits must be in 2..=32, got {int_bits}"
            )));
        }
        Ok(QFormat {
            frac_bits,
            int_bits,
        })
    }

    /// `frac_bits` fractional bits on top of the default 12 integer bits.
    pub fn with_frac_bits(frac_bits: u32) -> Result<Self> {
        Self::new(frac_bits, DEFAULT_INT_BITS)
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn int_bits(&self) -> u32 {
        self.int_bits
    }

    pub fn total_bits(&self) -> u32 {
        self.frac_bits + self.int_bits
    }

    pub fn resolution(&self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    pub fn max_raw(&self) -> i64 {
        (1i64 << (self.total_bits() - 1)) - 1
    }

    pub fn min_raw(&self) -> i64 {
        -(1i64 << (self.total_bits() - 1))
    }

    pub fn max_value(&self) -> f64 {
        self.max_raw() as f64 * self.resolution()
    }

    pub fn min_value(&self) -> f64 {
        self.min_raw() as f64 * self.resolution()
    }

    /// Clamps a wide intermediate into range. Returns the raw value and
    /// whether clamping happened.
    fn saturate(&self, raw: i128) -> (i64, bool) {
        let (lo, hi) = (self.min_raw() as i128, self.max_raw() as i128);
        if raw > hi {
            (hi as i64, true)
        } else if raw < lo {
            (lo as i64, true)
        } else {
            (raw as i64, false)
        }
    }
}

impl fmt::Display for QFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}.{}", self.int_bits, self.frac_bits)
    }
}

/// A fixed-point number. `saturated` is sticky: it is set when this value or
/// any operand that produced it was clamped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QValue {
    raw: i64,
    fmt: QFormat,
    saturated: bool,
}

impl QValue {
    /// Wraps a raw integer, saturating it into the format's range.
    pub fn from_raw(raw: i64, fmt: QFormat) -> Self {
        let (raw, saturated) = fmt.saturate(raw as i128);
        QValue {
            raw,
            fmt,
            saturated,
        }
    }

    pub fn zero(fmt: QFormat) -> Self {
        QValue {
            raw: 0,
            fmt,
            saturated: false,
        }
    }

    pub fn raw(&self) -> i64 {
        self.raw
    }

    pub fn format(&self) -> QFormat {
        self.fmt
    }

    pub fn saturated(&self) -> bool {
        self.saturated
    }

    pub fn to_f64(&self) -> f64 {
        self.raw as f64 * self.fmt.resolution()
    }

    /// Converts to another format: rounds off dropped fractional bits,
    /// then saturates to the target's integer width.
    pub fn requantize(&self, fmt: QFormat) -> Self {
        let raw = self.raw as i128;
        let shifted = if fmt.frac_bits >= self.fmt.frac_bits {
            raw << (fmt.frac_bits - self.fmt.frac_bits)
        } else {
            round_shift(raw, self.fmt.frac_bits - fmt.frac_bits)
        };
        self.derive(shifted, fmt, self.saturated)
    }

    fn derive(&self, wide: i128, fmt: QFormat, inherited: bool) -> Self {
        let (raw, clamped) = fmt.saturate(wide);
        QValue {
            raw,
            fmt,
            saturated: inherited || clamped,
        }
    }
}

impl fmt::Display for QValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} raw {})", self.to_f64(), self.fmt, self.raw)
    }
}

/// `x / 2^shift` rounded half away from zero.
#[inline]
fn round_shift(x: i128, shift: u32) -> i128 {
    if shift == 0 {
        return x;
    }
    let half = 1i128 << (shift - 1);
    if x >= 0 {
        (x + half) >> shift
    } else {
        -((-x + half) >> shift)
    }
}

/// `n / d` rounded half away from zero; `d != 0`.
#[inline]
fn round_div(n: i128, d: i128) -> i128 {
    let (na, da) = (n.unsigned_abs(), d.unsigned_abs());
    let q = ((2 * na + da) / (2 * da)) as i128;
    if (n < 0) != (d < 0) {
        -q
    } else {
        q
    }
}

pub fn quantize(x: f64, fmt: QFormat) -> QValue {
    debug_assert!(x.is_finite(), "quantize of non-finite {x}");
    let scaled = (x * (fmt.frac_bits as f64).exp2()).round();
    let (raw, saturated) = if scaled >= fmt.max_raw() as f64 {
        (fmt.max_raw(), scaled > fmt.max_raw() as f64)
    } else if scaled <= fmt.min_raw() as f64 {
        (fmt.min_raw(), scaled < fmt.min_raw() as f64)
    } else {
        (scaled as i64, false)
    };
    QValue {
        raw,
        fmt,
        saturated,
    }
}

#[inline]
fn same_format(a: &QValue, b: &QValue) -> QFormat {
    assert_eq!(a.fmt, b.fmt, "fixed-point operands must share a format");
    a.fmt
}

pub fn q_add(a: QValue, b: QValue) -> QValue {
    let fmt = same_format(&a, &b);
    a.derive(a.raw as i128 + b.raw as i128, fmt, a.saturated || b.saturated)
}

pub fn q_sub(a: QValue, b: QValue) -> QValue {
    let fmt = same_format(&a, &b);
    a.derive(a.raw as i128 - b.raw as i128, fmt, a.saturated || b.saturated)
}

pub fn q_neg(a: QValue) -> QValue {
    a.derive(-(a.raw as i128), a.fmt, a.saturated)
}

/// Double-width product, rounded back to `frac_bits`.
pub fn q_mul(a: QValue, b: QValue) -> QValue {
    let fmt = same_format(&a, &b);
    let wide = round_shift(a.raw as i128 * b.raw as i128, fmt.frac_bits);
    a.derive(wide, fmt, a.saturated || b.saturated)
}

/// `round((a << frac_bits) / b)`.
pub fn q_div(a: QValue, b: QValue) -> Result<QValue> {
    let fmt = same_format(&a, &b);
    if b.raw == 0 {
        return Err(Error::DivisionByZero);
    }
    let wide = round_div((a.raw as i128) << fmt.frac_bits, b.raw as i128);
    Ok(a.derive(wide, fmt, a.saturated || b.saturated))
}
