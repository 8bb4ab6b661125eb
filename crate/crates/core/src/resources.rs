//! Abstract operator counts for the map module of each approach.
//!
//! Operators are counted as fully pipelined instances delivering one map
//! value per pixel clock. Subtractors count as adders.
//!
//! Sampling approach, per bilinear module (one per map axis), built from
//! three linear interpolations `p + a (q - p)`:
//!
//! | item                         | multipliers | adders |
//! |------------------------------|-------------|--------|
//! | one interpolation            | 1           | 2      |
//! | one bilinear module (x3)     | 3           | 6      |
//! | two modules (map_x, map_y)   | 6           | 12     |
//! | sample address glue          | 0           | 4      |
//!
//! The glue adders are the row-base accumulator, the column offset, and the
//! right and lower neighbour addresses. Cell indices and interpolation
//! weights are bit slices of the pixel counters and cost nothing.

use crate::fixedpoint::operator_counts;
use crate::model::LensConfig;

pub const BILINEAR_MULTIPLIERS: usize = 3;
pub const BILINEAR_ADDERS: usize = 6;
pub const SAMPLING_MODULES: usize = 2;
pub const SAMPLING_GLUE_ADDERS: usize = 4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ResourceEstimate {
    pub multipliers: usize,
    pub adders: usize,
    pub dividers: usize,
    pub memory_bits: u64,
}

/// Tally of the fixed-point datapath the on-the-fly mapper runs for `cfg`.
pub fn estimate_onthefly(cfg: &LensConfig) -> ResourceEstimate {
    let ops = operator_counts(cfg);
    ResourceEstimate {
        multipliers: ops.multipliers,
        adders: ops.adders,
        dividers: ops.dividers,
        memory_bits: 0,
    }
}

/// One bilinear interpolation module.
pub fn bilinear_module() -> ResourceEstimate {
    ResourceEstimate {
        multipliers: BILINEAR_MULTIPLIERS,
        adders: BILINEAR_ADDERS,
        dividers: 0,
        memory_bits: 0,
    }
}

/// Two bilinear modules plus address glue; only the sample storage depends
/// on the grid.
pub fn estimate_sampling(grid_w: usize, grid_h: usize, bits_per_sample: u32) -> ResourceEstimate {
    let module = bilinear_module();
    ResourceEstimate {
        multipliers: SAMPLING_MODULES * module.multipliers,
        adders: SAMPLING_MODULES * module.adders + SAMPLING_GLUE_ADDERS,
        dividers: 0,
        memory_bits: (grid_w * grid_h) as u64 * 2 * bits_per_sample as u64,
    }
}

/// Full-resolution LUT held in (external) memory; no map arithmetic.
pub fn estimate_full_lut(width: usize, height: usize, bits_per_value: u32) -> ResourceEstimate {
    ResourceEstimate {
        memory_bits: (width * height) as u64 * 2 * bits_per_value as u64,
        ..Default::default()
    }
}
