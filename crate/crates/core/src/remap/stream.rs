//! Row-granular model of the streaming datapath: input rows enter a circular
//! buffer split over four parity-interleaved banks, and output rows are
//! produced `read_delay` rows later at the same cadence.

use crate::error::{Error, Result};
use crate::model::DisplacementBounds;

use super::{blend, border_value, check_dims, resolve_tap, split_coord, tap_offsets, BorderPolicy, Image, MapProvider};

/// Bank holding source pixel `(x, y)`. Any 2x2 quartet spans all four banks.
#[inline]
pub fn bank_index(x: usize, y: usize) -> usize {
    2 * (y % 2) + (x % 2)
}

/// Line capacity of the circular buffer and the output read delay, in rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BufferSizing {
    pub lines: usize,
    pub read_delay: usize,
}

/// Smallest buffer that serves every bilinear tap of a map with the given
/// displacement bounds.
///
/// Output row `v` reads source rows `v + floor(dy)` and `v + floor(dy) + 1`.
/// Emitting it `read_delay = max(0, ceil(max_dy)) + 1` rows after input row
/// `v` arrives guarantees the lower tap exists; the buffer must then still
/// hold row `v + floor(min_dy)`.
pub fn required_lines(bounds: &DisplacementBounds) -> BufferSizing {
    let ahead = bounds.max_dy.ceil().max(0.0) as i64;
    let behind = bounds.min_dy.floor() as i64;
    let lines = (ahead - behind + 2).max(2) as usize;
    BufferSizing {
        lines,
        read_delay: ahead as usize + 1,
    }
}

/// Circular row store over four banks; bank `b` holds the pixels with
/// `bank_index(x, y) == b`. Slot `y % lines` carries row `y`.
#[derive(Debug, Clone)]
pub struct LineBuffer {
    width: usize,
    channels: usize,
    lines: usize,
    banks: [Vec<u8>; 4],
    slot_rows: Vec<Option<usize>>,
    next_row: usize,
}

impl LineBuffer {
    pub fn new(width: usize, channels: usize, lines: usize) -> Result<Self> {
        if lines < 2 {
            return Err(Error::InvalidParameter(format!(
                "line buffer needs at least 2 lines, got {lines}"
            )));
        }
        let bank_len = lines * width.div_ceil(2) * channels;
        Ok(LineBuffer {
            width,
            channels,
            lines,
            banks: std::array::from_fn(|_| vec![0; bank_len]),
            slot_rows: vec![None; lines],
            next_row: 0,
        })
    }

    pub fn lines(&self) -> usize {
        self.lines
    }

    /// Index of the next row to be written.
    pub fn write_row(&self) -> usize {
        self.next_row
    }

    fn offset(&self, x: usize, y: usize) -> usize {
        let slot = y % self.lines;
        (slot * self.width.div_ceil(2) + x / 2) * self.channels
    }

    /// Appends the next input row, evicting the oldest one when full.
    pub fn push_row(&mut self, row: &[u8]) {
        debug_assert_eq!(row.len(), self.width * self.channels);
        let y = self.next_row;
        for (x, px) in row.chunks_exact(self.channels).enumerate() {
            let off = self.offset(x, y);
            self.banks[bank_index(x, y)][off..off + self.channels].copy_from_slice(px);
        }
        self.slot_rows[y % self.lines] = Some(y);
        self.next_row += 1;
    }

    /// Reads pixel `(x, y)`, failing if row `y` is not currently buffered.
    /// `(u, v)` identifies the output pixel for diagnostics.
    pub fn read(&self, x: usize, y: usize, u: usize, v: usize) -> Result<&[u8]> {
        if y >= self.next_row {
            return Err(Error::BufferUnderflow { u, v, row: y as i64 });
        }
        if self.slot_rows[y % self.lines] != Some(y) {
            return Err(Error::BufferOverwritten { u, v, row: y as i64 });
        }
        let off = self.offset(x, y);
        Ok(&self.banks[bank_index(x, y)][off..off + self.channels])
    }
}

/// Streams `src` through a buffer of `lines` rows, with the read delay derived
/// from the provider's own displacement bounds.
pub fn stream_remap(
    src: &Image,
    provider: &MapProvider<'_>,
    lines: usize,
    border: BorderPolicy,
) -> Result<Image> {
    check_dims(src, provider)?;
    let bounds = provider.to_field()?.displacement_bounds();
    let sizing = BufferSizing {
        lines,
        read_delay: required_lines(&bounds).read_delay,
    };
    stream_remap_with(src, provider, sizing, border)
}

/// Streams `src` with an explicit buffer size and read delay.
pub fn stream_remap_with(
    src: &Image,
    provider: &MapProvider<'_>,
    sizing: BufferSizing,
    border: BorderPolicy,
) -> Result<Image> {
    check_dims(src, provider)?;
    let (w, h, ch) = (src.width, src.height, src.channels);
    let mut buffer = LineBuffer::new(w, ch, sizing.lines)?;
    let mut out = Vec::with_capacity(src.data.len());

    for step in 0..h + sizing.read_delay {
        if step < h {
            buffer.push_row(src.row(step));
        }
        let Some(v) = step.checked_sub(sizing.read_delay) else {
            continue;
        };
        if v >= h {
            break;
        }
        for u in 0..w {
            let (sx, sy) = provider.source(u, v)?;
            let px = match split_coord(sx, sy) {
                None => border_value(border),
                Some((i, j, a, b)) => {
                    let mut taps = [[0u8; 3]; 4];
                    let mut seen = [false; 4];
                    for (tap, (di, dj)) in taps.iter_mut().zip(tap_offsets()) {
                        *tap = match resolve_tap(src, i + di, j + dj, border) {
                            Some((x, y)) => {
                                // the four taps of one pixel must come from distinct banks
                                let bank = bank_index(x, y);
                                assert!(
                                    !seen[bank] || border == BorderPolicy::Clamp,
                                    "bank conflict at ({x}, {y})"
                                );
                                seen[bank] = true;
                                let mut t = [0u8; 3];
                                t[..ch].copy_from_slice(buffer.read(x, y, u, v)?);
                                t
                            }
                            None => border_value(border),
                        };
                    }
                    blend(&taps, a, b, ch)
                }
            };
            out.extend_from_slice(&px[..ch]);
        }
    }
    Image::new(w, h, ch, out)
}
