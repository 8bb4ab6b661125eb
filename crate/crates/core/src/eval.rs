//! Geometric error of candidate maps against the floating-point reference,
//! and distortion-factor sweeps over the approach/parameter grid.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fixedpoint::{onthefly_field, QFormat};
use crate::model::{build_reference_map, LensConfig, RemapField};
use crate::remap::Image;
use crate::resources::{estimate_onthefly, estimate_sampling, ResourceEstimate};
use crate::sampling::{sampled_field, subsample, DEFAULT_SAMPLE_FRAC_BITS};

/// Per-pixel Euclidean error between two maps and its aggregates (px).
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub width: usize,
    pub height: usize,
    pub error_field: Vec<f64>,
    pub rmse: f64,
    pub mean: f64,
    pub max: f64,
    /// Per-axis RMSE, for diagnostics.
    pub rmse_x: f64,
    pub rmse_y: f64,
}

impl EvalReport {
    pub fn error_at(&self, u: usize, v: usize) -> f64 {
        self.error_field[v * self.width + u]
    }

    /// Error plane as little-endian f32, row-major.
    pub fn error_plane_f32_le(&self) -> Vec<u8> {
        self.error_field
            .iter()
            .flat_map(|&e| (e as f32).to_le_bytes())
            .collect()
    }
}

pub fn geometric_error(candidate: &RemapField, reference: &RemapField) -> Result<EvalReport> {
    let dims = (reference.width(), reference.height());
    if (candidate.width(), candidate.height()) != dims {
        return Err(Error::DimensionMismatch {
            expected: dims,
            found: (candidate.width(), candidate.height()),
        });
    }
    let n = candidate.map_x().len();
    let mut error_field = Vec::with_capacity(n);
    let (mut sum, mut sum_sq, mut sum_sq_x, mut sum_sq_y, mut max) = (0.0, 0.0, 0.0, 0.0, 0.0f64);
    let pairs = candidate
        .map_x()
        .iter()
        .zip(reference.map_x())
        .zip(candidate.map_y().iter().zip(reference.map_y()));
    for ((cx, rx), (cy, ry)) in pairs {
        let (dx, dy) = (cx - rx, cy - ry);
        let e = dx.hypot(dy);
        error_field.push(e);
        sum += e;
        sum_sq += e * e;
        sum_sq_x += dx * dx;
        sum_sq_y += dy * dy;
        max = max.max(e);
    }
    let count = n as f64;
    Ok(EvalReport {
        width: dims.0,
        height: dims.1,
        error_field,
        rmse: (sum_sq / count).sqrt(),
        mean: sum / count,
        max,
        rmse_x: (sum_sq_x / count).sqrt(),
        rmse_y: (sum_sq_y / count).sqrt(),
    })
}

/// Grayscale heatmap: `round(255 * min(1, error / scale))`.
pub fn export_heatmap(report: &EvalReport, scale: f64) -> Result<Image> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "heatmap scale must be positive, got {scale}"
        )));
    }
    let data = report
        .error_field
        .iter()
        .map(|&e| (255.0 * (e / scale).min(1.0)).round() as u8)
        .collect();
    Image::new(report.width, report.height, 1, data)
}

/// Normalized autocorrelation of the mean-removed error field along one
/// axis, for lags `0..=max_lag`. Lag 0 is 1 unless the field is constant.
pub fn axis_autocorrelation(report: &EvalReport, along_x: bool, max_lag: usize) -> Vec<f64> {
    autocorrelation(&report.error_field, report.width, report.height, along_x, max_lag)
}

/// Autocorrelation of the error field's first difference along the axis.
/// Differencing removes the smooth growth of the error towards the frame
/// edges and leaves the per-cell pattern of a sampled map.
pub fn difference_autocorrelation(report: &EvalReport, along_x: bool, max_lag: usize) -> Vec<f64> {
    let (w, h) = (report.width, report.height);
    let (dw, dh) = if along_x { (w.saturating_sub(1), h) } else { (w, h.saturating_sub(1)) };
    let e = &report.error_field;
    let step = if along_x { 1 } else { w };
    let diff: Vec<f64> = (0..dh)
        .flat_map(|v| (0..dw).map(move |u| (u, v)))
        .map(|(u, v)| e[v * w + u + step] - e[v * w + u])
        .collect();
    autocorrelation(&diff, dw, dh, along_x, max_lag)
}

fn autocorrelation(plane: &[f64], w: usize, h: usize, along_x: bool, max_lag: usize) -> Vec<f64> {
    if plane.is_empty() {
        return vec![0.0; max_lag + 1];
    }
    let mean = plane.iter().sum::<f64>() / plane.len() as f64;
    let centered: Vec<f64> = plane.iter().map(|e| e - mean).collect();
    let extent = if along_x { w } else { h };
    let lag_value = |lag: usize| -> f64 {
        if lag >= extent {
            return 0.0;
        }
        let (mut acc, mut count) = (0.0, 0usize);
        for v in 0..h {
            for u in 0..w {
                let (u2, v2) = if along_x { (u + lag, v) } else { (u, v + lag) };
                if u2 < w && v2 < h {
                    acc += centered[v * w + u] * centered[v2 * w + u2];
                    count += 1;
                }
            }
        }
        acc / count as f64
    };
    let zero = lag_value(0);
    (0..=max_lag)
        .map(|lag| if zero > 0.0 { lag_value(lag) / zero } else { 0.0 })
        .collect()
}

/// A map approach with its parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Approach {
    OnTheFly { frac_bits: u32 },
    Sampled { n: u32, sample_frac_bits: u32 },
}

impl Approach {
    pub fn id(&self) -> &'static str {
        match self {
            Approach::OnTheFly { .. } => "onthefly",
            Approach::Sampled { .. } => "sampled",
        }
    }

    /// Fractional bits for on-the-fly, sampling factor for sampled.
    pub fn param(&self) -> u32 {
        match *self {
            Approach::OnTheFly { frac_bits } => frac_bits,
            Approach::Sampled { n, .. } => n,
        }
    }

    /// Candidate map for `cfg`, given its reference map, and the hardware
    /// cost of producing it.
    pub fn candidate(&self, cfg: &LensConfig, reference: &RemapField) -> Result<(RemapField, ResourceEstimate)> {
        match *self {
            Approach::OnTheFly { frac_bits } => {
                let field = onthefly_field(cfg, QFormat::with_frac_bits(frac_bits)?)?;
                Ok((field, estimate_onthefly(cfg)))
            }
            Approach::Sampled { n, sample_frac_bits } => {
                let s = subsample(reference, n, sample_frac_bits)?;
                let (gw, gh) = s.grid_size();
                Ok((sampled_field(&s), estimate_sampling(gw, gh, s.bits_per_sample())))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub factors: Vec<f64>,
    pub frac_bits: Vec<u32>,
    pub sampling: Vec<u32>,
    pub sample_frac_bits: u32,
}

impl Default for SweepGrid {
    /// Distortion factors 1..=5, fractional bits {12, 16, 20}, sampling
    /// factors {5, 6, 7} with 8-bit sample fractions.
    fn default() -> Self {
        SweepGrid {
            factors: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            frac_bits: vec![12, 16, 20],
            sampling: vec![5, 6, 7],
            sample_frac_bits: DEFAULT_SAMPLE_FRAC_BITS,
        }
    }
}

impl SweepGrid {
    pub fn approaches(&self) -> Vec<Approach> {
        let onthefly = self.frac_bits.iter().map(|&frac_bits| Approach::OnTheFly { frac_bits });
        let sampled = self.sampling.iter().map(|&n| Approach::Sampled {
            n,
            sample_frac_bits: self.sample_frac_bits,
        });
        onthefly.chain(sampled).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub approach: &'static str,
    pub param: u32,
    pub factor: f64,
    pub rmse: f64,
    pub mean: f64,
    pub max: f64,
    pub resources: ResourceEstimate,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

pub const CSV_HEADER: &str = "approach,param,factor,rmse,mean,max,mem_bits,mul,add,div";

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.approach,
                r.param,
                r.factor,
                r.rmse,
                r.mean,
                r.max,
                r.resources.memory_bits,
                r.resources.multipliers,
                r.resources.adders,
                r.resources.dividers
            ));
        }
        out
    }

    pub fn find(&self, approach: &str, param: u32, factor: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.approach == approach && r.param == param && r.factor == factor)
    }
}

/// One evaluated sweep cell.
#[derive(Debug, Clone)]
pub struct Cell {
    pub row: SweepRow,
    pub report: EvalReport,
}

fn cell_name(approach: &Approach, factor: f64) -> String {
    format!("{} param {} factor {}", approach.id(), approach.param(), factor)
}

/// Evaluates every approach at every factor, calling `visit` on each cell in
/// grid order (factor-major, then approach order).
pub fn sweep_with<F>(base: &LensConfig, grid: &SweepGrid, mut visit: F) -> Result<SweepResult>
where
    F: FnMut(&Cell) -> Result<()>,
{
    if grid.factors.is_empty() {
        return Err(Error::InvalidParameter("sweep needs at least one distortion factor".into()));
    }
    let approaches = grid.approaches();
    let mut rows = Vec::with_capacity(grid.factors.len() * approaches.len());
    for &factor in &grid.factors {
        let cfg = base.with_distortion_factor(factor)?;
        let reference = build_reference_map(&cfg).map_err(|e| Error::InCell {
            cell: format!("reference map factor {factor}"),
            source: Box::new(e),
        })?;
        let cells: Vec<Result<Cell>> = approaches
            .par_iter()
            .map(|approach| {
                let wrap = |e| Error::InCell {
                    cell: cell_name(approach, factor),
                    source: Box::new(e),
                };
                let (field, resources) = approach.candidate(&cfg, &reference).map_err(wrap)?;
                let report = geometric_error(&field, &reference).map_err(wrap)?;
                Ok(Cell {
                    row: SweepRow {
                        approach: approach.id(),
                        param: approach.param(),
                        factor,
                        rmse: report.rmse,
                        mean: report.mean,
                        max: report.max,
                        resources,
                    },
                    report,
                })
            })
            .collect();
        for cell in cells {
            let cell = cell?;
            visit(&cell)?;
            rows.push(cell.row);
        }
    }
    Ok(SweepResult { rows })
}

pub fn sweep(base: &LensConfig, grid: &SweepGrid) -> Result<SweepResult> {
    sweep_with(base, grid, |_| Ok(()))
}
