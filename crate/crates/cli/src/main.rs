//! `lensremap`: build, apply, evaluate and cost lens-correction maps.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "lensremap", version, about = "Lens distortion correction maps and their hardware approximations")]
pub struct Cli {
    /// Worker threads for map evaluation (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a map file: FMAP for dense maps, SMAP for sampled ones.
    GenMap {
        #[command(flatten)]
        source: ConfigSource,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Correct an image with a stored map or one built from a configuration.
    Undistort {
        /// Input PGM/PPM.
        #[arg(long, short)]
        image: PathBuf,
        /// Stored FMAP or SMAP file, instead of --config.
        #[arg(long, conflicts_with_all = ["config", "approach", "frac_bits", "n", "sample_frac_bits", "factor"])]
        map: Option<PathBuf>,
        #[command(flatten)]
        source: OptionalConfigSource,
        #[arg(long, value_enum, default_value_t = Mode::Offline)]
        mode: Mode,
        /// Line-buffer rows for stream mode: a count or `auto`.
        #[arg(long)]
        lines: Option<Lines>,
        #[arg(long, value_enum, default_value_t = Border::Zero)]
        border: Border,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Evaluate every approach over a range of distortion factors.
    Sweep {
        #[arg(long, short)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 3.0, 4.0, 5.0])]
        factors: Vec<f64>,
        /// On-the-fly fractional bits.
        #[arg(long, value_delimiter = ',', default_values_t = [12, 16, 20])]
        frac_bits: Vec<u32>,
        /// Sampling factors (grid pitch 2^n).
        #[arg(long, value_delimiter = ',', default_values_t = [5, 6, 7])]
        n: Vec<u32>,
        #[arg(long, default_value_t = lensremap::sampling::DEFAULT_SAMPLE_FRAC_BITS)]
        sample_frac_bits: u32,
        /// CSV output.
        #[arg(long, short)]
        out: PathBuf,
        /// Directory for one PGM error heatmap per cell.
        #[arg(long)]
        heatmaps: Option<PathBuf>,
        /// Error in pixels shown at full intensity.
        #[arg(long, default_value_t = 1.0, requires = "heatmaps")]
        heatmap_scale: f64,
        /// Directory for raw per-cell error planes (little-endian f32, row-major).
        #[arg(long)]
        plot_data: Option<PathBuf>,
    },
    /// Print operator and memory estimates for each approach.
    Estimate {
        #[arg(long, short)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [5, 6, 7])]
        n: Vec<u32>,
        #[arg(long, default_value_t = lensremap::sampling::DEFAULT_SAMPLE_FRAC_BITS)]
        sample_frac_bits: u32,
        /// Bits per stored value of a full-resolution LUT.
        #[arg(long, default_value_t = 32)]
        lut_bits: u32,
    },
    /// Print statistics and displacement bounds of a map.
    Inspect {
        #[arg(long, conflicts_with_all = ["config", "approach", "frac_bits", "n", "sample_frac_bits", "factor"])]
        map: Option<PathBuf>,
        #[command(flatten)]
        source: OptionalConfigSource,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ApproachKind {
    /// Floating-point reference map.
    Reference,
    /// Dense LUT holding the reference map.
    FullLut,
    /// Fixed-point model evaluated per pixel.
    Onthefly,
    /// Subsampled LUT with bilinear reconstruction.
    Sampled,
}

/// Map construction parameters shared by the subcommands.
#[derive(Args, Debug, Clone)]
pub struct ApproachParams {
    #[arg(long, value_enum, default_value_t = ApproachKind::Reference)]
    pub approach: ApproachKind,
    /// Fractional bits (onthefly only).
    #[arg(long)]
    pub frac_bits: Option<u32>,
    /// Sampling factor, grid pitch 2^n (sampled only).
    #[arg(long)]
    pub n: Option<u32>,
    /// Fractional bits of stored samples (sampled only).
    #[arg(long)]
    pub sample_frac_bits: Option<u32>,
    /// Multiplies the configured distortion coefficients.
    #[arg(long)]
    pub factor: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ConfigSource {
    /// Lens configuration JSON.
    #[arg(long, short)]
    pub config: PathBuf,
    #[command(flatten)]
    pub params: ApproachParams,
}

#[derive(Args, Debug)]
pub struct OptionalConfigSource {
    /// Lens configuration JSON.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub params: ApproachParams,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Offline,
    Stream,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Border {
    /// Outside taps read 0.
    Zero,
    /// Outside taps read the nearest edge pixel.
    Clamp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lines {
    Auto,
    Count(usize),
}

impl std::str::FromStr for Lines {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(Lines::Auto);
        }
        s.parse()
            .map(Lines::Count)
            .map_err(|_| format!("expected a row count or `auto`, got `{s}`"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
