use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use lensremap::eval::{export_heatmap, sweep_with, SweepGrid};
use lensremap::fixedpoint::{onthefly_field, QFormat};
use lensremap::io::{load_config, read_map, read_pnm, write_map, write_pnm, MapArtifact};
use lensremap::model::build_reference_map;
use lensremap::remap::{remap_image, required_lines, stream_remap_with, BorderPolicy, BufferSizing, MapProvider};
use lensremap::resources::{estimate_full_lut, estimate_onthefly, estimate_sampling};
use lensremap::sampling::{grid_len, subsample, DEFAULT_SAMPLE_FRAC_BITS};
use lensremap::{LensConfig, RemapField};

use crate::{ApproachKind, ApproachParams, Border, Cli, Command, Lines, Mode, OptionalConfigSource};

const DEFAULT_FRAC_BITS: u32 = 16;
const DEFAULT_SAMPLING_FACTOR: u32 = 5;

pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Display) -> Self {
        CliError {
            code: 2,
            message: message.to_string(),
        }
    }
}

impl From<lensremap::Error> for CliError {
    fn from(e: lensremap::Error) -> Self {
        CliError {
            code: if e.is_validation() { 2 } else { 3 },
            message: e.to_string(),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Adds the offending path to I/O failures.
fn with_path<T>(path: &Path, r: lensremap::Result<T>) -> Result<T> {
    r.map_err(|e| {
        let mut err = CliError::from(e);
        err.message = format!("{}: {}", path.display(), err.message);
        err
    })
}

/// Like `with_path`, but a file that cannot be read is a usage error.
fn input<T>(path: &Path, r: lensremap::Result<T>) -> Result<T> {
    let unreadable = matches!(r, Err(lensremap::Error::Io(_)));
    with_path(path, r).map_err(|mut e| {
        if unreadable {
            e.code = 2;
        }
        e
    })
}

fn io<T>(path: &Path, r: std::io::Result<T>) -> Result<T> {
    r.map_err(|e| CliError {
        code: 3,
        message: format!("{}: {e}", path.display()),
    })
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::usage(format!("cannot configure threads: {e}")))?;
    }
    match cli.command {
        Command::GenMap { source, out } => gen_map(&source.config, &source.params, &out),
        Command::Undistort {
            image,
            map,
            source,
            mode,
            lines,
            border,
            out,
        } => undistort(&image, map.as_deref(), &source, mode, lines, border, &out),
        Command::Sweep {
            config,
            factors,
            frac_bits,
            n,
            sample_frac_bits,
            out,
            heatmaps,
            heatmap_scale,
            plot_data,
        } => {
            let grid = SweepGrid {
                factors,
                frac_bits,
                sampling: n,
                sample_frac_bits,
            };
            run_sweep(&config, &grid, &out, heatmaps.as_deref(), heatmap_scale, plot_data.as_deref())
        }
        Command::Estimate {
            config,
            n,
            sample_frac_bits,
            lut_bits,
        } => estimate(&config, &n, sample_frac_bits, lut_bits),
        Command::Inspect { map, source } => inspect(map.as_deref(), &source),
    }
}

/// Concrete map choice after checking that only relevant flags were given.
enum Choice {
    Reference,
    OnTheFly(QFormat),
    Sampled { n: u32, sample_frac_bits: u32 },
}

fn choose(p: &ApproachParams) -> Result<Choice> {
    let reject = |flag: &str, given: bool, allowed: ApproachKind| {
        if given && p.approach != allowed {
            Err(CliError::usage(format!(
                "--{flag} does not apply to --approach {}",
                approach_name(p.approach)
            )))
        } else {
            Ok(())
        }
    };
    reject("frac-bits", p.frac_bits.is_some(), ApproachKind::Onthefly)?;
    reject("n", p.n.is_some(), ApproachKind::Sampled)?;
    reject("sample-frac-bits", p.sample_frac_bits.is_some(), ApproachKind::Sampled)?;
    Ok(match p.approach {
        ApproachKind::Reference | ApproachKind::FullLut => Choice::Reference,
        ApproachKind::Onthefly => Choice::OnTheFly(QFormat::with_frac_bits(p.frac_bits.unwrap_or(DEFAULT_FRAC_BITS))?),
        ApproachKind::Sampled => Choice::Sampled {
            n: p.n.unwrap_or(DEFAULT_SAMPLING_FACTOR),
            sample_frac_bits: p.sample_frac_bits.unwrap_or(DEFAULT_SAMPLE_FRAC_BITS),
        },
    })
}

fn approach_name(kind: ApproachKind) -> &'static str {
    match kind {
        ApproachKind::Reference => "reference",
        ApproachKind::FullLut => "full-lut",
        ApproachKind::Onthefly => "onthefly",
        ApproachKind::Sampled => "sampled",
    }
}

fn load(config: &Path, factor: Option<f64>) -> Result<LensConfig> {
    let cfg = input(config, load_config(config))?;
    match factor {
        Some(f) => Ok(cfg.with_distortion_factor(f)?),
        None => Ok(cfg),
    }
}

fn build(cfg: &LensConfig, choice: &Choice) -> Result<MapArtifact> {
    Ok(match *choice {
        Choice::Reference => MapArtifact::Dense(build_reference_map(cfg)?),
        Choice::OnTheFly(fmt) => MapArtifact::Dense(onthefly_field(cfg, fmt)?),
        Choice::Sampled { n, sample_frac_bits } => {
            MapArtifact::Sampled(subsample(&build_reference_map(cfg)?, n, sample_frac_bits)?)
        }
    })
}

fn gen_map(config: &Path, params: &ApproachParams, out: &Path) -> Result<()> {
    let choice = choose(params)?;
    let cfg = load(config, params.factor)?;
    let artifact = build(&cfg, &choice)?;
    with_path(out, write_map(out, &artifact))?;
    match &artifact {
        MapArtifact::Dense(f) => println!("wrote FMAP {}x{} to {}", f.width(), f.height(), out.display()),
        MapArtifact::Sampled(s) => {
            let (gw, gh) = s.grid_size();
            println!(
                "wrote SMAP n={} grid {gw}x{gh} ({} samples per axis, {} bits each) to {}",
                s.sampling_factor(),
                s.sample_count(),
                s.bits_per_sample(),
                out.display()
            );
        }
    }
    Ok(())
}

/// Map owned for the lifetime of a provider borrowed from it.
enum Held {
    Artifact(MapArtifact),
    OnTheFly(LensConfig, QFormat),
}

fn hold(map: Option<&Path>, source: &OptionalConfigSource) -> Result<Held> {
    match (map, &source.config) {
        (Some(path), _) => Ok(Held::Artifact(input(path, read_map(path))?)),
        (None, Some(config)) => {
            let choice = choose(&source.params)?;
            let cfg = load(config, source.params.factor)?;
            match choice {
                Choice::OnTheFly(fmt) => Ok(Held::OnTheFly(cfg, fmt)),
                other => Ok(Held::Artifact(build(&cfg, &other)?)),
            }
        }
        (None, None) => Err(CliError::usage("either --map or --config is required")),
    }
}

fn provider(held: &Held) -> Result<MapProvider<'_>> {
    Ok(match held {
        Held::Artifact(MapArtifact::Dense(f)) => MapProvider::Dense(f),
        Held::Artifact(MapArtifact::Sampled(s)) => MapProvider::Sampled(s),
        Held::OnTheFly(cfg, fmt) => MapProvider::on_the_fly(cfg, *fmt)?,
    })
}

fn undistort(
    image: &Path,
    map: Option<&Path>,
    source: &OptionalConfigSource,
    mode: Mode,
    lines: Option<Lines>,
    border: Border,
    out: &Path,
) -> Result<()> {
    if lines.is_some() && mode != Mode::Stream {
        return Err(CliError::usage("--lines only applies to --mode stream"));
    }
    let border = match border {
        Border::Zero => BorderPolicy::Constant(0),
        Border::Clamp => BorderPolicy::Clamp,
    };
    let held = hold(map, source)?;
    let provider = provider(&held)?;
    let src = input(image, read_pnm(image))?;
    let corrected = match mode {
        Mode::Offline => remap_image(&src, &provider, border)?,
        Mode::Stream => {
            if provider.dims() != (src.width(), src.height()) {
                return Err(lensremap::Error::DimensionMismatch {
                    expected: provider.dims(),
                    found: (src.width(), src.height()),
                }
                .into());
            }
            let auto = required_lines(&provider.to_field()?.displacement_bounds());
            let sizing = match lines.unwrap_or(Lines::Auto) {
                Lines::Auto => auto,
                Lines::Count(n) => BufferSizing { lines: n, ..auto },
            };
            eprintln!(
                "stream: {} lines (auto {}), read delay {} rows",
                sizing.lines, auto.lines, sizing.read_delay
            );
            stream_remap_with(&src, &provider, sizing, border)?
        }
    };
    with_path(out, write_pnm(out, &corrected))
}

fn cell_file(dir: &Path, approach: &str, param: u32, factor: f64, ext: &str) -> PathBuf {
    dir.join(format!("{approach}_{param}_factor{factor}.{ext}"))
}

fn run_sweep(
    config: &Path,
    grid: &SweepGrid,
    out: &Path,
    heatmaps: Option<&Path>,
    heatmap_scale: f64,
    plot_data: Option<&Path>,
) -> Result<()> {
    if !(heatmap_scale > 0.0 && heatmap_scale.is_finite()) {
        return Err(CliError::usage(format!("--heatmap-scale must be positive, got {heatmap_scale}")));
    }
    if let Some(f) = grid.factors.iter().find(|f| !(**f >= 0.0 && f.is_finite())) {
        return Err(CliError::usage(format!("distortion factors must be finite and >= 0, got {f}")));
    }
    let base = load(config, None)?;
    for dir in [heatmaps, plot_data].into_iter().flatten() {
        io(dir, fs::create_dir_all(dir))?;
    }
    let mut written: Result<()> = Ok(());
    let result = sweep_with(&base, grid, |cell| {
        let r = &cell.row;
        if let Some(dir) = heatmaps {
            let path = cell_file(dir, r.approach, r.param, r.factor, "pgm");
            write_pnm(&path, &export_heatmap(&cell.report, heatmap_scale)?)?;
        }
        if let Some(dir) = plot_data {
            let path = cell_file(dir, r.approach, r.param, r.factor, "f32");
            if let Err(e) = fs::write(&path, cell.report.error_plane_f32_le()) {
                written = io(&path, Err(e));
            }
        }
        Ok(())
    })?;
    written?;
    io(out, fs::write(out, result.to_csv()))?;
    println!("wrote {} rows to {}", result.rows.len(), out.display());
    Ok(())
}

fn estimate(config: &Path, ns: &[u32], sample_frac_bits: u32, lut_bits: u32) -> Result<()> {
    let cfg = load(config, None)?;
    let sample_bits = QFormat::new(sample_frac_bits, lensremap::sampling::DEFAULT_SAMPLE_INT_BITS)?.total_bits();
    let (w, h) = (cfg.image_width, cfg.image_height);
    let mut rows = vec![
        ("full-lut".to_string(), estimate_full_lut(w, h, lut_bits)),
        ("onthefly".to_string(), estimate_onthefly(&cfg)),
    ];
    for &n in ns {
        if !(1..=lensremap::sampling::MAX_SAMPLING_FACTOR).contains(&n) || (1usize << n) >= w.min(h) {
            return Err(CliError::usage(format!("sampling factor {n} does not fit a {w}x{h} image")));
        }
        rows.push((format!("sampled n={n}"), estimate_sampling(grid_len(w, n), grid_len(h, n), sample_bits)));
    }
    println!("{:<14} {:>5} {:>5} {:>5} {:>12}", "approach", "mul", "add", "div", "memory_bits");
    for (name, e) in rows {
        println!(
            "{name:<14} {:>5} {:>5} {:>5} {:>12}",
            e.multipliers, e.adders, e.dividers, e.memory_bits
        );
    }
    Ok(())
}

fn inspect(map: Option<&Path>, source: &OptionalConfigSource) -> Result<()> {
    let held = hold(map, source)?;
    let field: RemapField = match &held {
        Held::Artifact(MapArtifact::Dense(f)) => {
            println!("kind: dense");
            f.clone()
        }
        Held::Artifact(MapArtifact::Sampled(s)) => {
            let (gw, gh) = s.grid_size();
            println!("kind: sampled");
            println!("sampling factor: {} (pitch {} px)", s.sampling_factor(), s.pitch());
            println!("grid: {gw}x{gh}, {} samples per axis", s.sample_count());
            println!("sample format: Q{}.{}", s.sample_format().int_bits(), s.sample_format().frac_bits());
            println!("memory: {} bits", s.memory_footprint(s.bits_per_sample()));
            provider(&held)?.to_field()?
        }
        Held::OnTheFly(_, fmt) => {
            println!("kind: onthefly ({fmt})");
            provider(&held)?.to_field()?
        }
    };
    let b = field.displacement_bounds();
    let sizing = required_lines(&b);
    println!("size: {}x{}", field.width(), field.height());
    println!("dx: [{:.6}, {:.6}]", b.min_dx, b.max_dx);
    println!("dy: [{:.6}, {:.6}]", b.min_dy, b.max_dy);
    println!("line buffer: {} lines, read delay {} rows", sizing.lines, sizing.read_delay);
    Ok(())
}
