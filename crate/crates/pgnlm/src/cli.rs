//! `pgnlm` command line: simulate → filter → evaluate, plus previews.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error,
//! 3 numerical failure in a computed result.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use pgnlm_core::{FilterParams, Grid};

use crate::config::{self, ConfigError};
use crate::evaluate::{self, EvalSettings};
use crate::export;
use crate::io::{self, GridData, IoError, ScalarWidth};
use crate::par;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "pgnlm",
    version,
    about = "Polarimetric guided nonlocal means speckle filtering"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic speckled scene and write slc/optical/labels/sigma grids.
    Simulate(SimulateArgs),
    /// Estimate per-pixel covariance matrices from an SLC grid.
    Filter(FilterArgs),
    /// Cross-validated random-forest accuracy of a covariance grid.
    Evaluate(EvaluateArgs),
    /// Write a PGM of one channel or a PNG composite of a covariance grid.
    Preview(PreviewArgs),
}

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    /// Scene TOML; defaults to the built-in two-class scene.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the seed in the scene file.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 8, value_parser = parse_width)]
    pub scalar_width: u8,
    /// Worker threads, 0 for one per core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Pgnlm,
    Boxcar,
    None,
}

#[derive(Debug, clap::Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub slc: PathBuf,
    /// Optical guide, required for `pgnlm`.
    #[arg(long)]
    pub optical: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Pgnlm)]
    pub method: Method,
    /// Search window side (odd).
    #[arg(long, default_value_t = 39)]
    pub search: usize,
    /// Patch side (odd).
    #[arg(long, default_value_t = 9)]
    pub patch: usize,
    #[arg(long, default_value_t = 0.85)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    /// Reliability cutoff on patch SAR dissimilarity; `inf` disables pruning.
    #[arg(long, default_value_t = FilterParams::default().tau_sar)]
    pub tau_sar: f64,
    #[arg(long, default_value_t = FilterParams::default().n_min)]
    pub n_min: usize,
    /// Boxcar window side (odd).
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 8, value_parser = parse_width)]
    pub scalar_width: u8,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, clap::Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub cov: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// True covariance grid; enables error and ENL metrics.
    #[arg(long)]
    pub sigma: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 200)]
    pub trees: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep at most this many pixels per class (seeded sample).
    #[arg(long)]
    pub per_class_cap: Option<usize>,
    /// Keep each connected label region inside one fold.
    #[arg(long)]
    pub fold_by_region: bool,
    /// Use 10·log10 of the intensity features.
    #[arg(long)]
    pub db: bool,
    /// Label value marking pixels to leave out.
    #[arg(long)]
    pub unlabeled: Option<u32>,
    #[arg(long, default_value = "dataset")]
    pub dataset_name: String,
    #[arg(long, default_value = "filter")]
    pub filter_name: String,
    /// Accuracy CSV; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub features_csv: Option<PathBuf>,
    /// Metrics CSV (needs --sigma).
    #[arg(long)]
    pub metrics_out: Option<PathBuf>,
    /// Half-width of the single-label neighbourhood required for ENL pixels.
    #[arg(long, default_value_t = 2)]
    pub enl_margin: usize,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, clap::Args)]
pub struct PreviewArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// `.png` writes the d11/d22/d33 composite of a covariance grid; anything else a PGM.
    #[arg(long)]
    pub out: PathBuf,
    /// SLC: polarisation intensity 0..3. Covariance: scalar 0..9. Optical: band.
    #[arg(long, default_value_t = 0)]
    pub channel: usize,
}

fn parse_width(s: &str) -> Result<u8, String> {
    match s {
        "4" => Ok(4),
        "8" => Ok(8),
        _ => Err("scalar width must be 4 or 8".into()),
    }
}

/// Failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn data(message: impl ToString) -> Self {
        Failure {
            code: EXIT_DATA,
            message: message.to_string(),
        }
    }

    fn numerical(message: impl ToString) -> Self {
        Failure {
            code: EXIT_NUMERICAL,
            message: message.to_string(),
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::data(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::data(e)
    }
}

impl From<pgnlm_core::Error> for Failure {
    fn from(e: pgnlm_core::Error) -> Self {
        Failure::data(e)
    }
}

type Outcome = Result<(), Failure>;

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(&a, out),
        Command::Filter(a) => filter(&a, out),
        Command::Evaluate(a) => evaluate(&a, out),
        Command::Preview(a) => preview(&a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn width(w: u8) -> ScalarWidth {
    ScalarWidth::from_bytes(w).expect("validated by the parser")
}

fn say(out: &mut dyn Write, line: String) -> Outcome {
    writeln!(out, "{line}").map_err(|e| Failure::data(format!("stdout: {e}")))
}

pub fn simulate(a: &SimulateArgs, out: &mut dyn Write) -> Outcome {
    let mut cfg = match &a.spec {
        Some(p) => config::load_scene(p)?,
        None => config::two_class_scene(),
    };
    if let Some(seed) = a.seed {
        cfg.spec.seed = seed;
    }
    let pool = par::pool(a.threads);
    let (slc, optical, truth) = par::generate_scene(&pool, &cfg.spec)?;
    std::fs::create_dir_all(&a.out).map_err(|source| IoError::Io {
        path: a.out.clone(),
        source,
    })?;
    let w = width(a.scalar_width);
    io::write_grid(a.out.join("slc.psg"), &slc.into(), w)?;
    io::write_grid(a.out.join("optical.psg"), &optical.into(), w)?;
    io::write_grid(a.out.join("labels.psg"), &truth.labels.into(), w)?;
    io::write_grid(a.out.join("sigma.psg"), &truth.sigma_field.into(), w)?;
    let s = &cfg.spec;
    say(
        out,
        format!(
            "simulated {}x{} scene: {} classes, {} regions, {} optical bands, seed {} -> {}",
            s.height,
            s.width,
            s.classes.len(),
            s.regions.len(),
            s.bands(),
            s.seed,
            a.out.display()
        ),
    )
}

fn radius(name: &str, side: usize) -> Result<usize, Failure> {
    if side % 2 == 1 {
        Ok(side / 2)
    } else {
        Err(Failure::data(format!("{name} must be odd, got {side}")))
    }
}

pub fn filter(a: &FilterArgs, out: &mut dyn Write) -> Outcome {
    let slc = io::read_grid(&a.slc)?.into_slc()?;
    let pool = par::pool(a.threads);
    let cov = match a.method {
        Method::None => slc.single_look(),
        Method::Boxcar => par::boxcar_filter(&pool, &slc, a.window)?,
        Method::Pgnlm => {
            let path = a
                .optical
                .as_ref()
                .ok_or_else(|| Failure::data("--optical is required for method pgnlm"))?;
            let optical = io::read_grid(path)?.into_optical()?;
            let params = FilterParams {
                search_radius: radius("search", a.search)?,
                patch_radius: radius("patch", a.patch)?,
                gamma: a.gamma,
                lambda: a.lambda,
                tau_sar: a.tau_sar,
                n_min: a.n_min,
            };
            par::pgnlm_filter(&pool, &slc, &optical, &params)?
        }
    };
    cov.validate()
        .map_err(|e| Failure::numerical(format!("filter output: {e}")))?;
    io::write_grid(&a.out, &cov.into(), width(a.scalar_width))?;
    let (h, w) = slc.dims();
    say(
        out,
        format!(
            "filtered {h}x{w} grid with {:?} -> {}",
            a.method,
            a.out.display()
        )
        .to_lowercase(),
    )
}

pub fn evaluate(a: &EvaluateArgs, out: &mut dyn Write) -> Outcome {
    let cov = io::read_grid(&a.cov)?.into_covariance()?;
    let labels = io::read_grid(&a.labels)?.into_labels()?;
    if cov.dims() != labels.dims() {
        return Err(Failure::data(format!(
            "label grid is {}x{} but covariance grid is {}x{}",
            labels.height(),
            labels.width(),
            cov.height(),
            cov.width()
        )));
    }
    if a.metrics_out.is_some() && a.sigma.is_none() {
        return Err(Failure::data("--metrics-out needs --sigma"));
    }
    let settings = EvalSettings {
        k: a.k,
        n_trees: a.trees,
        seed: a.seed,
        per_class_cap: a.per_class_cap,
        fold_by_region: a.fold_by_region,
        db: a.db,
        unlabeled: a.unlabeled,
    };
    if let Some(path) = &a.features_csv {
        export::write_features_csv(path, &evaluate::features(&cov, a.db), &labels)?;
    }
    let pool = par::pool(a.threads);
    let folds = evaluate::cross_validated_accuracy(&pool, &cov, &labels, &settings)?;
    let rows = export::accuracy_rows(&a.dataset_name, &a.filter_name, &folds);
    let csv = export::accuracy_csv_bytes(&rows);
    match &a.out {
        Some(path) => export::write_bytes(path, &csv)?,
        None => out
            .write_all(&csv)
            .map_err(|e| Failure::data(format!("stdout: {e}")))?,
    }
    let mean = rows.last().expect("mean row").accuracy;
    let mut summary = format!(
        "{} / {}: mean accuracy {mean:.4} over {} folds",
        a.dataset_name, a.filter_name, a.k
    );
    if let Some(path) = &a.sigma {
        let sigma = io::read_grid(path)?.into_covariance()?;
        let m = evaluate::estimation_metrics(&cov, &sigma, &labels, a.enl_margin)?;
        if !m.mean_frobenius_error.is_finite() {
            return Err(Failure::numerical("mean Frobenius error is not finite"));
        }
        summary.push_str(&format!(
            ", mean Frobenius error {:.6}",
            m.mean_frobenius_error
        ));
        for c in &m.per_class {
            if let Some(e) = c.enl[0] {
                summary.push_str(&format!(", class {} HH ENL {e:.2}", c.class));
            }
        }
        if let Some(p) = &a.metrics_out {
            export::write_bytes(p, &evaluate::metrics_csv_bytes(&m))?;
        }
    }
    if a.out.is_some() {
        say(out, summary)?;
    }
    Ok(())
}

pub fn preview(a: &PreviewArgs, out: &mut dyn Write) -> Outcome {
    let grid = io::read_grid(&a.input)?;
    let is_png = a
        .out
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if is_png {
        let GridData::Covariance(cov) = &grid else {
            return Err(Failure::data("PNG composites need a covariance grid"));
        };
        export::write_png_composite(&a.out, cov)?;
    } else {
        export::write_pgm(&a.out, &channel(&grid, a.channel)?)?;
    }
    say(out, format!("wrote {}", a.out.display()))
}

fn channel(grid: &GridData, k: usize) -> Result<Grid<f64>, Failure> {
    let bad = |n: usize| Failure::data(format!("channel {k} out of range (grid has {n})"));
    Ok(match grid {
        GridData::Slc(g) => {
            if k >= 3 {
                return Err(bad(3));
            }
            g.map(|s| s.channels()[k].norm_sqr())
        }
        GridData::Covariance(g) => {
            if k >= 9 {
                return Err(bad(9));
            }
            g.map(|c| c.to_scalars()[k].abs())
        }
        GridData::Optical(g) => {
            if k >= g.bands() {
                return Err(bad(g.bands()));
            }
            Grid::from_fn(g.height(), g.width(), |r, c| g.value(r, c, k))?
        }
        GridData::Labels(g) => g.map(|&l| l as f64),
    })
}

/// Convenience for tests and scripts: runs with `args` and captures output.
pub fn run_captured(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(
        std::iter::once("pgnlm").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (
        code,
        String::from_utf8_lossy(&out).into_owned(),
        String::from_utf8_lossy(&err).into_owned(),
    )
}
