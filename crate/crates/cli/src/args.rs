use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dynabg::detection::DEFAULT_EPSILON;
use dynabg::evaluation::BackgroundKind;
use dynabg::gmp::{PoolingConfig, DEFAULT_SIGMA, DEFAULT_WINDOW};
use dynabg::segmentation::{
    SegmentationConfig, DEFAULT_CENTER_THRESHOLD, DEFAULT_COMPACTNESS, DEFAULT_MERGE_THRESHOLD,
    DEFAULT_SIMILARITY_THRESHOLD, DEFAULT_SUPERPIXELS,
};
use dynabg::solver::{DEFAULT_MAX_ITER, DEFAULT_MU0, DEFAULT_RHO, DEFAULT_TOL};
use dynabg::{DetectionMode, SolverConfig, WeightMode};
use serde::Serialize;

/// Moving object detection in videos with dynamic backgrounds.
#[derive(Debug, Parser)]
#[command(name = "dynabg", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replace every pixel by the Gaussian max-pooled stable value of its window.
    Pool(PoolArgs),
    /// Segment a video into spatio-temporal groups and write the partition.
    Segment(SegmentArgs),
    /// Detect moving objects and write binary masks.
    Detect(DetectArgs),
    /// Score masks against CDNET-style ground truth.
    Eval(EvalArgs),
    /// Generate a synthetic scene with ground truth.
    Synth(SynthArgs),
    /// Time exact recovery on planted low-rank plus group-sparse matrices.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Frame directory, or a video directory with an `input/` subdirectory.
    pub input: PathBuf,
    /// Glob for frame filenames. Defaults to `in*` inside `input/` and `*` otherwise.
    #[arg(long)]
    pub pattern: Option<String>,
    /// Box-downscale factor applied on load.
    #[arg(long, default_value_t = 1)]
    pub downscale: usize,
}

#[derive(Debug, Args)]
pub struct PoolingArgs {
    /// Side of the square sampling window (odd).
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    /// Standard deviation of the Gaussian kernel.
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    pub sigma: f64,
}

impl PoolingArgs {
    pub fn config(&self) -> anyhow::Result<PoolingConfig> {
        Ok(PoolingConfig::new(self.window, self.sigma)?)
    }
}

#[derive(Debug, Args)]
pub struct SegmentationArgs {
    /// Target superpixel count per frame.
    #[arg(long, default_value_t = DEFAULT_SUPERPIXELS)]
    pub superpixels: usize,
    #[arg(long, default_value_t = DEFAULT_COMPACTNESS)]
    pub compactness: f64,
    /// Feature distance below which adjacent superpixels merge.
    #[arg(long, default_value_t = DEFAULT_MERGE_THRESHOLD)]
    pub merge_threshold: f64,
    /// Maximum centroid distance for linking subregions of adjacent frames.
    #[arg(long, default_value_t = DEFAULT_CENTER_THRESHOLD)]
    pub center_threshold: f64,
    /// Feature distance below which linked groups merge.
    #[arg(long, default_value_t = DEFAULT_SIMILARITY_THRESHOLD)]
    pub similarity_threshold: f64,
}

impl SegmentationArgs {
    pub fn config(&self) -> anyhow::Result<SegmentationConfig> {
        let cfg = SegmentationConfig {
            superpixels: self.superpixels,
            compactness: self.compactness,
            merge_threshold: self.merge_threshold,
            center_threshold: self.center_threshold,
            similarity_threshold: self.similarity_threshold,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Sparsity weight. Defaults to 1/sqrt(max(rows, cols)).
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_RHO)]
    pub rho: f64,
    #[arg(long, default_value_t = DEFAULT_MU0)]
    pub mu0: f64,
    /// Relative primal residual at which the solver stops.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Group weight: sqrt (sqrt of group size) or linear (group size).
    #[arg(long, default_value_t = WeightMode::Sqrt)]
    pub weight_mode: WeightMode,
}

impl SolverArgs {
    pub fn config(&self) -> anyhow::Result<SolverConfig> {
        let cfg = SolverConfig {
            lambda: self.lambda,
            mu0: self.mu0,
            rho: self.rho,
            tol: self.tol,
            max_iter: self.max_iter,
            ..SolverConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct PoolArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub pooling: PoolingArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub pooling: PoolingArgs,
    #[command(flatten)]
    pub segmentation: SegmentationArgs,
    /// Segment the frames as loaded instead of their pooled values.
    #[arg(long)]
    pub no_pool: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = DetectionMode::ScRpcaStable)]
    pub mode: DetectionMode,
    #[command(flatten)]
    pub pooling: PoolingArgs,
    #[command(flatten)]
    pub segmentation: SegmentationArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Entries of the sparse term with magnitude above this are foreground.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Partition file from `segment` used instead of segmenting (sc-rpca-stable only).
    #[arg(long)]
    pub partition: Option<PathBuf>,
    /// Write a per-iteration CSV (iteration, residual, objective, rank).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Also write the solver input frames and the partition.
    #[arg(long)]
    pub dump: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory of `bin%06d.png` masks.
    pub masks: PathBuf,
    /// Directory of `gt%06d.png` ground truth.
    pub groundtruth: PathBuf,
    /// Row label in the CSV. Defaults to the video directory name.
    #[arg(long)]
    pub video: Option<String>,
    /// Directory for `metrics.csv` and `metrics.json`. The CSV always goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value = "wave")]
    pub kind: BackgroundKind,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[arg(long, default_value_t = 64)]
    pub height: usize,
    #[arg(long, default_value_t = 30)]
    pub frames: usize,
    /// Standard deviation of additive pixel noise.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 17)]
    pub seed: u64,
    /// Matrix sizes as ROWSxCOLS.
    #[arg(long, value_delimiter = ',', default_value = "100x25,200x50,400x100")]
    pub sizes: Vec<Size>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Directory for `bench_report.json`.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Size {
    pub rows: usize,
    pub cols: usize,
}

impl std::str::FromStr for Size {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("size must look like 200x50 (got '{s}')");
        let (r, c) = s.split_once('x').ok_or_else(bad)?;
        Ok(Self {
            rows: r.trim().parse().map_err(|_| bad())?,
            cols: c.trim().parse().map_err(|_| bad())?,
        })
    }
}
