//! The end-to-end detector: pool, segment, stack, solve, binarize.

use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gmp::{pool_sequence, PoolingConfig};
use crate::imaging::{self, Frame, FrameSequence, ImagingError};
use crate::partition::GroupPartition;
use crate::segmentation::{segment_video, SegmentationConfig, SegmentationError};
use crate::solver::{
    solve_with, Decomposition, IterationState, Penalty, SolverConfig, SolverError, WeightMode,
};

pub const DEFAULT_EPSILON: f64 = 1e-6 * 255.0;

#[derive(Debug, Error)]
pub enum DetectionError {
    #[error("input: {0}")]
    Input(#[source] ImagingError),
    #[error("segmentation: {0}")]
    Segmentation(#[from] SegmentationError),
    #[error("solver: {0}")]
    Solver(#[from] SolverError),
    #[error("binarize: {0}")]
    Binarize(String),
    #[error("config: {0}")]
    Config(String),
}

/// Binary foreground masks, one per frame, values in {0, 255}.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskSequence {
    frames: Vec<Frame>,
}

impl MaskSequence {
    /// Fails unless every frame has the same size and holds only 0 or 255.
    pub fn new(frames: Vec<Frame>) -> Result<Self, DetectionError> {
        let Some(first) = frames.first() else {
            return Err(DetectionError::Binarize("no masks".into()));
        };
        let (w, h) = (first.width(), first.height());
        for (i, f) in frames.iter().enumerate() {
            if (f.width(), f.height()) != (w, h) {
                return Err(DetectionError::Binarize(format!(
                    "mask {i} is {}x{}, expected {w}x{h}",
                    f.width(),
                    f.height()
                )));
            }
            if let Some(v) = f.data().iter().find(|&&v| v != 0 && v != 255) {
                return Err(DetectionError::Binarize(format!(
                    "mask {i} holds value {v}"
                )));
            }
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn foreground_pixels(&self) -> usize {
        self.frames
            .iter()
            .map(|f| f.data().iter().filter(|&&v| v == 255).count())
            .sum()
    }

    /// Writes `bin000001.png`, `bin000002.png`, ...
    pub fn save(&self, dir: &Path) -> Result<Vec<PathBuf>, ImagingError> {
        imaging::save_frames(&self.frames, dir, "bin", "png")
    }

    /// Reads `bin*.png` in filename order. Nonzero pixels become 255.
    pub fn load(dir: &Path) -> Result<Self, DetectionError> {
        let files = imaging::matching_files(dir, "bin*.png").map_err(DetectionError::Input)?;
        if files.is_empty() {
            return Err(DetectionError::Input(ImagingError::NoFrames {
                dir: dir.into(),
                pattern: "bin*.png".into(),
            }));
        }
        let frames = files
            .iter()
            .map(|p| {
                let f = Frame::load(p).map_err(DetectionError::Input)?;
                let data = f
                    .data()
                    .iter()
                    .map(|&v| if v > 0 { 255 } else { 0 })
                    .collect();
                Frame::new(f.width(), f.height(), data).map_err(DetectionError::Input)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(frames)
    }
}

/// Foreground where `|E| > epsilon`, one mask per column of `e`.
pub fn binarize(
    e: &Array2<f64>,
    epsilon: f64,
    width: usize,
    height: usize,
) -> Result<MaskSequence, DetectionError> {
    if e.nrows() != width * height {
        return Err(DetectionError::Binarize(format!(
            "{} rows cannot be reshaped to {width}x{height}",
            e.nrows()
        )));
    }
    if !(epsilon >= 0.0) {
        return Err(DetectionError::Binarize(format!(
            "epsilon must be non-negative (got {epsilon})"
        )));
    }
    if e.iter().any(|v| !v.is_finite()) {
        return Err(DetectionError::Binarize("E has non-finite entries".into()));
    }
    let frames = e
        .columns()
        .into_iter()
        .map(|col| {
            let data = col
                .iter()
                .map(|v| if v.abs() > epsilon { 255 } else { 0 })
                .collect();
            Frame::new(width, height, data).map_err(DetectionError::Input)
        })
        .collect::<Result<Vec<_>, _>>()?;
    MaskSequence::new(frames)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectionMode {
    /// Entrywise RPCA on raw intensities.
    RpcaPixel,
    /// Entrywise RPCA on pooled stable values.
    RpcaStable,
    /// Group-penalized RPCA on pooled stable values.
    #[default]
    ScRpcaStable,
}

impl DetectionMode {
    pub const ALL: [DetectionMode; 3] = [Self::RpcaPixel, Self::RpcaStable, Self::ScRpcaStable];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::RpcaPixel => "rpca-pixel",
            Self::RpcaStable => "rpca-stable",
            Self::ScRpcaStable => "sc-rpca-stable",
        }
    }

    pub fn pools(&self) -> bool {
        !matches!(self, Self::RpcaPixel)
    }
}

impl std::fmt::Display for DetectionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DetectionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                format!("unknown mode '{s}' (expected rpca-pixel, rpca-stable or sc-rpca-stable)")
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    pub mode: DetectionMode,
    pub pooling: PoolingConfig,
    pub segmentation: SegmentationConfig,
    pub solver: SolverConfig,
    pub epsilon: f64,
    pub weight_mode: WeightMode,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            mode: DetectionMode::default(),
            pooling: PoolingConfig::default(),
            segmentation: SegmentationConfig::default(),
            solver: SolverConfig::default(),
            epsilon: DEFAULT_EPSILON,
            weight_mode: WeightMode::default(),
        }
    }
}

impl DetectionConfig {
    pub fn with_mode(mode: DetectionMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), DetectionError> {
        self.segmentation.validate()?;
        self.solver.validate()?;
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(DetectionError::Config(format!(
                "epsilon must be non-negative (got {})",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Masks plus the intermediate artifacts of a run.
#[derive(Clone, Debug)]
pub struct DetectionOutput {
    pub masks: MaskSequence,
    /// Frames fed to the solver: pooled, or the input in `rpca-pixel` mode.
    pub solver_input: FrameSequence,
    pub decomposition: Decomposition,
    /// Present in `sc-rpca-stable` mode.
    pub partition: Option<GroupPartition>,
}

pub fn detect(
    seq: &FrameSequence,
    config: &DetectionConfig,
) -> Result<DetectionOutput, DetectionError> {
    detect_traced(seq, config, None, |_| {})
}

/// [`detect`] with a per-iteration solver observer. In `sc-rpca-stable` mode
/// a given `partition` replaces the segmentation step.
pub fn detect_traced(
    seq: &FrameSequence,
    config: &DetectionConfig,
    partition: Option<GroupPartition>,
    observe: impl FnMut(&IterationState<'_>),
) -> Result<DetectionOutput, DetectionError> {
    config.validate()?;
    if partition.is_some() && config.mode != DetectionMode::ScRpcaStable {
        return Err(DetectionError::Config(format!(
            "a partition only applies to sc-rpca-stable (mode is {})",
            config.mode
        )));
    }
    let input = if config.mode.pools() {
        pool_sequence(seq, &config.pooling)
    } else {
        seq.clone()
    };
    let partition = match (config.mode, partition) {
        (DetectionMode::ScRpcaStable, Some(p)) => Some(p),
        (DetectionMode::ScRpcaStable, None) => Some(segment_video(&input, &config.segmentation)?),
        _ => None,
    };
    let d = imaging::stack(&input).into_array();
    let penalty = match &partition {
        Some(p) => Penalty::Group {
            partition: p,
            mode: config.weight_mode,
        },
        None => Penalty::L1,
    };
    let decomposition = solve_with(&d, penalty, &config.solver, observe)?;
    let masks = binarize(&decomposition.e, config.epsilon, seq.width(), seq.height())?;
    Ok(DetectionOutput {
        masks,
        solver_input: input,
        decomposition,
        partition,
    })
}
