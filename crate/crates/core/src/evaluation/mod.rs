//! Scoring foreground masks against ground truth, plus the synthetic scene
//! generator used for desk-scale experiments.
//!
//! Ground truth follows the CDNET 2014 layout: `<video>/groundtruth/gt%06d.png`
//! with labels 0 (static), 50 (shadow), 85 (outside ROI), 170 (unknown) and
//! 255 (motion), and an optional `<video>/temporalROI.txt` holding the first
//! and last evaluated frame numbers. Counts are summed over all evaluated
//! frames before the metrics are computed.

mod metrics;
mod synth;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use metrics::{compare, f_measure, label, metrics, ConfusionCounts, MetricReport};
pub use synth::{synth_scene, BackgroundKind, Scene, SceneConfig};

use crate::detection::MaskSequence;
use crate::imaging::{Frame, ImagingError};

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("{what}: {left:?} vs {right:?} (width, height)")]
    Dimensions {
        what: String,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("missing ground-truth frame {}", .0.display())]
    MissingGroundTruth(PathBuf),
    #[error("invalid temporal ROI file {}: {message}", .path.display())]
    TemporalRoi { path: PathBuf, message: String },
    #[error("invalid scene: {0}")]
    Scene(String),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error("{0}")]
    Io(String),
}

/// Inclusive, 1-based frame range to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalRoi {
    pub first: usize,
    pub last: usize,
}

impl TemporalRoi {
    pub fn contains(&self, frame_number: usize) -> bool {
        (self.first..=self.last).contains(&frame_number)
    }

    pub fn read(path: &Path) -> Result<Self, EvaluationError> {
        let text = std::fs::read_to_string(path).map_err(|e| EvaluationError::TemporalRoi {
            path: path.into(),
            message: e.to_string(),
        })?;
        let nums: Vec<usize> = text
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| EvaluationError::TemporalRoi {
                path: path.into(),
                message: "expected two integers".into(),
            })?;
        match nums[..] {
            [first, last] if first <= last => Ok(Self { first, last }),
            _ => Err(EvaluationError::TemporalRoi {
                path: path.into(),
                message: "expected two integers first <= last".into(),
            }),
        }
    }
}

/// Path of the ground-truth frame for 1-based frame number `n`.
pub fn gt_path(gt_dir: &Path, n: usize) -> PathBuf {
    gt_dir.join(format!("gt{n:06}.png"))
}

/// Looks for `temporalROI.txt` next to the ground-truth directory (the CDNET
/// video root) and then inside it.
pub fn find_temporal_roi(gt_dir: &Path) -> Result<Option<TemporalRoi>, EvaluationError> {
    let candidates = gt_dir
        .parent()
        .map(|p| p.join("temporalROI.txt"))
        .into_iter()
        .chain(std::iter::once(gt_dir.join("temporalROI.txt")));
    for c in candidates {
        if c.is_file() {
            return TemporalRoi::read(&c).map(Some);
        }
    }
    Ok(None)
}

/// Sums confusion counts over every frame of `masks`. Mask `i` (0-based) is
/// compared with `gt%06d.png` numbered `i + 1`; frames outside `roi` are
/// skipped.
pub fn accumulate(
    masks: &MaskSequence,
    gt_dir: &Path,
    roi: Option<TemporalRoi>,
) -> Result<ConfusionCounts, EvaluationError> {
    let mut total = ConfusionCounts::default();
    for (i, mask) in masks.frames().iter().enumerate() {
        let n = i + 1;
        if roi.is_some_and(|r| !r.contains(n)) {
            continue;
        }
        let path = gt_path(gt_dir, n);
        if !path.is_file() {
            return Err(EvaluationError::MissingGroundTruth(path));
        }
        let gt = Frame::load(&path)?;
        total = total
            + compare(mask, &gt, None).map_err(|e| match e {
                EvaluationError::Dimensions { left, right, .. } => EvaluationError::Dimensions {
                    what: format!("frame {}", path.display()),
                    left,
                    right,
                },
                other => other,
            })?;
    }
    Ok(total)
}

/// Micro-averaged metrics of a mask sequence against a ground-truth folder.
pub fn evaluate_sequence(
    masks: &MaskSequence,
    gt_dir: &Path,
) -> Result<MetricReport, EvaluationError> {
    let roi = find_temporal_roi(gt_dir)?;
    Ok(metrics(&accumulate(masks, gt_dir, roi)?))
}

/// One row of a metrics table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoMetrics {
    pub video: String,
    pub recall: f64,
    pub precision: f64,
    #[serde(rename = "fmeasure")]
    pub f_measure: f64,
}

impl VideoMetrics {
    pub fn new(video: impl Into<String>, report: &MetricReport) -> Self {
        Self {
            video: video.into(),
            recall: report.recall,
            precision: report.precision,
            f_measure: report.f_measure,
        }
    }
}

/// Writes `video,recall,precision,fmeasure` rows with a header.
pub fn write_metrics_csv<W: std::io::Write>(
    out: W,
    rows: &[VideoMetrics],
) -> Result<(), EvaluationError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)
            .map_err(|e| EvaluationError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| EvaluationError::Io(e.to_string()))
}
