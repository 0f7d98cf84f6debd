//! Video segmentation: the spatio-temporal group partition consumed by the
//! segmentation-constrained solver.
//!
//! Each frame is oversegmented into superpixels ([`oversegment`]), the
//! superpixels are merged into subregions ([`segment_frame`]), and
//! subregions of adjacent frames are linked into groups ([`link_frames`]).
//! Region similarity everywhere is the Euclidean distance between
//! `(mean, standard deviation)` intensity features.

mod link;
mod regions;
mod superpixel;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use link::{link_frames, link_frames_traced, LinkOutcome};
pub use regions::segment_frame;
pub use superpixel::{oversegment, Superpixel, SuperpixelMap};

use crate::imaging::FrameSequence;
pub use crate::partition::{GroupPartition, PartitionStats};

#[derive(Debug, Error, PartialEq)]
pub enum SegmentationError {
    #[error("superpixel count must be between 1 and the pixel count {pixels} (got {target})")]
    TargetCount { target: usize, pixels: usize },
    #[error("compactness must be positive (got {0})")]
    Compactness(f64),
    #[error("{name} must be non-negative (got {value})")]
    Threshold { name: &'static str, value: f64 },
    #[error("labels do not form a partition: {0}")]
    NotAPartition(String),
}

/// Running intensity and position sums of a pixel set.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RegionStats {
    pub count: usize,
    pub sum: f64,
    pub sum_sq: f64,
    pub sum_x: f64,
    pub sum_y: f64,
}

impl RegionStats {
    pub fn add(&mut self, x: usize, y: usize, v: u8) {
        let v = v as f64;
        self.count += 1;
        self.sum += v;
        self.sum_sq += v * v;
        self.sum_x += x as f64;
        self.sum_y += y as f64;
    }

    pub fn merge(&mut self, other: &RegionStats) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.sum_x += other.sum_x;
        self.sum_y += other.sum_y;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        (self.sum_sq / self.count as f64 - m * m).max(0.0)
    }

    pub fn centroid(&self) -> (f64, f64) {
        let c = self.count as f64;
        (self.sum_x / c, self.sum_y / c)
    }

    pub fn feature_distance(&self, other: &RegionStats) -> f64 {
        let dm = self.mean() - other.mean();
        let ds = self.variance().sqrt() - other.variance().sqrt();
        (dm * dm + ds * ds).sqrt()
    }
}

/// A merged cluster of superpixels within one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Subregion {
    pub frame_index: usize,
    /// Flat pixel indices, ascending.
    pub pixels: Vec<usize>,
    pub centroid: (f64, f64),
    /// `(mean intensity, intensity variance)`.
    pub feature: (f64, f64),
    pub stats: RegionStats,
}

pub const DEFAULT_SUPERPIXELS: usize = 200;
pub const DEFAULT_COMPACTNESS: f64 = 10.0;
pub const DEFAULT_MERGE_THRESHOLD: f64 = 12.0;
pub const DEFAULT_CENTER_THRESHOLD: f64 = 20.0;
pub const DEFAULT_SIMILARITY_THRESHOLD: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentationConfig {
    pub superpixels: usize,
    pub compactness: f64,
    pub merge_threshold: f64,
    /// Maximum centroid distance (pixels) for linking adjacent frames.
    pub center_threshold: f64,
    pub similarity_threshold: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            superpixels: DEFAULT_SUPERPIXELS,
            compactness: DEFAULT_COMPACTNESS,
            merge_threshold: DEFAULT_MERGE_THRESHOLD,
            center_threshold: DEFAULT_CENTER_THRESHOLD,
            similarity_threshold: DEFAULT_SIMILARITY_THRESHOLD,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<(), SegmentationError> {
        if self.superpixels == 0 {
            return Err(SegmentationError::TargetCount {
                target: 0,
                pixels: 0,
            });
        }
        if !(self.compactness > 0.0 && self.compactness.is_finite()) {
            return Err(SegmentationError::Compactness(self.compactness));
        }
        for (name, value) in [
            ("merge threshold", self.merge_threshold),
            ("center threshold", self.center_threshold),
            ("similarity threshold", self.similarity_threshold),
        ] {
            if !(value >= 0.0) {
                return Err(SegmentationError::Threshold { name, value });
            }
        }
        Ok(())
    }
}

/// Per-pixel subregion index for one frame.
pub fn subregion_labels(regions: &[Subregion], pixels_per_frame: usize) -> Vec<u32> {
    let mut labels = vec![u32::MAX; pixels_per_frame];
    for (i, r) in regions.iter().enumerate() {
        for &p in &r.pixels {
            labels[p] = i as u32;
        }
    }
    labels
}

/// Checks that `labels` assigns every pixel to one of `count` nonempty,
/// 4-connected regions.
pub fn check_frame_partition(
    labels: &[u32],
    count: usize,
    w: usize,
    h: usize,
) -> Result<(), SegmentationError> {
    let fail = |m: String| Err(SegmentationError::NotAPartition(m));
    if labels.len() != w * h {
        return fail(format!("{} labels for {} pixels", labels.len(), w * h));
    }
    if let Some(p) = labels.iter().position(|&l| l as usize >= count) {
        return fail(format!("pixel {p} has no valid label"));
    }
    let relabeled = superpixel::enforce_connectivity(labels, w, h, 1);
    let components = relabeled.iter().max().map_or(0, |&m| m as usize + 1);
    if components != count {
        return fail(format!(
            "{count} labels but {components} connected components"
        ));
    }
    Ok(())
}

/// Runs the full segmentation on a (pooled) frame sequence.
pub fn segment_video(
    seq: &FrameSequence,
    config: &SegmentationConfig,
) -> Result<GroupPartition, SegmentationError> {
    Ok(segment_video_traced(seq, config)?.partition)
}

pub fn segment_video_traced(
    seq: &FrameSequence,
    config: &SegmentationConfig,
) -> Result<LinkOutcome, SegmentationError> {
    config.validate()?;
    let per_frame = seq
        .frames()
        .par_iter()
        .enumerate()
        .map(|(k, frame)| {
            let map = oversegment(
                frame,
                config.superpixels.min(frame.len()),
                config.compactness,
            )?;
            Ok(segment_frame(&map, k, config.merge_threshold))
        })
        .collect::<Result<Vec<_>, SegmentationError>>()?;
    Ok(link_frames_traced(
        &per_frame,
        seq.pixels_per_frame(),
        config.center_threshold,
        config.similarity_threshold,
    ))
}
