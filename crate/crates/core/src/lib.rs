//! Moving object detection in videos with dynamic backgrounds.
//!
//! The pipeline replaces raw intensities by Gaussian max-pooled stable values
//! ([`gmp`]), partitions the video into spatio-temporal groups
//! ([`segmentation`]), and separates the stacked frames into a low-rank
//! background and a group-sparse foreground ([`solver`]). [`detection`] wires
//! the stages together and [`evaluation`] scores masks against ground truth.

pub mod detection;
pub mod evaluation;
pub mod fixtures;
pub mod gmp;
pub mod imaging;
pub mod partition;
pub mod segmentation;
pub mod solver;

pub use detection::{detect, DetectionConfig, DetectionMode, DetectionOutput, MaskSequence};
pub use gmp::PoolingConfig;
pub use imaging::{Frame, FrameSequence, PixelMatrix};
pub use partition::GroupPartition;
pub use solver::{Decomposition, SolverConfig, WeightMode};
