//! Grayscale frames, frame sequences and the column-stacked pixel matrix.
//!
//! Frames are flattened row-major: pixel `(x, y)` of a `width × height` frame
//! lives at flat index `y * width + x`. Every other module (pooling,
//! segmentation, the group partition file format) relies on this order.

use std::path::{Path, PathBuf};

use image::{ColorType, DynamicImage, GrayImage, ImageFormat};
use ndarray::Array2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("frame data has {actual} pixels, expected {width}x{height} = {expected}")]
    DataLength {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },
    #[error("frame must have nonzero width and height (got {width}x{height})")]
    EmptyFrame { width: usize, height: usize },
    #[error("frame sequence needs at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error("frame {index} is {got_width}x{got_height}, expected {width}x{height}")]
    FrameSize {
        index: usize,
        width: usize,
        height: usize,
        got_width: usize,
        got_height: usize,
    },
    #[error("{}: dimension mismatch, {got_width}x{got_height} vs {width}x{height}", .path.display())]
    FileSize {
        path: PathBuf,
        width: usize,
        height: usize,
        got_width: usize,
        got_height: usize,
    },
    #[error("no frames matched '{pattern}' in {}", .dir.display())]
    NoFrames { dir: PathBuf, pattern: String },
    #[error("invalid filename pattern '{0}'")]
    Pattern(String),
    #[error("{}: {source}", .path.display())]
    Decode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("matrix has {rows} rows but frames are {width}x{height}")]
    MatrixShape {
        rows: usize,
        width: usize,
        height: usize,
    },
    #[error("downscale factor must be >= 1")]
    Downscale,
}

pub type Result<T> = std::result::Result<T, ImagingError>;

/// An 8-bit grayscale raster stored row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(ImagingError::EmptyFrame { width, height });
        }
        if data.len() != width * height {
            return Err(ImagingError::DataLength {
                width,
                height,
                expected: width * height,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Result<Self> {
        let data = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    /// Box-filter downscale by an integer factor. Trailing rows/columns that
    /// do not fill a whole block are dropped.
    pub fn downscale(&self, factor: usize) -> Result<Frame> {
        if factor == 0 {
            return Err(ImagingError::Downscale);
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let w = (self.width / factor).max(1);
        let h = (self.height / factor).max(1);
        let fx = factor.min(self.width);
        let fy = factor.min(self.height);
        Frame::from_fn(w, h, |x, y| {
            let mut sum = 0u32;
            for dy in 0..fy {
                for dx in 0..fx {
                    sum += self.get(x * fx + dx, y * fy + dy) as u32;
                }
            }
            let n = (fx * fy) as u32;
            ((sum + n / 2) / n) as u8
        })
    }

    pub fn to_gray_image(&self) -> GrayImage {
        GrayImage::from_raw(self.width as u32, self.height as u32, self.data.clone())
            .expect("frame invariant guarantees buffer length")
    }

    /// Writes the frame; the format follows the extension (`.pgm` writes
    /// binary P5, anything else PNG).
    pub fn save(&self, path: &Path) -> Result<()> {
        let format = match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("pgm") => ImageFormat::Pnm,
            _ => ImageFormat::Png,
        };
        self.to_gray_image()
            .save_with_format(path, format)
            .map_err(|source| ImagingError::Decode {
                path: path.to_path_buf(),
                source,
            })
    }

    pub fn load(path: &Path) -> Result<Frame> {
        let img = image::open(path).map_err(|source| ImagingError::Decode {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(frame_from_image(&img))
    }
}

fn frame_from_image(img: &DynamicImage) -> Frame {
    let (width, height) = (img.width() as usize, img.height() as usize);
    let data = match img.color() {
        ColorType::L8 | ColorType::La8 | ColorType::L16 | ColorType::La16 => {
            img.to_luma8().into_raw()
        }
        _ => img
            .to_rgb8()
            .pixels()
            .map(|p| to_grayscale(p[0], p[1], p[2]))
            .collect(),
    };
    Frame {
        width,
        height,
        data,
    }
}

/// BT.601 luma, rounded to the nearest integer.
pub fn to_grayscale(r: u8, g: u8, b: u8) -> u8 {
    let y = 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64;
    y.round().clamp(0.0, 255.0) as u8
}

/// An ordered list of at least two equally sized frames.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameSequence {
    frames: Vec<Frame>,
}

impl FrameSequence {
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        Self::check_sizes(&frames)?;
        if frames.len() < 2 {
            return Err(ImagingError::TooFewFrames(frames.len()));
        }
        Ok(Self { frames })
    }

    fn check_sizes(frames: &[Frame]) -> Result<()> {
        if let Some(first) = frames.first() {
            for (index, f) in frames.iter().enumerate() {
                if f.width != first.width || f.height != first.height {
                    return Err(ImagingError::FrameSize {
                        index,
                        width: first.width,
                        height: first.height,
                        got_width: f.width,
                        got_height: f.height,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width
    }

    pub fn height(&self) -> usize {
        self.frames[0].height
    }

    pub fn pixels_per_frame(&self) -> usize {
        self.width() * self.height()
    }

    /// Writes every frame as `<dir>/<prefix>%06d.<ext>`, numbered from 1.
    pub fn save_numbered(&self, dir: &Path, prefix: &str, ext: &str) -> Result<Vec<PathBuf>> {
        save_frames(&self.frames, dir, prefix, ext)
    }
}

pub(crate) fn save_frames(
    frames: &[Frame],
    dir: &Path,
    prefix: &str,
    ext: &str,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| ImagingError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let path = dir.join(format!("{prefix}{:06}.{ext}", i + 1));
            f.save(&path)?;
            Ok(path)
        })
        .collect()
}

/// Lists files in `dir` whose name matches the glob `pattern`, sorted
/// lexicographically by filename.
pub fn matching_files(dir: &Path, pattern: &str) -> Result<Vec<PathBuf>> {
    let pat = glob::Pattern::new(pattern).map_err(|_| ImagingError::Pattern(pattern.into()))?;
    let entries = std::fs::read_dir(dir).map_err(|source| ImagingError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| ImagingError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        let matched = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| pat.matches(n));
        if matched && path.is_file() {
            files.push(path);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

/// File extensions [`load_sequence`] treats as frames.
pub const IMAGE_EXTENSIONS: [&str; 6] = ["png", "pgm", "ppm", "pnm", "jpg", "jpeg"];

pub fn is_image_path(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.iter().any(|x| x.eq_ignore_ascii_case(e)))
}

/// Loads every matching image file in lexicographic filename order,
/// converting color inputs to grayscale and optionally box-downscaling.
/// Files without an image extension are skipped.
pub fn load_sequence(dir: &Path, pattern: &str, downscale: usize) -> Result<FrameSequence> {
    if downscale == 0 {
        return Err(ImagingError::Downscale);
    }
    let mut files = matching_files(dir, pattern)?;
    files.retain(|p| is_image_path(p));
    if files.is_empty() {
        return Err(ImagingError::NoFrames {
            dir: dir.to_path_buf(),
            pattern: pattern.into(),
        });
    }
    let mut frames: Vec<Frame> = Vec::with_capacity(files.len());
    for path in &files {
        let frame = Frame::load(path)?.downscale(downscale)?;
        if let Some(first) = frames.first() {
            if first.width != frame.width || first.height != frame.height {
                return Err(ImagingError::FileSize {
                    path: path.clone(),
                    width: first.width,
                    height: first.height,
                    got_width: frame.width,
                    got_height: frame.height,
                });
            }
        }
        frames.push(frame);
    }
    FrameSequence::new(frames)
}

/// Real-valued `m × n` matrix with one flattened frame per column.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelMatrix {
    data: Array2<f64>,
    width: usize,
    height: usize,
}

impl PixelMatrix {
    pub fn from_array(data: Array2<f64>, width: usize, height: usize) -> Result<Self> {
        if data.nrows() != width * height {
            return Err(ImagingError::MatrixShape {
                rows: data.nrows(),
                width,
                height,
            });
        }
        Ok(Self {
            data,
            width,
            height,
        })
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }
}

pub fn stack(seq: &FrameSequence) -> PixelMatrix {
    let m = seq.pixels_per_frame();
    let n = seq.len();
    let mut data = Array2::zeros((m, n));
    for (k, frame) in seq.frames().iter().enumerate() {
        for (j, &v) in frame.data().iter().enumerate() {
            data[[j, k]] = v as f64;
        }
    }
    PixelMatrix {
        data,
        width: seq.width(),
        height: seq.height(),
    }
}

/// Inverse of [`stack`]: rounds and clamps every entry to `[0, 255]`.
pub fn unstack(matrix: &Array2<f64>, width: usize, height: usize) -> Result<FrameSequence> {
    if matrix.nrows() != width * height {
        return Err(ImagingError::MatrixShape {
            rows: matrix.nrows(),
            width,
            height,
        });
    }
    let frames = matrix
        .columns()
        .into_iter()
        .map(|col| {
            let data = col
                .iter()
                .map(|&v| v.round().clamp(0.0, 255.0) as u8)
                .collect();
            Frame::new(width, height, data)
        })
        .collect::<Result<Vec<_>>>()?;
    FrameSequence::new(frames)
}
