//! Partitions of the entries of an `m × n` pixel matrix into groups.
//!
//! Entry `(j, k)` is pixel `j` of frame `k`. Labels are stored frame-major
//! (`k * m + j`), the same order as the matrix columns.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PartitionError {
    #[error("entry ({0}, {1}) is out of range for a {2}x{3} matrix")]
    OutOfRange(usize, usize, usize, usize),
    #[error("entry ({0}, {1}) belongs to more than one group")]
    Overlap(usize, usize),
    #[error("entry ({0}, {1}) is not covered by any group")]
    Uncovered(usize, usize),
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("expected {expected} labels, got {actual}")]
    LabelCount { expected: usize, actual: usize },
    #[error("partition is {0}x{1} but the matrix is {2}x{3}")]
    Shape(usize, usize, usize, usize),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Io(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupPartition {
    rows: usize,
    cols: usize,
    labels: Vec<u32>,
    sizes: Vec<usize>,
}

impl GroupPartition {
    /// Builds a partition from one label per entry (frame-major). Labels must
    /// be dense: every id in `0..=max` is used at least once.
    pub fn from_labels(rows: usize, cols: usize, labels: Vec<u32>) -> Result<Self, PartitionError> {
        if labels.len() != rows * cols {
            return Err(PartitionError::LabelCount {
                expected: rows * cols,
                actual: labels.len(),
            });
        }
        let count = labels.iter().max().map_or(0, |&l| l as usize + 1);
        let mut sizes = vec![0usize; count];
        for &l in &labels {
            sizes[l as usize] += 1;
        }
        if let Some(g) = sizes.iter().position(|&s| s == 0) {
            return Err(PartitionError::EmptyGroup(g));
        }
        Ok(Self {
            rows,
            cols,
            labels,
            sizes,
        })
    }

    /// Renumbers arbitrary labels to `0..count` in order of first appearance.
    pub fn from_sparse_labels(
        rows: usize,
        cols: usize,
        raw: &[usize],
    ) -> Result<Self, PartitionError> {
        let mut map = BTreeMap::new();
        let mut next = 0u32;
        let mut labels = Vec::with_capacity(raw.len());
        for &r in raw {
            let id = *map.entry(r).or_insert_with(|| {
                next += 1;
                next - 1
            });
            labels.push(id);
        }
        Self::from_labels(rows, cols, labels)
    }

    /// Builds a partition from explicit `(pixel, frame)` member lists,
    /// checking disjointness and coverage.
    pub fn from_groups(
        rows: usize,
        cols: usize,
        groups: &[Vec<(usize, usize)>],
    ) -> Result<Self, PartitionError> {
        let mut labels = vec![u32::MAX; rows * cols];
        for (g, members) in groups.iter().enumerate() {
            if members.is_empty() {
                return Err(PartitionError::EmptyGroup(g));
            }
            for &(j, k) in members {
                if j >= rows || k >= cols {
                    return Err(PartitionError::OutOfRange(j, k, rows, cols));
                }
                let slot = &mut labels[k * rows + j];
                if *slot != u32::MAX {
                    return Err(PartitionError::Overlap(j, k));
                }
                *slot = g as u32;
            }
        }
        if let Some(idx) = labels.iter().position(|&l| l == u32::MAX) {
            return Err(PartitionError::Uncovered(idx % rows, idx / rows));
        }
        Self::from_labels(rows, cols, labels)
    }

    pub fn singletons(rows: usize, cols: usize) -> Self {
        Self::from_labels(rows, cols, (0..(rows * cols) as u32).collect())
            .expect("singleton labels are dense")
    }

    /// One group per matrix column (frame).
    pub fn columns(rows: usize, cols: usize) -> Self {
        let labels = (0..cols as u32)
            .flat_map(|k| std::iter::repeat(k).take(rows))
            .collect();
        Self::from_labels(rows, cols, labels).expect("column labels are dense")
    }

    pub fn whole(rows: usize, cols: usize) -> Self {
        Self::from_labels(rows, cols, vec![0; rows * cols]).expect("single group")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn group_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Frame-major labels (`k * rows + j`).
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, pixel: usize, frame: usize) -> u32 {
        self.labels[frame * self.rows + pixel]
    }

    /// Member lists, one per group, in frame-major order.
    pub fn groups(&self) -> Vec<Vec<(usize, usize)>> {
        let mut out: Vec<Vec<(usize, usize)>> =
            self.sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for (idx, &l) in self.labels.iter().enumerate() {
            out[l as usize].push((idx % self.rows, idx / self.rows));
        }
        out
    }

    pub fn check_shape(&self, rows: usize, cols: usize) -> Result<(), PartitionError> {
        if self.rows != rows || self.cols != cols {
            return Err(PartitionError::Shape(self.rows, self.cols, rows, cols));
        }
        Ok(())
    }

    pub fn stats(&self) -> PartitionStats {
        let mut histogram = BTreeMap::new();
        for &s in &self.sizes {
            *histogram.entry(s).or_insert(0usize) += 1;
        }
        PartitionStats {
            rows: self.rows,
            cols: self.cols,
            group_count: self.sizes.len(),
            entries: self.labels.len(),
            largest_group: self.sizes.iter().copied().max().unwrap_or(0),
            smallest_group: self.sizes.iter().copied().min().unwrap_or(0),
            size_histogram: histogram,
        }
    }

    /// Text form: one `j k group_id` line per entry, frame-major.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (idx, &l) in self.labels.iter().enumerate() {
            writeln!(out, "{} {} {}", idx % self.rows, idx / self.rows, l)?;
        }
        Ok(())
    }

    /// Parses the text form. The matrix shape comes from the caller since
    /// the file only lists entries.
    pub fn read_text<R: BufRead>(
        input: R,
        rows: usize,
        cols: usize,
    ) -> Result<Self, PartitionError> {
        let mut raw = vec![usize::MAX; rows * cols];
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| PartitionError::Io(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: &str| PartitionError::Parse {
                line: i + 1,
                message: message.into(),
            };
            let fields: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|_| parse_err("expected three non-negative integers"))?;
            let [j, k, g] = fields[..] else {
                return Err(parse_err("expected three non-negative integers"));
            };
            if j >= rows || k >= cols {
                return Err(PartitionError::OutOfRange(j, k, rows, cols));
            }
            let slot = &mut raw[k * rows + j];
            if *slot != usize::MAX {
                return Err(PartitionError::Overlap(j, k));
            }
            *slot = g;
        }
        if let Some(idx) = raw.iter().position(|&l| l == usize::MAX) {
            return Err(PartitionError::Uncovered(idx % rows, idx / rows));
        }
        Self::from_sparse_labels(rows, cols, &raw)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionStats {
    pub rows: usize,
    pub cols: usize,
    pub group_count: usize,
    pub entries: usize,
    pub largest_group: usize,
    pub smallest_group: usize,
    /// group size → number of groups of that size
    pub size_histogram: BTreeMap<usize, usize>,
}
