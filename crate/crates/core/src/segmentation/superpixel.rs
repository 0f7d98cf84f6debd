//! SLIC-style oversegmentation of a grayscale frame.
//!
//! Cluster centers start on a regular grid and are refined by local k-means
//! in `(x, y, intensity)` space with distance
//! `√(Δi² + (Δs/S)²·compactness²)`, where `S` is the grid step. A final
//! pass splits every cluster into 4-connected components and folds
//! fragments smaller than a quarter of the nominal superpixel area into an
//! adjacent component, and if more than 1.5× the target count remain the
//! smallest ones are folded into their closest-mean neighbor.

use super::{RegionStats, SegmentationError};
use crate::imaging::Frame;

const KMEANS_ITERATIONS: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct Superpixel {
    /// Flat (row-major) pixel indices, ascending.
    pub pixels: Vec<usize>,
    pub centroid: (f64, f64),
    pub mean_intensity: f64,
    pub stats: RegionStats,
}

/// Superpixels of one frame together with the per-pixel label map.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperpixelMap {
    pub width: usize,
    pub height: usize,
    /// `labels[p]` is the index into `superpixels` of pixel `p`.
    pub labels: Vec<u32>,
    pub superpixels: Vec<Superpixel>,
}

impl SuperpixelMap {
    pub fn len(&self) -> usize {
        self.superpixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.superpixels.is_empty()
    }

    pub(crate) fn from_labels(frame: &Frame, labels: Vec<u32>) -> Self {
        let count = labels.iter().max().map_or(0, |&l| l as usize + 1);
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
        let mut stats = vec![RegionStats::default(); count];
        let w = frame.width();
        for (p, &l) in labels.iter().enumerate() {
            members[l as usize].push(p);
            stats[l as usize].add(p % w, p / w, frame.data()[p]);
        }
        let superpixels = members
            .into_iter()
            .zip(stats)
            .map(|(pixels, stats)| Superpixel {
                pixels,
                centroid: stats.centroid(),
                mean_intensity: stats.mean(),
                stats,
            })
            .collect();
        Self {
            width: frame.width(),
            height: frame.height(),
            labels,
            superpixels,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Center {
    x: f64,
    y: f64,
    intensity: f64,
}

fn grid_shape(w: usize, h: usize, k: usize) -> (usize, usize) {
    // Choose nx·ny close to k with cells as square as the frame allows.
    let mut best = (1, 1);
    let mut best_cost = f64::INFINITY;
    for nx in 1..=k.min(w) {
        let ny = ((k as f64 / nx as f64).round() as usize).clamp(1, h);
        let count_err = (nx * ny) as f64 / k as f64 - 1.0;
        let aspect = (w as f64 / nx as f64) / (h as f64 / ny as f64);
        let cost = count_err.abs() * 4.0 + aspect.ln().abs();
        if cost < best_cost {
            best_cost = cost;
            best = (nx, ny);
        }
    }
    best
}

fn gradient(frame: &Frame, x: usize, y: usize) -> f64 {
    let (w, h) = (frame.width(), frame.height());
    let at = |x: usize, y: usize| frame.get(x.min(w - 1), y.min(h - 1)) as f64;
    let gx = at(x + 1, y) - at(x.saturating_sub(1), y);
    let gy = at(x, y + 1) - at(x, y.saturating_sub(1));
    gx * gx + gy * gy
}

fn initial_centers(frame: &Frame, nx: usize, ny: usize) -> Vec<Center> {
    let (w, h) = (frame.width(), frame.height());
    let mut centers = Vec::with_capacity(nx * ny);
    for gy in 0..ny {
        for gx in 0..nx {
            let fx = (gx as f64 + 0.5) * w as f64 / nx as f64 - 0.5;
            let fy = (gy as f64 + 0.5) * h as f64 / ny as f64 - 0.5;
            let (cx, cy) = (fx.round() as usize, fy.round() as usize);
            // Move to the lowest-gradient pixel of the 3x3 neighborhood so
            // seeds do not start on an edge.
            let mut best = None;
            let mut best_g = gradient(frame, cx, cy);
            for y in cy.saturating_sub(1)..=(cy + 1).min(h - 1) {
                for x in cx.saturating_sub(1)..=(cx + 1).min(w - 1) {
                    let g = gradient(frame, x, y);
                    if g < best_g {
                        best_g = g;
                        best = Some((x, y));
                    }
                }
            }
            let (x, y) = best.map_or((fx, fy), |(x, y)| (x as f64, y as f64));
            let (px, py) = best.unwrap_or((cx, cy));
            centers.push(Center {
                x,
                y,
                intensity: frame.get(px, py) as f64,
            });
        }
    }
    centers
}

/// Folds the smallest superpixels into their most similar neighbor until at
/// most `max_count` remain. Labels must be dense and 4-connected; the
/// result is renumbered in scan order.
fn cap_count(frame: &Frame, labels: Vec<u32>, max_count: usize) -> Vec<u32> {
    let (w, h) = (frame.width(), frame.height());
    let count = labels.iter().max().map_or(0, |&l| l as usize + 1);
    if count <= max_count {
        return labels;
    }
    let mut size = vec![0usize; count];
    let mut sum = vec![0f64; count];
    for (p, &l) in labels.iter().enumerate() {
        size[l as usize] += 1;
        sum[l as usize] += frame.data()[p] as f64;
    }
    let mut neighbors: Vec<std::collections::BTreeSet<u32>> = vec![Default::default(); count];
    for (a, b) in super::regions::adjacency(&labels, w, h) {
        neighbors[a as usize].insert(b);
        neighbors[b as usize].insert(a);
    }
    let mut parent: Vec<u32> = (0..count as u32).collect();
    let mut alive = count;
    while alive > max_count {
        let small = (0..count)
            .filter(|&i| parent[i] == i as u32 && !neighbors[i].is_empty())
            .min_by_key(|&i| (size[i], i))
            .expect("a live region with neighbors");
        let mean = sum[small] / size[small] as f64;
        let target = *neighbors[small]
            .iter()
            .min_by(|&&a, &&b| {
                let da = (sum[a as usize] / size[a as usize] as f64 - mean).abs();
                let db = (sum[b as usize] / size[b as usize] as f64 - mean).abs();
                da.total_cmp(&db).then(a.cmp(&b))
            })
            .expect("nonempty neighbor set") as usize;
        parent[small] = target as u32;
        size[target] += size[small];
        sum[target] += sum[small];
        let moved = std::mem::take(&mut neighbors[small]);
        for n in moved {
            let n = n as usize;
            neighbors[n].remove(&(small as u32));
            if n != target {
                neighbors[n].insert(target as u32);
                neighbors[target].insert(n as u32);
            }
        }
        neighbors[target].remove(&(target as u32));
        alive -= 1;
    }
    let root = |mut i: usize| {
        while parent[i] != i as u32 {
            i = parent[i] as usize;
        }
        i as u32
    };
    let merged: Vec<u32> = labels.iter().map(|&l| root(l as usize)).collect();
    enforce_connectivity(&merged, w, h, 1)
}

/// Oversegments `frame` into roughly `target_count` 4-connected superpixels.
pub fn oversegment(
    frame: &Frame,
    target_count: usize,
    compactness: f64,
) -> Result<SuperpixelMap, SegmentationError> {
    let (w, h) = (frame.width(), frame.height());
    let n = w * h;
    if target_count == 0 || target_count > n {
        return Err(SegmentationError::TargetCount {
            target: target_count,
            pixels: n,
        });
    }
    if !(compactness > 0.0 && compactness.is_finite()) {
        return Err(SegmentationError::Compactness(compactness));
    }
    let (nx, ny) = grid_shape(w, h, target_count);
    let step = ((n as f64) / (nx * ny) as f64).sqrt();
    let spatial_weight = (compactness / step).powi(2);
    let mut centers = initial_centers(frame, nx, ny);
    let mut labels = vec![u32::MAX; n];
    let mut dist = vec![f64::INFINITY; n];
    let radius = (2.0 * step).ceil() as isize;

    for _ in 0..KMEANS_ITERATIONS {
        dist.fill(f64::INFINITY);
        for (c, center) in centers.iter().enumerate() {
            let (cx, cy) = (center.x.round() as isize, center.y.round() as isize);
            let y0 = (cy - radius).max(0) as usize;
            let y1 = ((cy + radius) as usize).min(h - 1);
            let x0 = (cx - radius).max(0) as usize;
            let x1 = ((cx + radius) as usize).min(w - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let p = y * w + x;
                    let di = frame.data()[p] as f64 - center.intensity;
                    let dx = x as f64 - center.x;
                    let dy = y as f64 - center.y;
                    let d = di * di + (dx * dx + dy * dy) * spatial_weight;
                    if d < dist[p] {
                        dist[p] = d;
                        labels[p] = c as u32;
                    }
                }
            }
        }
        let mut sums = vec![(0.0, 0.0, 0.0, 0usize); centers.len()];
        for (p, &l) in labels.iter().enumerate() {
            if l == u32::MAX {
                continue;
            }
            let s = &mut sums[l as usize];
            s.0 += (p % w) as f64;
            s.1 += (p / w) as f64;
            s.2 += frame.data()[p] as f64;
            s.3 += 1;
        }
        for (center, s) in centers.iter_mut().zip(&sums) {
            if s.3 > 0 {
                let c = s.3 as f64;
                *center = Center {
                    x: s.0 / c,
                    y: s.1 / c,
                    intensity: s.2 / c,
                };
            }
        }
    }
    // Pixels no window reached take the nearest center by the same metric.
    for p in 0..n {
        if labels[p] == u32::MAX {
            let (x, y) = ((p % w) as f64, (p / w) as f64);
            let v = frame.data()[p] as f64;
            labels[p] = centers
                .iter()
                .enumerate()
                .map(|(c, ctr)| {
                    let d = (v - ctr.intensity).powi(2)
                        + ((x - ctr.x).powi(2) + (y - ctr.y).powi(2)) * spatial_weight;
                    (d, c)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .map(|(_, c)| c as u32)
                .expect("at least one center");
        }
    }
    let min_size = (n / (nx * ny) / 4).max(1);
    let labels = enforce_connectivity(&labels, w, h, min_size);
    let labels = cap_count(frame, labels, target_count + target_count / 2);
    Ok(SuperpixelMap::from_labels(frame, labels))
}

/// Relabels so every label is a single 4-connected component, folding
/// components smaller than `min_size` into the previously labeled neighbor.
/// Output labels are numbered in scan order of their first pixel.
pub(crate) fn enforce_connectivity(
    labels: &[u32],
    w: usize,
    h: usize,
    min_size: usize,
) -> Vec<u32> {
    let n = w * h;
    let mut out = vec![u32::MAX; n];
    let mut next = 0u32;
    let mut stack = Vec::new();
    let mut component = Vec::new();
    for start in 0..n {
        if out[start] != u32::MAX {
            continue;
        }
        // A labeled neighbor (left or up) that an undersized fragment can join.
        let (sx, sy) = (start % w, start / w);
        let adjacent = if sx > 0 {
            Some(out[start - 1])
        } else if sy > 0 {
            Some(out[start - w])
        } else {
            None
        };
        let original = labels[start];
        component.clear();
        stack.push(start);
        out[start] = next;
        while let Some(p) = stack.pop() {
            component.push(p);
            let (x, y) = (p % w, p / w);
            let mut visit = |q: usize| {
                if out[q] == u32::MAX && labels[q] == original {
                    out[q] = next;
                    stack.push(q);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < w {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - w);
            }
            if y + 1 < h {
                visit(p + w);
            }
        }
        match adjacent {
            Some(target) if component.len() < min_size => {
                for &p in &component {
                    out[p] = target;
                }
            }
            _ => next += 1,
        }
    }
    out
}
