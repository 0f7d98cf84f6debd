//! Cross-frame linking of subregions into spatio-temporal groups.

use super::{RegionStats, Subregion};
use crate::partition::GroupPartition;

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// Result of [`link_frames_traced`].
#[derive(Clone, Debug)]
pub struct LinkOutcome {
    pub partition: GroupPartition,
    /// Group count before the first merge and after every merge.
    pub group_counts: Vec<usize>,
}

/// Links subregions of adjacent frames whose centroids are closer than
/// `center_threshold`, repeatedly merging the most similar linked pair of
/// groups while their feature distance is below `similarity_threshold`.
///
/// `per_frame[k]` must partition the `pixels_per_frame` pixels of frame `k`.
pub fn link_frames(
    per_frame: &[Vec<Subregion>],
    pixels_per_frame: usize,
    center_threshold: f64,
    similarity_threshold: f64,
) -> GroupPartition {
    link_frames_traced(
        per_frame,
        pixels_per_frame,
        center_threshold,
        similarity_threshold,
    )
    .partition
}

pub fn link_frames_traced(
    per_frame: &[Vec<Subregion>],
    pixels_per_frame: usize,
    center_threshold: f64,
    similarity_threshold: f64,
) -> LinkOutcome {
    // Flatten (frame, subregion) pairs into node ids in frame-major order.
    let mut offsets = Vec::with_capacity(per_frame.len() + 1);
    offsets.push(0);
    for regions in per_frame {
        offsets.push(offsets.last().unwrap() + regions.len());
    }
    let nodes: Vec<&Subregion> = per_frame.iter().flatten().collect();
    let mut stats: Vec<RegionStats> = nodes.iter().map(|r| r.stats).collect();

    // Candidate links, enumerated in (frame, subregion, subregion) order so
    // the first minimum found is the lowest index pair.
    let mut links = Vec::new();
    for k in 0..per_frame.len().saturating_sub(1) {
        for (a, ra) in per_frame[k].iter().enumerate() {
            for (b, rb) in per_frame[k + 1].iter().enumerate() {
                let (dx, dy) = (ra.centroid.0 - rb.centroid.0, ra.centroid.1 - rb.centroid.1);
                if (dx * dx + dy * dy).sqrt() < center_threshold {
                    links.push((offsets[k] + a, offsets[k + 1] + b));
                }
            }
        }
    }

    let mut sets = DisjointSet::new(nodes.len());
    let mut groups = nodes.len();
    let mut group_counts = vec![groups];
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for &(a, b) in &links {
            let (ra, rb) = (sets.find(a), sets.find(b));
            if ra == rb {
                continue;
            }
            let d = stats[ra].feature_distance(&stats[rb]);
            if best.map_or(true, |(bd, _, _)| d < bd) {
                best = Some((d, ra, rb));
            }
        }
        let Some((d, ra, rb)) = best else { break };
        if !(d < similarity_threshold) {
            break;
        }
        let (keep, gone) = (ra.min(rb), ra.max(rb));
        let absorbed = stats[gone];
        stats[keep].merge(&absorbed);
        sets.parent[gone] = keep;
        groups -= 1;
        group_counts.push(groups);
        links.retain(|&(a, b)| sets.find(a) != sets.find(b));
    }

    let cols = per_frame.len();
    let mut raw = vec![usize::MAX; pixels_per_frame * cols];
    for (k, regions) in per_frame.iter().enumerate() {
        for (i, region) in regions.iter().enumerate() {
            let root = sets.find(offsets[k] + i);
            for &p in &region.pixels {
                raw[k * pixels_per_frame + p] = root;
            }
        }
    }
    debug_assert!(
        raw.iter().all(|&r| r != usize::MAX),
        "subregions must cover each frame"
    );
    let partition = GroupPartition::from_sparse_labels(pixels_per_frame, cols, &raw)
        .expect("every group has at least one pixel");
    LinkOutcome {
        partition,
        group_counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::Frame;
    use crate::segmentation::{oversegment, segment_frame};

    fn regions_of(frame: &Frame, k: usize, target: usize) -> Vec<Subregion> {
        let map = oversegment(frame, target, 10.0).unwrap();
        segment_frame(&map, k, 12.0)
    }

    #[test]
    fn single_frame_keeps_subregions() {
        let f = Frame::from_fn(16, 8, |x, _| if x < 8 { 200 } else { 40 }).unwrap();
        let regions = regions_of(&f, 0, 8);
        let p = link_frames(&[regions.clone()], 128, 100.0, 100.0);
        assert_eq!(p.group_count(), regions.len());
    }

    #[test]
    fn identical_frames_with_huge_tau_merge() {
        let f = Frame::filled(10, 10, 77).unwrap();
        let r0 = regions_of(&f, 0, 1);
        let r1 = regions_of(&f, 1, 1);
        let p = link_frames(&[r0, r1], 100, 1000.0, 8.0);
        assert_eq!(p.group_count(), 1);
        assert_eq!(p.sizes(), &[200]);
    }

    #[test]
    fn zero_tau_links_nothing() {
        let f = Frame::filled(10, 10, 77).unwrap();
        let r0 = regions_of(&f, 0, 1);
        let r1 = regions_of(&f, 1, 1);
        let p = link_frames(&[r0, r1], 100, 0.0, 8.0);
        assert_eq!(p.group_count(), 2);
    }

    #[test]
    fn dissimilar_regions_stay_apart() {
        let a = Frame::filled(10, 10, 20).unwrap();
        let b = Frame::filled(10, 10, 220).unwrap();
        let outcome = link_frames_traced(
            &[regions_of(&a, 0, 1), regions_of(&b, 1, 1)],
            100,
            1000.0,
            8.0,
        );
        assert_eq!(outcome.partition.group_count(), 2);
        assert_eq!(outcome.group_counts, vec![2]);
    }
}
