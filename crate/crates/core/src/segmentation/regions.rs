//! Greedy agglomerative merging of superpixels into subregions.

use std::collections::BTreeSet;

use super::{RegionStats, Subregion, SuperpixelMap};

/// Pairs of labels that touch through a 4-neighborhood, `(low, high)`.
pub(crate) fn adjacency(labels: &[u32], w: usize, h: usize) -> BTreeSet<(u32, u32)> {
    let mut edges = BTreeSet::new();
    for y in 0..h {
        for x in 0..w {
            let a = labels[y * w + x];
            if x + 1 < w {
                let b = labels[y * w + x + 1];
                if a != b {
                    edges.insert((a.min(b), a.max(b)));
                }
            }
            if y + 1 < h {
                let b = labels[(y + 1) * w + x];
                if a != b {
                    edges.insert((a.min(b), a.max(b)));
                }
            }
        }
    }
    edges
}

/// Merges spatially adjacent superpixels, closest features first, while the
/// closest adjacent pair is nearer than `merge_threshold`. Ties go to the
/// lowest `(a, b)` index pair.
pub fn segment_frame(
    map: &SuperpixelMap,
    frame_index: usize,
    merge_threshold: f64,
) -> Vec<Subregion> {
    let count = map.superpixels.len();
    let mut stats: Vec<Option<RegionStats>> =
        map.superpixels.iter().map(|s| Some(s.stats)).collect();
    // parent[i] = region that absorbed superpixel i
    let mut parent: Vec<u32> = (0..count as u32).collect();
    let mut edges = adjacency(&map.labels, map.width, map.height);

    loop {
        let best = edges
            .iter()
            .map(|&(a, b)| {
                let sa = stats[a as usize].as_ref().expect("live region");
                let sb = stats[b as usize].as_ref().expect("live region");
                (sa.feature_distance(sb), a, b)
            })
            .min_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        let Some((d, keep, gone)) = best else { break };
        if !(d < merge_threshold) {
            break;
        }
        let absorbed = stats[gone as usize].take().expect("live region");
        stats[keep as usize]
            .as_mut()
            .expect("live region")
            .merge(&absorbed);
        for p in parent.iter_mut() {
            if *p == gone {
                *p = keep;
            }
        }
        let rewired: Vec<(u32, u32)> = edges
            .iter()
            .filter(|&&(a, b)| a == gone || b == gone)
            .copied()
            .collect();
        for (a, b) in rewired {
            edges.remove(&(a, b));
            let other = if a == gone { b } else { a };
            if other != keep {
                edges.insert((other.min(keep), other.max(keep)));
            }
        }
    }

    // Emit surviving regions in ascending order of their representative.
    let mut index_of = vec![u32::MAX; count];
    let mut regions: Vec<Subregion> = Vec::new();
    for (i, s) in stats.iter().enumerate() {
        if let Some(s) = s {
            index_of[i] = regions.len() as u32;
            regions.push(Subregion {
                frame_index,
                pixels: Vec::with_capacity(s.count),
                centroid: s.centroid(),
                feature: (s.mean(), s.variance()),
                stats: *s,
            });
        }
    }
    for (p, &l) in map.labels.iter().enumerate() {
        let r = index_of[parent[l as usize] as usize];
        regions[r as usize].pixels.push(p);
    }
    regions
}
