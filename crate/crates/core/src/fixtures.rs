//! Seeded random matrices and partitions for tests, benchmarks and the
//! `bench` subcommand.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::partition::GroupPartition;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with i.i.d. standard normal entries.
pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = rng(seed);
    Array2::from_shape_simple_fn((rows, cols), || rng.sample(StandardNormal))
}

/// Product of `rows × rank` and `rank × cols` standard normal factors.
pub fn low_rank(rows: usize, cols: usize, rank: usize, seed: u64) -> Array2<f64> {
    let left = random_matrix(rows, rank, seed);
    let right = random_matrix(rank, cols, seed.wrapping_add(0x9e37_79b9));
    left.dot(&right)
}

/// Assigns every entry to one of `groups` groups uniformly at random; the
/// first `groups` entries of a random permutation seed each group so none
/// is empty.
pub fn random_partition(rows: usize, cols: usize, groups: usize, seed: u64) -> GroupPartition {
    assert!(groups >= 1 && groups <= rows * cols);
    let mut rng = rng(seed);
    let mut order: Vec<usize> = (0..rows * cols).collect();
    order.shuffle(&mut rng);
    let mut labels = vec![0u32; rows * cols];
    for (i, &idx) in order.iter().enumerate() {
        labels[idx] = if i < groups {
            i as u32
        } else {
            rng.gen_range(0..groups) as u32
        };
    }
    GroupPartition::from_labels(rows, cols, labels).expect("every group seeded")
}

/// A planted group-sparse recovery instance: `D = A₀ + E₀` where `A₀` has
/// the given rank and `E₀` is nonzero exactly on `active` randomly chosen
/// groups of `partition`, with entries of magnitude around `magnitude`.
pub struct GroupSparseInstance {
    pub d: Array2<f64>,
    pub low_rank: Array2<f64>,
    pub sparse: Array2<f64>,
    pub partition: GroupPartition,
    pub active_groups: Vec<usize>,
}

pub fn group_sparse_instance(
    rows: usize,
    cols: usize,
    rank: usize,
    groups: usize,
    active: usize,
    magnitude: f64,
    seed: u64,
) -> GroupSparseInstance {
    let low = low_rank(rows, cols, rank, seed);
    let partition = random_partition(rows, cols, groups, seed.wrapping_add(1));
    let mut rng = rng(seed.wrapping_add(2));
    let mut ids: Vec<usize> = (0..groups).collect();
    ids.shuffle(&mut rng);
    let mut active_groups = ids[..active].to_vec();
    active_groups.sort_unstable();
    let mut sparse = Array2::zeros((rows, cols));
    for ((j, k), v) in sparse.indexed_iter_mut() {
        let g = partition.label(j, k) as usize;
        if active_groups.binary_search(&g).is_ok() {
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            *v = sign * magnitude * rng.gen_range(0.5..1.5);
        }
    }
    GroupSparseInstance {
        d: &low + &sparse,
        low_rank: low,
        sparse,
        partition,
        active_groups,
    }
}

/// A planted entrywise-sparse instance: rank-`rank` `A₀` plus `E₀` with each
/// entry independently set to `±magnitude` with probability `density`.
pub struct SparseInstance {
    pub d: Array2<f64>,
    pub low_rank: Array2<f64>,
    pub sparse: Array2<f64>,
}

pub fn sparse_instance(
    rows: usize,
    cols: usize,
    rank: usize,
    density: f64,
    magnitude: f64,
    seed: u64,
) -> SparseInstance {
    let low = low_rank(rows, cols, rank, seed);
    let mut rng = rng(seed.wrapping_add(1));
    let sparse = Array2::from_shape_simple_fn((rows, cols), || {
        if rng.gen_bool(density) {
            if rng.gen_bool(0.5) {
                magnitude
            } else {
                -magnitude
            }
        } else {
            0.0
        }
    });
    SparseInstance {
        d: &low + &sparse,
        low_rank: low,
        sparse,
    }
}

/// `‖x − truth‖_F / ‖truth‖_F`.
pub fn relative_error(x: &Array2<f64>, truth: &Array2<f64>) -> f64 {
    let num: f64 = x.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = truth.iter().map(|v| v * v).sum();
    (num / den).sqrt()
}
