//! Inputs shared by the criterion benchmarks.

use dynabg::evaluation::{synth_scene, BackgroundKind, SceneConfig};
use dynabg::fixtures::{
    group_sparse_instance, sparse_instance, GroupSparseInstance, SparseInstance,
};
use dynabg::FrameSequence;

/// The 200×50 rank-2 instance with 5% ±50 corruptions.
pub fn rpca_instance() -> SparseInstance {
    sparse_instance(200, 50, 2, 0.05, 50.0, 17)
}

/// The 200×50 rank-2 instance with 3 of 50 random groups active.
pub fn group_instance() -> GroupSparseInstance {
    group_sparse_instance(200, 50, 2, 50, 3, 5.0, 17)
}

/// Frames of the seeded 64×64 wave scene.
pub fn wave_frames(frames: usize) -> FrameSequence {
    let cfg = SceneConfig {
        frames,
        ..SceneConfig::with_kind(BackgroundKind::Wave)
    };
    synth_scene(&cfg).expect("valid scene").frames
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inputs_have_the_documented_shapes() {
        assert_eq!(rpca_instance().d.dim(), (200, 50));
        let g = group_instance();
        assert_eq!(g.partition.group_count(), 50);
        assert_eq!(g.active_groups.len(), 3);
        let w = wave_frames(4);
        assert_eq!((w.len(), w.width(), w.height()), (4, 64, 64));
    }
}
