use dynabg::detection::{detect, DetectionConfig, DetectionMode, MaskSequence};
use dynabg::evaluation::{evaluate_sequence, synth_scene, BackgroundKind, SceneConfig};
use dynabg::imaging::load_sequence;

#[test]
fn wave_scene_regression() {
    let scene = synth_scene(&SceneConfig::with_kind(BackgroundKind::Wave)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let gt_dir = dir.path().join("groundtruth");
    scene.ground_truth.save(&gt_dir).unwrap();
    // save() writes bin%06d.png; the harness expects gt%06d.png.
    for i in 1..=scene.ground_truth.len() {
        std::fs::rename(
            gt_dir.join(format!("bin{i:06}.png")),
            gt_dir.join(format!("gt{i:06}.png")),
        )
        .unwrap();
    }
    let out = detect(&scene.frames, &DetectionConfig::default()).unwrap();
    let report = evaluate_sequence(&out.masks, &gt_dir).unwrap();
    println!("wave scene sc-rpca-stable F = {:.6}", report.f_measure);
    assert!(
        (report.f_measure - PINNED_WAVE_F).abs() < 1e-6,
        "{}",
        report.f_measure
    );
}

// Seeded regression value, recorded from the first run.
const PINNED_WAVE_F: f64 = 0.869991474851;

#[test]
fn detection_is_deterministic_and_shape_preserving() {
    let cfg = SceneConfig {
        frames: 12,
        ..SceneConfig::with_kind(BackgroundKind::Snow)
    };
    let scene = synth_scene(&cfg).unwrap();
    for mode in DetectionMode::ALL {
        let c = DetectionConfig::with_mode(mode);
        let a = detect(&scene.frames, &c).unwrap();
        let b = detect(&scene.frames, &c).unwrap();
        assert_eq!(a.masks, b.masks);
        assert_eq!(a.masks.len(), 12);
        assert_eq!(a.masks.frames()[0].width(), 64);
        assert_eq!(a.decomposition.e, b.decomposition.e);
        // No post-processing: the mask is exactly the support of E.
        for (k, mask) in a.masks.frames().iter().enumerate() {
            for (j, &m) in mask.data().iter().enumerate() {
                assert_eq!(m == 255, a.decomposition.e[[j, k]].abs() > c.epsilon);
            }
        }
    }
}

#[test]
fn frames_round_trip_through_disk() {
    let scene = synth_scene(&SceneConfig {
        frames: 6,
        ..SceneConfig::default()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    scene
        .frames
        .save_numbered(&dir.path().join("input"), "in", "png")
        .unwrap();
    let loaded = load_sequence(&dir.path().join("input"), "in*.png", 1).unwrap();
    assert_eq!(loaded, scene.frames);
    let out = detect(&loaded, &DetectionConfig::default()).unwrap();
    out.masks.save(&dir.path().join("masks")).unwrap();
    assert_eq!(
        MaskSequence::load(&dir.path().join("masks")).unwrap(),
        out.masks
    );
}
