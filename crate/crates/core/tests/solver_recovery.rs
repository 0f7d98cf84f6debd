use dynabg::detection::binarize;
use dynabg::fixtures::{group_sparse_instance, low_rank, rng};
use dynabg::solver::{solve_rpca, solve_sc_rpca, SolverConfig, WeightMode};
use ndarray::Array2;
use rand::Rng;

fn rel_err(x: &Array2<f64>, truth: &Array2<f64>) -> f64 {
    let num: f64 = x.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = truth.iter().map(|v| v * v).sum();
    (num / den).sqrt()
}

#[test]
fn rpca_recovers_rank_two_plus_sparse() {
    let a0 = low_rank(200, 50, 2, 5);
    let mut r = rng(6);
    let mut e0 = Array2::<f64>::zeros((200, 50));
    for v in e0.iter_mut() {
        if r.gen_bool(0.05) {
            *v = if r.gen_bool(0.5) { 50.0 } else { -50.0 };
        }
    }
    let d = &a0 + &e0;
    let dec = solve_rpca(&d, &SolverConfig::default()).unwrap();
    assert!(dec.converged);
    assert!(rel_err(&dec.a, &a0) <= 1e-3, "{}", rel_err(&dec.a, &a0));
    assert!(rel_err(&dec.e, &e0) <= 1e-3);
    assert_eq!(dec.rank, 2);
}

#[test]
fn group_support_is_recovered_exactly() {
    for seed in [17u64, 18, 19] {
        let inst = group_sparse_instance(200, 50, 2, 50, 3, 5.0, seed);
        let dec = solve_sc_rpca(
            &inst.d,
            &inst.partition,
            &SolverConfig::default(),
            WeightMode::Sqrt,
        )
        .unwrap();
        assert!(rel_err(&dec.a, &inst.low_rank) <= 1e-3);
        assert!(rel_err(&dec.e, &inst.sparse) <= 1e-3);
        for ((j, k), &v) in dec.e.indexed_iter() {
            let g = inst.partition.label(j, k) as usize;
            if !inst.active_groups.contains(&g) {
                assert_eq!(v.to_bits(), 0, "entry ({j}, {k}) of inactive group {g}");
            }
        }
        // Binarizing E reproduces the planted support, one mask per column.
        let masks = binarize(&dec.e, 0.0, 20, 10).unwrap();
        for (k, mask) in masks.frames().iter().enumerate() {
            for (j, &m) in mask.data().iter().enumerate() {
                assert_eq!(m == 255, inst.sparse[[j, k]] != 0.0);
            }
        }
    }
}

#[test]
fn linear_mode_still_satisfies_the_constraint() {
    let inst = group_sparse_instance(120, 30, 2, 40, 3, 5.0, 3);
    let dec = solve_sc_rpca(
        &inst.d,
        &inst.partition,
        &SolverConfig::default(),
        WeightMode::Linear,
    )
    .unwrap();
    let resid: f64 = (&inst.d - &dec.a - &dec.e)
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    let norm: f64 = inst.d.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(resid / norm <= 1e-7);
    assert!((dec.final_residual - resid / norm).abs() < 1e-12);
}
