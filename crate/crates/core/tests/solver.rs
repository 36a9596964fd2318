mod common;

use proptest::prelude::*;
use svddbw_core::data::gen_star;
use svddbw_core::evaluation::{grid_score_2d, GridBounds};
use svddbw_core::svdd::DEFAULT_KKT_TOL;
use svddbw_core::{solve_dual, train_curve, Dataset, SvddConfig, SvddModel, SweepGrid};

/// Full-length multiplier vector of `model` over the rows of `data`.
fn full_alpha(model: &SvddModel, data: &Dataset) -> Vec<f64> {
    let mut alpha = vec![0.0; data.n()];
    for (sv, a) in model.sv_points().rows().zip(model.alphas()) {
        let i = data.rows().position(|r| r == sv).unwrap();
        alpha[i] = *a;
    }
    alpha
}

/// Threshold from oracle multipliers: mean squared distance of the
/// unbounded support vectors.
fn oracle_r2(k: &[Vec<f64>], alpha: &[f64], c: f64) -> f64 {
    let ka = common::mat_vec(k, alpha);
    let q = common::quad(k, alpha);
    let tol = 1e-6 * c;
    let free: Vec<usize> = (0..alpha.len()).filter(|&i| alpha[i] > tol && alpha[i] < c - tol).collect();
    free.iter().map(|&i| 1.0 - 2.0 * ka[i] + q).sum::<f64>() / free.len() as f64
}

#[test]
fn five_points_match_oracle() {
    let points = vec![
        vec![0.1, 0.2],
        vec![0.9, -0.3],
        vec![-0.4, 0.8],
        vec![0.5, 0.5],
        vec![-0.7, -0.6],
    ];
    let data = Dataset::from_rows(&points).unwrap();
    let model = solve_dual(&data, &SvddConfig::new(1.0, 0.1)).unwrap();
    let k = common::kernel(&points, 1.0);
    let c = 1.0 / (5.0 * 0.1);
    let reference = common::projected_gradient(&k, c, 1e-12);

    let alpha = full_alpha(&model, &data);
    for (a, b) in alpha.iter().zip(&reference) {
        assert!((a - b).abs() <= 1e-4, "{alpha:?} vs {reference:?}");
    }
    assert!((model.oof() - common::dual_objective(&k, &reference)).abs() <= 1e-6);
    assert!((model.r_squared() - oracle_r2(&k, &reference, c)).abs() <= 1e-6);
}

#[test]
fn two_point_description() {
    let data = Dataset::from_rows(&[[0.0, 0.0], [1.0, 0.0]]).unwrap();
    let model = solve_dual(&data, &SvddConfig::new(1.0, 0.001)).unwrap();
    let k12 = (-0.5f64).exp();
    assert!((model.r_squared() - 0.5 * (1.0 - k12)).abs() < 1e-9);
    assert!((model.r_squared() - 0.196735).abs() < 1e-6);
    assert!((model.oof() - 0.5 * (1.0 - k12)).abs() < 1e-9);

    // 1 - 2 * sum_i a_i K(mid, x_i) + a'Ka with a = (1/2, 1/2)
    let mid = 1.0 - 2.0 * (-0.125f64).exp() + 0.5 * (1.0 + k12);
    let d2 = model.distance_sq(&[0.5, 0.0]).unwrap();
    assert!((d2 - mid).abs() < 1e-12);
    assert!((d2 - 0.0382715).abs() < 1e-6);
    assert!(!model.score(&[0.5, 0.0]).unwrap().is_outlier);

    let far = model.score(&[50.0, 50.0]).unwrap();
    assert!((far.distance_sq - (1.0 + 0.5 * (1.0 + k12))).abs() < 1e-12);
    assert!(far.is_outlier);
}

#[test]
fn single_point_sits_on_its_boundary() {
    let data = Dataset::from_rows(&[[2.0, -1.0]]).unwrap();
    let model = solve_dual(&data, &SvddConfig::new(0.7, 0.5)).unwrap();
    assert_eq!(model.alphas(), &[1.0]);
    assert_eq!(model.oof(), 0.0);
    assert_eq!(model.r_squared(), 0.0);
}

#[test]
fn every_point_is_a_support_vector_at_tiny_s() {
    let data = gen_star(200, 3).unwrap();
    let grid = SweepGrid::new(0.0005, 0.002, 0.0005).unwrap();
    let curve = train_curve(&data, &grid, 0.001).unwrap();
    assert_eq!(curve.nsv[0], 200);
    assert_eq!(curve.s.len(), 4);
}

#[test]
fn persisted_model_scores_identically() {
    let data = gen_star(150, 4).unwrap();
    let model = solve_dual(&data, &SvddConfig::new(0.3, 0.05)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    model.save(&path).unwrap();
    let back = SvddModel::load(&path).unwrap();
    assert_eq!(back, model);
    let probe = gen_star(300, 5).unwrap();
    assert_eq!(back.score_all(&probe).unwrap(), model.score_all(&probe).unwrap());
}

#[test]
fn wide_kernels_give_rounder_descriptions() {
    let data = gen_star(300, 6).unwrap();
    let bounds = GridBounds::new(-1.2, 1.2, -1.2, 1.2).unwrap();
    let inside = |s: f64| {
        let m = solve_dual(&data, &SvddConfig::new(s, 0.001)).unwrap();
        grid_score_2d(&m, bounds, 200).unwrap().inside_count()
    };
    assert!(inside(100.0) >= inside(0.9));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solutions_are_feasible_and_optimal(seed in 0u64..1_000_000) {
        let inst = common::Instance::random(seed, 12, 4);
        let data = inst.dataset();
        let model = solve_dual(&data, &SvddConfig::new(inst.s, inst.f)).unwrap();
        let check = model.check(DEFAULT_KKT_TOL);
        prop_assert!(check.passes(DEFAULT_KKT_TOL), "{check:?}");

        let c = inst.penalty();
        let alpha = full_alpha(&model, &data);
        prop_assert!((alpha.iter().sum::<f64>() - 1.0).abs() <= 1e-8);
        prop_assert!(alpha.iter().all(|&a| (0.0..=c + 1e-12).contains(&a)));

        let k = common::kernel(&inst.points, inst.s);
        let reference = common::projected_gradient(&k, c, 1e-10);
        let gap = model.oof() - common::dual_objective(&k, &reference);
        prop_assert!(gap.abs() <= 1e-6, "objective gap {gap:e}");
    }

    #[test]
    fn unbounded_support_vectors_lie_on_the_sphere(seed in 0u64..1_000_000) {
        let inst = common::Instance::random(seed, 10, 3);
        let model = solve_dual(&inst.dataset(), &SvddConfig::new(inst.s, inst.f)).unwrap();
        let c = model.penalty();
        for (sv, &a) in model.sv_points().rows().zip(model.alphas()) {
            let d2 = model.distance_sq(sv).unwrap();
            if a < c * (1.0 - 1e-6) {
                prop_assert!((d2 - model.r_squared()).abs() <= 1e-5, "{d2} vs {}", model.r_squared());
            } else {
                prop_assert!(d2 >= model.r_squared() - 1e-5);
            }
        }
    }

    #[test]
    fn relabeling_rows_keeps_the_objective(seed in 0u64..1_000_000) {
        let inst = common::Instance::random(seed, 10, 3);
        let mut rows = inst.points.clone();
        rows.reverse();
        let a = solve_dual(&inst.dataset(), &SvddConfig::new(inst.s, inst.f)).unwrap();
        let b = solve_dual(&Dataset::from_rows(&rows).unwrap(), &SvddConfig::new(inst.s, inst.f)).unwrap();
        prop_assert!((a.oof() - b.oof()).abs() <= 1e-6);
        prop_assert!((a.r_squared() - b.r_squared()).abs() <= 1e-5);
    }
}
