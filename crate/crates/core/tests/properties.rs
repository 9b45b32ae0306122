use assc::certificates::{certify, cluster_connectivity, support_affinity, CertifyOptions};
use assc::datagen::{make_toy, random_arrangement, RandomArrangementSpec, ToyId};
use assc::geometry::{affine_hull_dim, classify_point, convex_representation, strict_convex_combination, PointKind};
use assc::model::DataMatrix;
use assc::numerics::select_columns;
use assc::solvers::{
    build_coefficient_matrix, solve_column_oracle, solve_column_oracle_nonnegative, Mode, SolverConfig,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn others(points: &DMatrix<f64>, j: usize) -> DMatrix<f64> {
    let idx: Vec<usize> = (0..points.ncols()).filter(|&i| i != j).collect();
    select_columns(points, &idx)
}

fn planar_points(coords: &[f64]) -> DMatrix<f64> {
    DMatrix::from_column_slice(2, coords.len() / 2, coords)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extreme_iff_outside_hull_of_the_rest(coords in proptest::collection::vec(-3.0..3.0f64, 2 * 7), j in 0usize..7) {
        let pts = planar_points(&coords);
        let class = classify_point(j, &pts, TOL).unwrap();
        let inside = convex_representation(&pts.column(j).into_owned(), &others(&pts, j)).unwrap().is_some();
        prop_assert_eq!(class.kind == PointKind::Extreme, !inside);
    }

    #[test]
    fn face_is_no_larger_than_the_hull(coords in proptest::collection::vec(-3.0..3.0f64, 2 * 6), j in 0usize..6) {
        let pts = planar_points(&coords);
        let class = classify_point(j, &pts, TOL).unwrap();
        prop_assert!(class.face_dim <= affine_hull_dim(&pts, TOL));
        prop_assert!(class.generators.contains(&j) || class.kind != PointKind::Extreme);
    }

    #[test]
    fn interior_points_are_strict_combinations(coords in proptest::collection::vec(-3.0..3.0f64, 2 * 6)) {
        // The centroid of a generic planar set is in the relative interior.
        let pts = planar_points(&coords);
        let x: DVector<f64> = pts.column_mean();
        let w = strict_convex_combination(&x, &pts, TOL).unwrap();
        prop_assert!(w.iter().all(|v| *v > 0.0));
        prop_assert!((w.sum() - 1.0).abs() < 1e-9);
        prop_assert!((&pts * &w - &x).amax() < 1e-8);
    }

    #[test]
    fn assc_is_translation_invariant(
        coords in proptest::collection::vec(-2.0..2.0f64, 3 * 6),
        t in proptest::collection::vec(-5.0..5.0f64, 3),
        j in 0usize..6,
    ) {
        let pts = DMatrix::from_column_slice(3, 6, &coords);
        let t = DVector::from_vec(t);
        let mut shifted = pts.clone();
        for mut col in shifted.column_iter_mut() {
            col += &t;
        }
        let a = solve_column_oracle(&DataMatrix::unlabeled(pts).unwrap(), j, Mode::Assc).unwrap();
        let b = solve_column_oracle(&DataMatrix::unlabeled(shifted).unwrap(), j, Mode::Assc).unwrap();
        prop_assert!((a.objective - b.objective).abs() <= 1e-6 * (1.0 + a.objective));
    }

    #[test]
    fn assc_objective_is_at_least_one(coords in proptest::collection::vec(-2.0..2.0f64, 3 * 7), j in 0usize..7) {
        let data = DataMatrix::unlabeled(DMatrix::from_column_slice(3, 7, &coords)).unwrap();
        let s = solve_column_oracle(&data, j, Mode::Assc).unwrap();
        prop_assert!(s.objective >= 1.0 - 1e-6);
        prop_assert!((s.c.iter().sum::<f64>() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn interior_points_have_nonnegative_optima(seed in 0u64..500) {
        let arr = random_arrangement(&RandomArrangementSpec::new(vec![2, 1], 4, 8, seed)).unwrap();
        let labels = arr.labels().to_vec();
        for j in 0..arr.data.len() {
            let own = arr.data.cluster_indices(labels[j]);
            let local = own.iter().position(|&i| i == j).unwrap();
            let class = classify_point(local, &arr.data.select(&own), TOL).unwrap();
            if class.kind != PointKind::RelativeInterior {
                continue;
            }
            let s = solve_column_oracle(&arr.data, j, Mode::Assc).unwrap();
            let nn = solve_column_oracle_nonnegative(&arr.data, j, Mode::Assc).unwrap();
            prop_assert!((s.objective - 1.0).abs() <= 1e-6, "objective {}", s.objective);
            prop_assert!((nn.objective - s.objective).abs() <= 1e-6);
        }
    }
}

#[test]
fn toy_supports_connect_each_cluster() {
    let toy = make_toy(ToyId::TwoLinesR3);
    let cm = build_coefficient_matrix(&toy.arrangement.data, &SolverConfig::default()).unwrap();
    let a = support_affinity(&cm.c).unwrap();
    assert_eq!(cluster_connectivity(&a, toy.arrangement.labels(), 0.0).unwrap(), vec![true, true]);
    let report = certify(&toy.arrangement, &cm, &CertifyOptions::default()).unwrap();
    assert_eq!(report.correct_clustering, Some(true));
    assert!(report.theory_violations.is_empty());
}

#[test]
fn toy_reports_match_expected_facts() {
    for id in ToyId::ALL {
        let toy = make_toy(id);
        let cm = build_coefficient_matrix(&toy.arrangement.data, &SolverConfig::default()).unwrap();
        let report = certify(&toy.arrangement, &cm, &CertifyOptions::default()).unwrap();
        assert_eq!(report.arrangement.as_ref().unwrap().affinely_independent, toy.facts.affinely_independent, "{id:?}");
        for (p, kind) in report.points.iter().zip(&toy.facts.kinds) {
            assert_eq!(p.class.as_ref().unwrap().kind, *kind, "{id:?} x{}", p.index + 1);
        }
        for (p, want) in report.points.iter().zip(&toy.facts.nonnegative) {
            if let Some(want) = want {
                assert_eq!(p.nonnegative, *want, "{id:?} x{}", p.index + 1);
            }
        }
        assert!(report.theory_violations.is_empty(), "{id:?}");
    }
}
