//! Property tests for the module invariants.

use num_complex::Complex64;
use proptest::prelude::*;

use k3stab::boundary::{pi_square, SquareCoord};
use k3stab::mass::{expected_cell, DEFAULT_WINDOW};
use k3stab::verify::edge_values;
use k3stab::{
    canonicalize, classify_mass_point, invert_cell, mass_abc, mass_vector, pi_param, triangle_check, ChartPoint,
    InvertCell, StabilityPoint, TriangleStatus, Window,
};

fn lower_chart() -> impl Strategy<Value = ChartPoint> {
    (-3.0..3.0f64, 0.01..(std::f64::consts::PI - 0.01))
        .prop_map(|(lr, t)| ChartPoint::new(Complex64::from_polar(lr.exp(), -t)).unwrap())
}

fn wall_chart() -> impl Strategy<Value = ChartPoint> {
    (-3.0..3.0f64).prop_map(|lr| ChartPoint::new(Complex64::new(-lr.exp(), 0.0)).unwrap())
}

fn canonical_point() -> impl Strategy<Value = StabilityPoint> {
    (-30i64..30, prop_oneof![3 => lower_chart(), 1 => wall_chart()]).prop_map(|(t, c)| StabilityPoint::new(t, c))
}

fn q_value() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), 0.2..0.99f64, 1.01..6.0f64]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn twist_shifts_coordinates(p in canonical_point(), q in q_value()) {
        let here = mass_vector(&p, q, DEFAULT_WINDOW).unwrap();
        let next = mass_vector(&StabilityPoint::new(p.twist + 1, p.chart), q, DEFAULT_WINDOW.shifted(1)).unwrap();
        prop_assert_eq!(here.values, next.values);
    }

    #[test]
    fn masses_are_positive(p in canonical_point(), q in q_value()) {
        let f = mass_vector(&p, q, Window::new(-40, 40).unwrap()).unwrap();
        prop_assert!(f.values.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn interior_charts_satisfy_strict_inequalities(c in lower_chart(), q in q_value()) {
        let (a, b, cc) = mass_abc(&c, q).unwrap();
        prop_assert_eq!(triangle_check(a, b, cc, q), TriangleStatus::StrictInterior);
    }

    #[test]
    fn wall_charts_sit_on_the_wall(c in wall_chart(), q in q_value()) {
        let (a, b, cc) = mass_abc(&c, q).unwrap();
        prop_assert_eq!(triangle_check(a, b, cc, q), TriangleStatus::OnWallBeqAplusQC);
    }

    #[test]
    fn classification_finds_own_cell(p in canonical_point(), q in q_value(), scale in -20.0..20.0f64) {
        let mut f = mass_vector(&p, q, DEFAULT_WINDOW).unwrap();
        // classification is projective
        let s = scale.exp();
        f.values.iter_mut().for_each(|v| *v *= s);
        for t in [&mut f.tail.left, &mut f.tail.right] {
            t.value *= s;
            t.coefficient *= s;
        }
        prop_assert_eq!(classify_mass_point(&f).unwrap(), expected_cell(&p));
    }

    #[test]
    fn plain_round_trip(c in lower_chart()) {
        let (a, b, cc) = mass_abc(&c, 1.0).unwrap();
        let w = invert_cell(a, b, cc, InvertCell::Delta0, 1.0).unwrap();
        prop_assert!((w.z() - c.z()).norm() <= 1e-9);
    }

    #[test]
    fn q_round_trip(c in lower_chart(), q in prop_oneof![0.2..0.95f64, 1.05..6.0f64]) {
        let (a, b, cc) = mass_abc(&c, q).unwrap();
        let w = invert_cell(a, b, cc, InvertCell::Delta0, q).unwrap();
        prop_assert!((w.z() - c.z()).norm() <= 1e-8 * (1.0 + c.z().norm()));
    }

    #[test]
    fn canonical_points_are_projectively_fixed(t in -10i64..10, lr in -3.0..3.0f64, th in 0.01..3.13f64, q in q_value()) {
        let z = Complex64::from_polar(lr.exp(), th);
        let canon = canonicalize(t, z).unwrap();
        prop_assert!(canon.is_canonical());
        let raw = mass_vector(&StabilityPoint::new(t, ChartPoint::new(z).unwrap()), q, DEFAULT_WINDOW).unwrap();
        let can = mass_vector(&canon, q, DEFAULT_WINDOW).unwrap();
        prop_assert!(raw.projectively_eq(&can));
    }

    #[test]
    fn q_to_one_limit(p in canonical_point()) {
        let exact = mass_vector(&p, 1.0, DEFAULT_WINDOW).unwrap();
        for q in [1.0 - 1e-6, 1.0 + 1e-6] {
            let near = mass_vector(&p, q, DEFAULT_WINDOW).unwrap();
            for (x, y) in near.values.iter().zip(&exact.values) {
                prop_assert!((x - y).abs() <= 1e-4 * y);
            }
        }
    }

    #[test]
    fn pi_seams_are_continuous(n in -8i64..=8, v in 0.0..5.0f64, w in 0.0..5.0f64, q in prop_oneof![Just(1.0), Just(2.0)]) {
        prop_assume!(v + w > 0.0);
        let right = pi_square(n - 1, 1.0, v, w, q, DEFAULT_WINDOW).unwrap();
        let left = pi_square(n, 0.0, v, w, q, DEFAULT_WINDOW).unwrap();
        prop_assert_eq!(right.values, left.values);
    }

    #[test]
    fn pi_is_twist_equivariant(u in -12.0..12.0f64, v in 0.0..5.0f64, w in 0.0..5.0f64, q in prop_oneof![Just(1.0), Just(2.0), 0.3..3.0f64]) {
        prop_assume!(v + w > 0.0);
        let s = SquareCoord::new(u, v, w, q).unwrap();
        let here = pi_param(&s, DEFAULT_WINDOW).unwrap();
        let moved = pi_param(&s.twisted(), DEFAULT_WINDOW.shifted(1)).unwrap();
        for (x, y) in here.values.iter().zip(&moved.values) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn edge_points_match_the_display(t in 1e-3..1e3f64) {
        let got = edge_values(t);
        let want = [2.0 + t, 1.0, t, 1.0 + 2.0 * t];
        for (x, y) in got.iter().zip(want) {
            prop_assert!((x - y).abs() <= 1e-12 * y);
        }
    }
}
