mod common;

use common::*;
use nonclassical::states::{displaced_parity, GaussianSpec, StateSpec};
use nonclassical::witness::*;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn rot(theta: f64) -> [[f64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    [[c, -s], [s, c]]
}

fn mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn transpose(a: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

proptest! {
    #![proptest_config(common::cases(500))]

    #[test]
    fn classical_bounds(state in coherent_mixture(), rect in rectangle()) {
        let j = eval_j(&state, &PointSet4::rectangle(rect).unwrap()).unwrap().value;
        prop_assert!((CLASSICAL_LOWER - 1e-9..=CLASSICAL_UPPER + 1e-9).contains(&j), "J = {j}");
        let tri = TriangleSpec { theta: rect.theta, x0: rect.x0, x1: rect.x1, y0: rect.y0, y1: rect.y1 };
        let jp = eval_j_prime(&state, &tri).unwrap().value;
        prop_assert!(jp <= TRIANGLE_CLASSICAL + 1e-9, "J' = {jp}");
    }
}

proptest! {
    #![proptest_config(common::cases(200))]

    #[test]
    fn linearity(
        parts in prop::collection::vec((0.05f64..1.0, assorted_state()), 1..4),
        rect in rectangle(),
        tri in triangle(),
    ) {
        let total: f64 = parts.iter().map(|p| p.0).sum();
        let parts: Vec<(f64, StateSpec)> = parts.into_iter().map(|(w, s)| (w / total, s)).collect();
        let points = PointSet4::rectangle(rect).unwrap();
        let j: f64 = parts.iter().map(|(w, s)| w * eval_j(s, &points).unwrap().value).sum();
        let jp: f64 = parts.iter().map(|(w, s)| w * eval_j_prime(s, &tri).unwrap().value).sum();
        let mix = StateSpec::mixture(parts).unwrap();
        prop_assert!((eval_j(&mix, &points).unwrap().value - j).abs() <= 1e-13);
        prop_assert!((eval_j_prime(&mix, &tri).unwrap().value - jp).abs() <= 1e-13);
    }

    #[test]
    fn displacement_covariance(
        state in assorted_state().prop_filter("closed-form displacement", |s| s.displaced(Complex64::new(0.0, 0.0)).is_ok()),
        rect in rectangle(),
        beta in complex(1.5),
    ) {
        let shift = beta * Complex64::from_polar(1.0, -rect.theta);
        let moved = RectangleSpec::new(rect.theta, rect.x0 + shift.re, rect.x1 + shift.re, rect.y0 + shift.im, rect.y1 + shift.im).unwrap();
        let a = eval_j(&state.displaced(beta).unwrap(), &PointSet4::rectangle(moved).unwrap()).unwrap().value;
        let b = eval_j(&state, &PointSet4::rectangle(rect).unwrap()).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
    }

    #[test]
    fn rotation_covariance(state in assorted_state(), rect in rectangle(), angle in -PI..PI) {
        let turned = RectangleSpec { theta: rect.theta + angle, ..rect };
        let a = eval_j(&state.rotated(angle), &PointSet4::rectangle(turned).unwrap()).unwrap().value;
        let b = eval_j(&state, &PointSet4::rectangle(rect).unwrap()).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
    }

    #[test]
    fn squeeze_equivalence(g in gaussian_spec(1.0, 1.5, 1.0), rect in rectangle(), r in 0.0f64..1.2, phi in 0.0..PI) {
        let map = SqueezeMap::new(r, phi).unwrap();
        let on_points = eval_j(&StateSpec::from(g), &squeeze_points(&rect, &map).unwrap()).unwrap().value;
        // frame squeeze S acts in (q, p) as R S Rᵀ
        let m = mul(mul(rot(rect.theta), map.matrix()), transpose(rot(rect.theta)));
        let squeezed: GaussianSpec = g.pulled_back(m).unwrap();
        let on_state = eval_j(&squeezed.into(), &PointSet4::rectangle(rect).unwrap()).unwrap().value;
        prop_assert!((on_points - on_state).abs() <= 1e-10, "{on_points} vs {on_state}");
    }

    #[test]
    fn squeeze_map_is_unimodular(r in 0.0f64..3.0, phi in -PI..PI) {
        let m = SqueezeMap::new(r, phi).unwrap().matrix();
        prop_assert!((m[0][0] * m[1][1] - m[0][1] * m[1][0] - 1.0).abs() <= 1e-12 * m[0][0].abs().max(1.0).powi(2));
    }

    #[test]
    fn negative_vertex_relabeling(state in assorted_state(), rect in rectangle()) {
        // minus sign on (x0, y0) is the standard form with both axes relabeled
        let w = |x: f64, y: f64| displaced_parity(&state, x, y, rect.theta).unwrap();
        let flipped = -w(rect.x0, rect.y0) + w(rect.x0, rect.y1) + w(rect.x1, rect.y0) + w(rect.x1, rect.y1);
        let swapped = RectangleSpec { x0: rect.x1, x1: rect.x0, y0: rect.y1, y1: rect.y0, ..rect };
        let j = eval_j(&state, &PointSet4::rectangle(swapped).unwrap()).unwrap();
        prop_assert!((j.value - flipped).abs() <= 1e-13);
        prop_assert_eq!(j.parities.iter().filter(|p| p.sign < 0.0).count(), 1);
    }

    #[test]
    fn vertices_round_trip(rect in rectangle(), r in 0.0f64..1.5, phi in 0.0..PI) {
        let points = squeeze_points(&rect, &SqueezeMap::new(r, phi).unwrap()).unwrap();
        let qp = |j: usize, k: usize| {
            let (x, y) = points.vertex(j, k);
            nonclassical::states::frame_to_qp(x, y, rect.theta)
        };
        let area = (rect.x1 - rect.x0).abs() * (rect.y1 - rect.y0).abs();
        prop_assume!(area > 1e-3);
        let back = PointSet4::from_vertices([qp(0, 0), qp(0, 1), qp(1, 0), qp(1, 1)]).unwrap();
        for j in 0..2 {
            for k in 0..2 {
                let (a, b) = (qp(j, k), {
                    let (x, y) = back.vertex(j, k);
                    nonclassical::states::frame_to_qp(x, y, back.theta())
                });
                prop_assert!((a.0 - b.0).abs() < 1e-8 && (a.1 - b.1).abs() < 1e-8, "{a:?} vs {b:?}");
            }
        }
    }
}
