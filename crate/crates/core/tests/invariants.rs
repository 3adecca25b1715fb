use std::sync::Arc;

use proptest::prelude::*;

use jetcarnot::calibration::omega_eval;
use jetcarnot::heisenberg::{heisenberg_inverse, heisenberg_product};
use jetcarnot::jet::{dilate, JetPoint, JetShape, TangentVector};
use jetcarnot::nonextension::{certified_lower_bound, BoundaryMapSpec};
use jetcarnot::paths::{coordinate_lower_bound, endpoint, length, metric_bounds, ControlSignal, OptimizerOpts};

fn shape_strategy() -> impl Strategy<Value = Arc<JetShape>> {
    (1usize..=3, 1usize..=3).prop_map(|(n, k)| JetShape::new(n, k).unwrap())
}

fn point_in(shape: Arc<JetShape>, r: f64) -> impl Strategy<Value = JetPoint> {
    let d = shape.total_dim();
    prop::collection::vec(-r..r, d).prop_map(move |c| JetPoint::new(shape.clone(), c).unwrap())
}

fn heis(n: usize) -> Arc<JetShape> {
    JetShape::new(n, 1).unwrap()
}

fn controls(shape: Arc<JetShape>, steps: usize) -> impl Strategy<Value = ControlSignal> {
    let w = shape.horizontal_dim();
    prop::collection::vec(-2.0..2.0f64, steps * w)
        .prop_map(move |data| ControlSignal::new(shape.clone(), steps, data).unwrap())
}

fn close(a: &JetPoint, b: &JetPoint, tol: f64) -> bool {
    let scale = a.coords().iter().chain(b.coords()).fold(1.0f64, |m, v| m.max(v.abs()));
    a.max_abs_diff(b) <= tol * scale
}

proptest! {
    #[test]
    fn dilations_compose((p, a, b) in shape_strategy().prop_flat_map(|s| (point_in(s, 2.0), 0.1..4.0f64, 0.1..4.0f64))) {
        let twice = dilate(a, &dilate(b, &p).unwrap()).unwrap();
        prop_assert!(close(&twice, &dilate(a * b, &p).unwrap(), 1e-13));
        prop_assert!(close(&dilate(1.0 / a, &dilate(a, &p).unwrap()).unwrap(), &p, 1e-13));
    }

    #[test]
    fn dilation_is_a_homomorphism(
        (p, q) in (1usize..=3).prop_flat_map(|n| (point_in(heis(n), 3.0), point_in(heis(n), 3.0))),
        l in 0.05..20.0f64,
    ) {
        let lhs = dilate(l, &heisenberg_product(&p, &q).unwrap()).unwrap();
        let rhs = heisenberg_product(&dilate(l, &p).unwrap(), &dilate(l, &q).unwrap()).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn calibration_obeys_hadamard(
        (p, vs) in shape_strategy().prop_flat_map(|s| {
            let d = s.total_dim();
            let n = s.n();
            (point_in(s, 3.0), prop::collection::vec(prop::collection::vec(-3.0..3.0f64, d), n + 1))
        })
    ) {
        let vectors: Vec<TangentVector> = vs.into_iter().map(|v| TangentVector::new(p.clone(), v).unwrap()).collect();
        let bound: f64 = vectors.iter().map(TangentVector::g0_norm).product();
        let w = omega_eval(&p, &vectors).unwrap();
        prop_assert!(w.abs() <= bound * (1.0 + 1e-12) + 1e-300, "{} > {}", w, bound);
    }

    #[test]
    fn certified_bound_is_homogeneous(n in 1usize..=2, k in 1usize..=3, l in 0.25..16.0f64) {
        let one = certified_lower_bound(&BoundaryMapSpec::canonical(n, k, 1.0).unwrap()).unwrap();
        let at_l = certified_lower_bound(&BoundaryMapSpec::canonical(n, k, l).unwrap()).unwrap();
        let expected = one * l.powf(1.0 + k as f64 / (n + 1) as f64);
        prop_assert!((at_l - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn reversed_controls_retrace_the_curve(
        (p, sig) in shape_strategy().prop_flat_map(|s| (point_in(s.clone(), 1.0), controls(s, 8)))
    ) {
        let q = endpoint(&p, &sig).unwrap();
        let back = endpoint(&q, &sig.reversed()).unwrap();
        prop_assert!(close(&back, &p, 1e-9));
        prop_assert!((length(&sig) - length(&sig.reversed())).abs() <= 1e-14 * (1.0 + length(&sig)));
    }

    #[test]
    fn horizontal_flow_is_left_invariant(
        (g, p, sig) in (1usize..=2).prop_flat_map(|n| (point_in(heis(n), 2.0), point_in(heis(n), 2.0), controls(heis(n), 8)))
    ) {
        let moved_then_flowed = endpoint(&heisenberg_product(&g, &p).unwrap(), &sig).unwrap();
        let flowed_then_moved = heisenberg_product(&g, &endpoint(&p, &sig).unwrap()).unwrap();
        prop_assert!(close(&moved_then_flowed, &flowed_then_moved, 1e-10));
    }

    #[test]
    fn lower_bound_is_left_invariant(
        (g, p, q) in (1usize..=3).prop_flat_map(|n| (point_in(heis(n), 3.0), point_in(heis(n), 3.0), point_in(heis(n), 3.0)))
    ) {
        let base = coordinate_lower_bound(&p, &q).unwrap();
        let gp = heisenberg_product(&g, &p).unwrap();
        let gq = heisenberg_product(&g, &q).unwrap();
        prop_assert!((coordinate_lower_bound(&gp, &gq).unwrap() - base).abs() <= 1e-12 * (1.0 + base));
        let inv = heisenberg_inverse(&g).unwrap();
        prop_assert!(heisenberg_product(&inv, &g).unwrap().coords().iter().all(|v| v.abs() < 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn distance_sandwich((p, q) in (point_in(heis(1), 1.0), point_in(heis(1), 1.0))) {
        let opts = OptimizerOpts { steps: 32, starts: 3, ..OptimizerOpts::default() };
        let lower = coordinate_lower_bound(&p, &q).unwrap();
        let (cc, r0) = metric_bounds(&p, &q, &opts).unwrap();
        prop_assert!(lower <= r0.value * (1.0 + 1e-12), "lower {} > r0 {}", lower, r0.value);
        prop_assert!(r0.value <= cc.value + 1e-6, "r0 {} > cc {}", r0.value, cc.value);
        let (back, _) = metric_bounds(&q, &p, &opts).unwrap();
        prop_assert!((back.value - cc.value).abs() <= 0.02 * cc.value.max(1e-9), "{} vs {}", back.value, cc.value);
    }
}
