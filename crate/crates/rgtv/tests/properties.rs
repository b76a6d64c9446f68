//! Randomized invariants of the graph operators and penalty curves.

mod common;

use proptest::prelude::*;

use rgtv::graph::{
    build_weights, edge_weight, gtv_value, laplacian_apply, rgtv_value, CurveKind,
    PairPenaltyCurve,
};
use rgtv::image::ImageBuf;

fn intensity() -> impl Strategy<Value = f64> {
    (0.0f64..=1.0).prop_map(|v| v)
}

fn small_image(w: usize, h: usize) -> impl Strategy<Value = ImageBuf> {
    proptest::collection::vec(intensity(), w * h)
        .prop_map(move |data| ImageBuf::new(w, h, data).unwrap())
}

proptest! {
    #[test]
    fn weight_symmetry(a in intensity(), b in intensity()) {
        prop_assert_eq!(
            edge_weight(a, b, 0.1).unwrap(),
            edge_weight(b, a, 0.1).unwrap()
        );
    }

    #[test]
    fn laplacian_annihilates_constants(v in intensity()) {
        let img = ImageBuf::constant(4, 4, v).unwrap();
        let w = build_weights(&img, 0.1).unwrap();
        let y = laplacian_apply(&w, &img).unwrap();
        prop_assert!(y.data().iter().all(|&z| z == 0.0));
    }

    #[test]
    fn laplacian_matches_dense_oracle(img in small_image(4, 4)) {
        let w = build_weights(&img, 0.1).unwrap();
        let fast = laplacian_apply(&w, &img).unwrap();
        let dense = common::dense_laplacian_multiply(&w, &img);
        for (a, b) in fast.data().iter().zip(&dense) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn laplacian_quadratic_form(img in small_image(4, 4), probe in small_image(4, 4)) {
        // x^T L x equals the edge sum over w_e (x_j - x_i)^2; weights built
        // from an unrelated probe image so they are not all ones.
        let w = build_weights(&probe, 0.1).unwrap();
        let lx = laplacian_apply(&w, &img).unwrap();
        let quad: f64 = img.data().iter().zip(lx.data()).map(|(a, b)| a * b).sum();
        let mut edge_sum = 0.0;
        for r in 0..4 {
            for c in 0..3 {
                let d = img.at(r, c + 1) - img.at(r, c);
                edge_sum += w.h_at(r, c) * d * d;
            }
        }
        for r in 0..3 {
            for c in 0..4 {
                let d = img.at(r + 1, c) - img.at(r, c);
                edge_sum += w.v_at(r, c) * d * d;
            }
        }
        prop_assert!((quad - edge_sum).abs() < 1e-10);
    }

    #[test]
    fn rgtv_equals_gtv_of_own_weights(img in small_image(5, 3)) {
        let w = build_weights(&img, 0.1).unwrap();
        prop_assert_eq!(
            rgtv_value(&img, 0.1).unwrap(),
            gtv_value(&w, &img).unwrap()
        );
    }

    #[test]
    fn derivatives_match_finite_differences(d in 1e-3f64..0.9, sigma in 0.05f64..0.5, w in 0.0f64..=1.0) {
        let step = 1e-6;
        for kind in [
            CurveKind::Gtv,
            CurveKind::Rgtv,
            CurveKind::GraphLaplacian,
            CurveKind::ReweightedGraphLaplacian,
        ] {
            let curve = PairPenaltyCurve::new(kind, sigma, w).unwrap();
            let numeric =
                (curve.penalty(d + step).unwrap() - curve.penalty(d - step).unwrap())
                    / (2.0 * step);
            let analytic = curve.derivative(d).unwrap();
            let tol = 1e-6 * analytic.abs().max(1.0);
            prop_assert!(
                (analytic - numeric).abs() < tol,
                "{:?} at d={}: {} vs {}",
                kind, d, analytic, numeric
            );
        }
    }

    #[test]
    fn curves_nonnegative_and_zero_at_origin(sigma in 0.05f64..0.5, w in 0.0f64..=1.0, d in 0.0f64..=1.0) {
        for kind in [
            CurveKind::Gtv,
            CurveKind::Rgtv,
            CurveKind::GraphLaplacian,
            CurveKind::ReweightedGraphLaplacian,
        ] {
            let curve = PairPenaltyCurve::new(kind, sigma, w).unwrap();
            prop_assert_eq!(curve.penalty(0.0).unwrap(), 0.0);
            prop_assert!(curve.penalty(d).unwrap() >= 0.0);
        }
    }

    #[test]
    fn kernel_text_round_trip(taps in proptest::collection::vec(0.0f64..1.0, 9)) {
        let sum: f64 = taps.iter().sum();
        prop_assume!(sum > 1e-3);
        let kernel = rgtv::Kernel::normalized(3, taps).unwrap();
        let back = rgtv::Kernel::from_text(&kernel.to_text()).unwrap();
        prop_assert_eq!(kernel, back);
    }
}
