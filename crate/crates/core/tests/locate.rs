use heatopt_core::assembly::{Conductivity, Discretization, QuadratureOptions, StateSolver};
use heatopt_core::model::{build_cloak_model, two_stage_refine, CloakConfig, PointLocator, RefinementSpec};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn located_points_map_back_and_sample_the_linear_field(seed in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 200)) {
        let coarse = build_cloak_model(CloakConfig::III).unwrap();
        let (basis, model) =
            two_stage_refine(&coarse, &RefinementSpec::new(2, 1, 3, 4), &RefinementSpec::new(2, 2, 6, 6)).unwrap();
        let [lo, hi] = model.bounding_box();
        let disc = Discretization::new(model, basis, QuadratureOptions::default()).unwrap();
        let linear = |x: [f64; 2]| 300.0 - 100.0 * (x[0] - lo[0]) / (hi[0] - lo[0]);
        // control values of the linear field reproduce it exactly
        let exact_t: Vec<f64> =
            disc.model.patches.iter().flat_map(|p| p.nurbs.control_points().iter().map(|&c| linear(c))).collect();
        let solved = StateSolver::new(&disc).unwrap().solve_state(&disc, &Conductivity::uniform(&disc, 50.0)).unwrap().t;
        let loc = PointLocator::new(&disc.model, 2);
        for (a, b) in seed {
            let x = [lo[0] + a * (hi[0] - lo[0]), lo[1] + b * (hi[1] - lo[1])];
            let (k, xi) = loc.locate(&disc.model, x).expect("point of the rectangular plate not found");
            let y = disc.model.patches[k].nurbs.point(xi).unwrap();
            prop_assert!((x[0] - y[0]).hypot(x[1] - y[1]) <= 1e-9);
            let v = disc.model.field_at(&exact_t, k, xi).unwrap();
            prop_assert!((v - linear(y)).abs() <= 1e-9, "interpolant at {x:?}: {v}, error {:e}", v - linear(y));
            // the solve is exact only up to quadrature on this coarse curved mesh
            let v = disc.model.field_at(&solved, k, xi).unwrap();
            prop_assert!((v - linear(y)).abs() <= 1e-6, "solution at {x:?}: {v}");
        }
        prop_assert!(loc.locate(&disc.model, [hi[0] + 1.0, hi[1]]).is_none());
    }
}
