//! NURBS bases: knot vectors, rational basis evaluation, refinement and quadrature.

mod knots;
mod patch;
mod quadrature;
mod refine;

pub use knots::KnotVector;
pub use patch::{BasisEval, Direction, Edge, NurbsPatch, Point};
pub use quadrature::GaussRule;
pub use refine::{degree_elevate, knot_insert, subdivide};
pub(crate) use refine::{refine_curve, Hom};

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    /// Quarter annulus 1 <= r <= 2, first quadrant, quadratic x linear,
    /// with v running inward so the map is positively oriented.
    fn quarter_annulus() -> NurbsPatch {
        let ku = KnotVector::new(vec![0., 0., 0., 1., 1., 1.], 2).unwrap();
        let kv = KnotVector::new(vec![0., 0., 1., 1.], 1).unwrap();
        let mut cps = Vec::new();
        let mut ws = Vec::new();
        for r in [2.0, 1.0] {
            cps.extend([[r, 0.0], [r, r], [0.0, r]]);
            ws.extend([1.0, FRAC_1_SQRT_2, 1.0]);
        }
        NurbsPatch::new(ku, kv, cps, ws).unwrap()
    }

    fn radius(p: Point) -> f64 {
        p[0].hypot(p[1])
    }

    fn max_geometry_gap(a: &NurbsPatch, b: &NurbsPatch) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..=20 {
            for j in 0..=20 {
                let xi = [i as f64 / 20.0, j as f64 / 20.0];
                let pa = a.point(xi).unwrap();
                let pb = b.point(xi).unwrap();
                worst = worst.max((pa[0] - pb[0]).abs()).max((pa[1] - pb[1]).abs());
            }
        }
        worst
    }

    #[test]
    fn quarter_circle_is_exact() {
        let patch = quarter_annulus();
        for i in 0..=50 {
            let u = i as f64 / 50.0;
            for (v, r) in [(0.0, 2.0), (1.0, 1.0)] {
                let p = patch.point([u, v]).unwrap();
                assert!((radius(p) - r).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn physical_gradients_match_finite_differences() {
        let patch = quarter_annulus();
        let xi = [0.37, 0.61];
        let e = patch.eval_basis(xi).unwrap();
        let h = 1e-6;
        for (k, &idx) in e.indices.iter().enumerate() {
            let val_at = |xi: [f64; 2]| {
                let e = patch.eval_basis(xi).unwrap();
                e.indices.iter().position(|&i| i == idx).map_or(0.0, |p| e.values[p])
            };
            let du = (val_at([xi[0] + h, xi[1]]) - val_at([xi[0] - h, xi[1]])) / (2.0 * h);
            let dv = (val_at([xi[0], xi[1] + h]) - val_at([xi[0], xi[1] - h])) / (2.0 * h);
            assert!((du - e.param_grads[k][0]).abs() < 1e-7);
            assert!((dv - e.param_grads[k][1]).abs() < 1e-7);
            // chain rule back to parameters
            let g = e.grads[k];
            let j = e.jacobian;
            assert!((g[0] * j[0][0] + g[1] * j[1][0] - du).abs() < 1e-7);
            assert!((g[0] * j[0][1] + g[1] * j[1][1] - dv).abs() < 1e-7);
        }
    }

    #[test]
    fn insertion_preserves_geometry_and_grows_net() {
        let patch = quarter_annulus();
        assert_eq!(knot_insert(&patch, &[], Direction::U).unwrap(), patch);
        let refined = knot_insert(&patch, &[0.5], Direction::U).unwrap();
        assert_eq!(refined.n_u(), 4);
        assert!(max_geometry_gap(&patch, &refined) < 1e-12);
        for i in 0..=40 {
            let p = refined.point([i as f64 / 40.0, 1.0]).unwrap();
            assert!((radius(p) - 1.0).abs() < 1e-12);
        }
        // two uniform bisections in both directions
        let mut twice = patch.clone();
        for _ in 0..2 {
            twice = subdivide(&twice, 2, Direction::U).unwrap();
            twice = subdivide(&twice, 2, Direction::V).unwrap();
        }
        assert_eq!((twice.n_u(), twice.n_v()), (4 + 2, 4 + 1));
        assert!(max_geometry_gap(&patch, &twice) < 1e-10);
    }

    #[test]
    fn insertion_rejects_overflow() {
        let patch = quarter_annulus();
        assert!(knot_insert(&patch, &[0.5, 0.5, 0.5], Direction::U).is_err());
        assert!(knot_insert(&patch, &[1.0], Direction::U).is_err());
        assert!(knot_insert(&patch, &[0.5, 0.5], Direction::U).is_ok());
    }

    #[test]
    fn elevation_preserves_geometry() {
        let patch = quarter_annulus();
        assert_eq!(degree_elevate(&patch, 0, Direction::U).unwrap(), patch);
        let e = degree_elevate(&patch, 1, Direction::U).unwrap();
        assert_eq!(e.degree(Direction::U), 3);
        assert!(max_geometry_gap(&patch, &e) < 1e-10);
        let e2 = degree_elevate(&e, 2, Direction::V).unwrap();
        assert_eq!(e2.degree(Direction::V), 3);
        assert!(max_geometry_gap(&patch, &e2) < 1e-10);
    }

    #[test]
    fn elevation_keeps_interior_continuity() {
        let patch = subdivide(&quarter_annulus(), 3, Direction::U).unwrap();
        let e = degree_elevate(&patch, 1, Direction::U).unwrap();
        // simple interior knots stay simple relative to degree: multiplicity 2 for p=3
        assert_eq!(e.knots_u().multiplicity(1.0 / 3.0), 2);
        assert_eq!(e.n_u(), 5 + 3);
        assert!(max_geometry_gap(&patch, &e) < 1e-10);
    }

    #[test]
    fn elevation_and_insertion_commute_geometrically() {
        let patch = quarter_annulus();
        let a = knot_insert(&degree_elevate(&patch, 1, Direction::U).unwrap(), &[0.3, 0.7], Direction::U).unwrap();
        let b = degree_elevate(&knot_insert(&patch, &[0.3, 0.7], Direction::U).unwrap(), 1, Direction::U).unwrap();
        assert!(max_geometry_gap(&a, &b) < 1e-10);
    }

    #[test]
    fn uniform_weights_reduce_to_bspline() {
        let ku = KnotVector::new(vec![0., 0., 0., 0.4, 1., 1., 1.], 2).unwrap();
        let kv = KnotVector::new(vec![0., 0., 1., 1.], 1).unwrap();
        let cps: Vec<Point> = (0..8).map(|k| [(k % 4) as f64, (k / 4) as f64]).collect();
        let patch = NurbsPatch::new(ku.clone(), kv, cps, vec![1.0; 8]).unwrap();
        let e = patch.eval_basis([0.7, 0.25]).unwrap();
        let mut vals = [0.0; 3];
        let mut ders = [0.0; 3];
        let span = ku.find_span(0.7).unwrap();
        ku.basis_with_derivs(span, 0.7, &mut vals, &mut ders);
        for (k, &idx) in e.indices.iter().enumerate() {
            let (i, j) = (idx % 4, idx / 4);
            let nv = if j == 0 { 0.75 } else { 0.25 };
            assert!((e.values[k] - vals[i + 2 - span] * nv).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn partition_of_unity(u in 0.0f64..=1.0, v in 0.0f64..=1.0) {
            let patch = subdivide(&degree_elevate(&quarter_annulus(), 1, Direction::V).unwrap(), 3, Direction::U).unwrap();
            let e = patch.eval_basis([u, v]).unwrap();
            let s: f64 = e.values.iter().sum();
            let gu: f64 = e.param_grads.iter().map(|g| g[0]).sum();
            let gv: f64 = e.param_grads.iter().map(|g| g[1]).sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(gu.abs() < 1e-12 && gv.abs() < 1e-12);
            prop_assert!(e.det_j > 0.0);
        }

        #[test]
        fn refinement_invariance(u in 0.0f64..=1.0, v in 0.0f64..=1.0, k in 0.05f64..0.95) {
            let patch = quarter_annulus();
            let ins = knot_insert(&patch, &[k], Direction::U).unwrap();
            let ele = degree_elevate(&ins, 1, Direction::V).unwrap();
            let a = patch.point([u, v]).unwrap();
            let b = ele.point([u, v]).unwrap();
            prop_assert!((a[0] - b[0]).abs() < 1e-10 && (a[1] - b[1]).abs() < 1e-10);
        }
    }
}
