use heatopt_core::assembly::{Discretization, QuadratureOptions};
use heatopt_core::levelset::{project_lsf, SmoothingParams, SymmetryMap};
use heatopt_core::model::{
    build_annulus, build_camouflage_model, build_cloak_model, two_stage_refine, CloakConfig, MultiPatchModel,
    RefinementSpec,
};
use heatopt_core::objectives::{DesignProblem, ObjectiveKind};
use heatopt_core::oracle::{annulus_objective, AnnulusParams};
use proptest::prelude::*;

fn small(coarse: MultiPatchModel, kind: ObjectiveKind, delta: f64) -> DesignProblem {
    let (basis, model) =
        two_stage_refine(&coarse, &RefinementSpec::new(2, 1, 3, 4), &RefinementSpec::new(2, 2, 3, 4)).unwrap();
    let disc = Discretization::new(model, basis, QuadratureOptions::default()).unwrap();
    let sym = SymmetryMap::build(&disc.design, true).unwrap();
    DesignProblem::new(disc, sym, kind, 0.0, 0.0, SmoothingParams::new(delta, 0.0).unwrap()).unwrap()
}

fn ring(p: &DesignProblem, r0: f64) -> Vec<f64> {
    project_lsf(&p.disc, &p.symmetry, |x| x[0].hypot(x[1]) - r0).unwrap()
}

#[test]
fn disturbance_objectives_are_normalized() {
    for (coarse, kind) in [
        (build_cloak_model(CloakConfig::Circular).unwrap(), ObjectiveKind::Cloak),
        (build_camouflage_model().unwrap(), ObjectiveKind::Camouflage),
    ] {
        let p = small(coarse, kind, 0.001);
        let r = p.spec.reference.as_ref().unwrap();
        assert!(r.j_tilde > 0.0);
        let (at_bar, _) = p.spec.eval_main(&p.disc, &r.t_bar);
        let (at_tilde, _) = p.spec.eval_main(&p.disc, &r.t_tilde);
        assert_eq!(at_bar, 0.0);
        assert!((at_tilde - 1.0).abs() < 1e-12, "{kind:?}: {at_tilde}");
    }
}

#[test]
fn filling_the_design_with_the_insulator_gives_unit_objective() {
    // Phi < -Delta everywhere on the design ring selects k2
    let p = small(build_cloak_model(CloakConfig::Circular).unwrap(), ObjectiveKind::Cloak, 0.001);
    let x = vec![-1.0; p.num_vars()];
    let (v, _) = p.eval_total(&x).unwrap();
    assert!((v.j_main - 1.0).abs() < 1e-9, "{}", v.j_main);
}

#[test]
fn scaling_every_conductivity_leaves_objective_and_gradient_unchanged() {
    let coarse = build_cloak_model(CloakConfig::Circular).unwrap();
    let mut scaled = coarse.clone();
    let c = &mut scaled.conductivity;
    let f = 7.5;
    c.inside *= f;
    c.outside *= f;
    c.sector *= f;
    c.design = c.design.scaled(f);
    let a = small(coarse, ObjectiveKind::Cloak, 0.004);
    let b = small(scaled, ObjectiveKind::Cloak, 0.004);
    let x = ring(&a, 0.03);
    let (va, ga) = a.eval_total(&x).unwrap();
    let (vb, gb) = b.eval_total(&x).unwrap();
    assert!((va.j_main - vb.j_main).abs() <= 1e-8 * va.j_main);
    let scale = ga.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (p, q) in ga.iter().zip(&gb) {
        assert!((p - q).abs() <= 1e-7 * scale);
    }
}

#[test]
fn annulus_objective_converges_to_the_analytic_value() {
    let coarse = build_annulus(1.0, 2.0).unwrap();
    let (basis, model) =
        two_stage_refine(&coarse, &RefinementSpec::new(2, 1, 3, 4), &RefinementSpec::new(2, 2, 3, 100)).unwrap();
    let disc = Discretization::new(model, basis, QuadratureOptions::default()).unwrap();
    let sym = SymmetryMap::build(&disc.design, true).unwrap();
    let mut p = DesignProblem::new(disc, sym, ObjectiveKind::Annular, 0.0, 0.0, SmoothingParams::new(0.1, 0.0).unwrap())
        .unwrap();
    let exact = annulus_objective(AnnulusParams::default(), 1.5).unwrap();
    let x = ring(&p, 1.5);
    let mut last = f64::INFINITY;
    for delta in [0.1, 0.03, 0.01, 0.003] {
        p.smoothing = SmoothingParams::new(delta, 0.0).unwrap();
        let (v, _) = p.eval_total(&x).unwrap();
        let dev = (v.j_main - exact).abs() / exact;
        assert!(dev < last, "delta {delta}: deviation {dev} did not decrease");
        last = dev;
    }
    assert!(last <= 0.01);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn objective_terms_are_nonnegative(seed in prop::collection::vec(-0.02f64..0.02, 25), chi in 0.0f64..1e-2, rho in 0.0f64..1e-2) {
        let mut p = small(build_cloak_model(CloakConfig::Circular).unwrap(), ObjectiveKind::Cloak, 0.004);
        p.spec.chi = chi;
        p.spec.rho = rho;
        let x: Vec<f64> = ring(&p, 0.03).iter().zip(&seed).map(|(a, b)| a + b).collect();
        let (v, g) = p.eval_total(&x).unwrap();
        prop_assert!(v.j_main >= 0.0 && v.j_tknv >= 0.0 && v.j_vol >= 0.0);
        prop_assert!((v.j_total - (v.j_main + chi * v.j_tknv + rho * v.j_vol)).abs() <= 1e-14 * v.j_total.max(1.0));
        prop_assert!(g.iter().all(|c| c.is_finite()));
    }
}
