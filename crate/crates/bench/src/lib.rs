//! Fixtures shared by the benchmarks.

use heatopt_core::assembly::{Discretization, QuadratureOptions};
use heatopt_core::levelset::{project_lsf, SmoothingParams, SymmetryMap};
use heatopt_core::model::{build_cloak_model, two_stage_refine, CloakConfig, RefinementSpec};
use heatopt_core::{DesignProblem, ObjectiveKind};

/// Circular cloak with the default design basis and a `tangential x radial`
/// solution mesh, seeded with a ring.
pub fn cloak_problem(tangential: usize, radial: usize) -> (DesignProblem, Vec<f64>) {
    let coarse = build_cloak_model(CloakConfig::Circular).unwrap();
    let (basis, model) = two_stage_refine(
        &coarse,
        &RefinementSpec::new(2, 1, 3, 4),
        &RefinementSpec::new(2, 2, tangential, radial),
    )
    .unwrap();
    let disc = Discretization::new(model, basis, QuadratureOptions::default()).unwrap();
    let sym = SymmetryMap::build(&disc.design, true).unwrap();
    let sp = SmoothingParams::new(5e-4, 0.0).unwrap();
    let p = DesignProblem::new(disc, sym, ObjectiveKind::Cloak, 0.0, 0.0, sp).unwrap();
    let x = project_lsf(&p.disc, &p.symmetry, |x| (x[0].hypot(x[1]) - 0.03).abs() - 0.004).unwrap();
    (p, x)
}
