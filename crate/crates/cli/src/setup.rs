//! Turning a [`RunConfig`] into models, design problems and optimizer settings.

use heatopt_core::assembly::{Discretization, QuadratureOptions};
use heatopt_core::levelset::{project_lsf, SmoothingParams, SymmetryMap};
use heatopt_core::model::{
    build_annulus, build_camouflage_model, build_cloak_model, build_plate, two_stage_refine, DesignBasis,
    NitscheParams, RefinementSpec,
};
use heatopt_core::oracle::AnnulusParams;
use heatopt_core::{DesignProblem, MultiPatchModel, ObjectiveKind, Point, RegionLabel, SqpConfig};

use crate::config::{MeshConfig, Problem, RunConfig, Shape};
use crate::error::CliError;

/// Coarse model with material and Nitsche settings applied.
pub fn coarse_model(cfg: &RunConfig) -> Result<MultiPatchModel, CliError> {
    let mut model = match cfg.problem {
        Problem::Annulus => build_annulus(cfg.annulus.ra, cfg.annulus.rb)?,
        Problem::Cloak => build_cloak_model(cfg.cloak_config()?)?,
        Problem::Camouflage => build_camouflage_model()?,
        Problem::Plate => {
            let p = &cfg.plate;
            build_plate(p.width, p.height, p.nx, p.ny, p.kappa)?
        }
    };
    let m = &cfg.materials;
    let c = &mut model.conductivity;
    c.design.k1 = m.k1.unwrap_or(c.design.k1);
    c.design.k2 = m.k2.unwrap_or(c.design.k2);
    c.inside = m.inside.unwrap_or(c.inside);
    c.outside = m.outside.unwrap_or(c.outside);
    c.sector = m.sector.unwrap_or(c.sector);
    model.nitsche = NitscheParams { beta: cfg.nitsche.beta, gamma: cfg.nitsche.gamma };
    model.validate()?;
    Ok(model)
}

pub fn refinement(m: &MeshConfig) -> RefinementSpec {
    RefinementSpec::new(m.p, m.q, m.tangential, m.radial)
}

pub fn objective_kind(problem: Problem) -> Result<ObjectiveKind, CliError> {
    match problem {
        Problem::Annulus => Ok(ObjectiveKind::Annular),
        Problem::Cloak => Ok(ObjectiveKind::Cloak),
        Problem::Camouflage => Ok(ObjectiveKind::Camouflage),
        Problem::Plate => Err(CliError::Config("the plate problem has no design region".into())),
    }
}

pub fn smoothing(cfg: &RunConfig) -> Result<SmoothingParams, CliError> {
    Ok(SmoothingParams::new(cfg.smoothing.delta, cfg.smoothing.alpha)?)
}

/// Discretization with the configured design and solution refinements.
pub fn discretization(cfg: &RunConfig, solution: &MeshConfig) -> Result<Discretization, CliError> {
    let coarse = coarse_model(cfg)?;
    if cfg.problem == Problem::Plate {
        let model = heatopt_core::model::refine_model(&coarse, &refinement(solution))?;
        let empty = DesignBasis { patches: Vec::new(), num_functions: 0 };
        return Ok(Discretization::new(model, empty, QuadratureOptions::default())?);
    }
    let (basis, model) = two_stage_refine(&coarse, &refinement(&cfg.design.mesh()), &refinement(solution))?;
    Ok(Discretization::new(model, basis, QuadratureOptions::default())?)
}

pub fn design_problem_on(cfg: &RunConfig, disc: Discretization) -> Result<DesignProblem, CliError> {
    let sym = SymmetryMap::build(&disc.design, cfg.design.symmetry && disc.model.symmetric)?;
    let o = &cfg.objective;
    let mut p = DesignProblem::new(disc, sym, objective_kind(cfg.problem)?, o.chi, o.rho, smoothing(cfg)?)?;
    p.reinit.lines_per_span = cfg.reinit.lines_per_span;
    p.reinit.penalty_factor = cfg.reinit.penalty_factor;
    Ok(p)
}

pub fn design_problem(cfg: &RunConfig) -> Result<DesignProblem, CliError> {
    design_problem_on(cfg, discretization(cfg, &cfg.solution)?)
}

/// The configured analytic initial level set.
pub fn initial_field(cfg: &RunConfig) -> impl Fn(Point) -> f64 + Sync {
    let i = cfg.initial.clone();
    let lattice = move |n: usize, x: Point| {
        let mut best = f64::INFINITY;
        for a in 0..n {
            for b in 0..n {
                let off = |k: usize| (k as f64 - (n as f64 - 1.0) / 2.0) * i.spacing;
                let c = [i.center[0] + off(a), i.center[1] + off(b)];
                best = best.min((x[0] - c[0]).hypot(x[1] - c[1]));
            }
        }
        best - i.radius
    };
    move |x: Point| {
        let r = (x[0] - i.center[0]).hypot(x[1] - i.center[1]);
        match i.shape {
            Shape::Circle => r - i.radius,
            Shape::Ring => (r - i.radius).abs() - 0.5 * i.width,
            Shape::Lattice2 => lattice(2, x),
            Shape::Lattice3 => lattice(3, x),
            Shape::Constant => i.value,
        }
    }
}

pub fn initial_vars(cfg: &RunConfig, p: &DesignProblem) -> Result<Vec<f64>, CliError> {
    Ok(project_lsf(&p.disc, &p.symmetry, initial_field(cfg))?)
}

/// Optimizer settings; zero bound and zero initial step are resolved from
/// the size of the design region.
pub fn sqp_config(cfg: &RunConfig, p: &DesignProblem) -> SqpConfig {
    let o = &cfg.optimizer;
    let diameter = p.disc.model.diameter(Some(RegionLabel::Design));
    let bound = if o.bound > 0.0 { o.bound } else { diameter };
    let nonzero = |n: usize| (n > 0).then_some(n);
    SqpConfig {
        objective_limit: o.objective_limit,
        step_tolerance: o.step_tolerance,
        optimality_tolerance: o.optimality_tolerance,
        max_iterations: o.max_iterations,
        max_function_evaluations: o.max_function_evaluations,
        lower: -bound,
        upper: bound,
        initial_step: if o.initial_step > 0.0 { o.initial_step } else { 0.025 * diameter },
        reinit_every_iters: nonzero(o.reinit_iterations),
        reinit_every_fevals: nonzero(o.reinit_fevals),
        consecutive_steptol_stop: o.consecutive_steptol_stop,
        ..SqpConfig::default()
    }
}

/// Analytic annulus parameters matching the configured model.
pub fn annulus_params(model: &MultiPatchModel, cfg: &RunConfig) -> AnnulusParams {
    AnnulusParams {
        ra: cfg.annulus.ra,
        rb: cfg.annulus.rb,
        k_inner: model.conductivity.design.k2,
        k_outer: model.conductivity.design.k1,
        ..AnnulusParams::default()
    }
}
