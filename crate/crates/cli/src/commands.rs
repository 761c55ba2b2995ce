//! The four subcommands. Each returns a report and writes its files into the
//! configured output directory.

use std::fmt;
use std::path::PathBuf;

use heatopt_core::assembly::{Conductivity, Discretization, StateSolver};
use heatopt_core::levelset::{interface_points, perimeter, project_lsf, ZeroPoint};
use heatopt_core::objectives::ObjectiveValue;
use heatopt_core::optimizer::{optimize_observed, StopReason};
use heatopt_core::oracle::{annulus_objective, annulus_objective_derivative, annulus_optimum, annulus_state};
use heatopt_core::{DesignProblem, SqpResult};

use crate::config::{MeshConfig, Problem, RunConfig, Shape};
use crate::error::CliError;
use crate::output::{interface_csv, quadrature_csv, vtk_grid, write_file, Csv};
use crate::setup;

/// Relative L2 errors of the state and adjoint against the analytic annulus
/// solution with a sharp interface at `rl`.
pub fn annulus_errors(
    disc: &Discretization,
    cfg: &RunConfig,
    rl: f64,
    t: &[f64],
    adjoint: &[f64],
) -> Result<(f64, f64), CliError> {
    let sol = annulus_state(setup::annulus_params(&disc.model, cfg), rl)?;
    let adj = sol.adjoint()?;
    let th = disc.field_at_points(t);
    let ph = disc.field_at_points(adjoint);
    let [mut et, mut nt, mut ep, mut np] = [0.0; 4];
    let pts = disc.elements.iter().flat_map(|el| el.points.iter());
    for ((pt, a), b) in pts.zip(&th).zip(&ph) {
        let r = pt.x[0].hypot(pt.x[1]);
        let (te, pe) = (sol.temperature(r), adj.value(r));
        et += pt.w * (a - te).powi(2);
        nt += pt.w * te * te;
        ep += pt.w * (b - pe).powi(2);
        np += pt.w * pe * pe;
    }
    Ok(((et / nt).sqrt(), (ep / np).sqrt()))
}

/// Interface radius of the configured circle, when the initial field is one
/// centred on the origin.
fn centred_radius(cfg: &RunConfig) -> Option<f64> {
    let i = &cfg.initial;
    (i.shape == Shape::Circle && i.center == [0.0, 0.0]).then_some(i.radius)
}

pub struct SolveReport {
    pub output_dir: PathBuf,
    /// Objective terms; `None` for the plate.
    pub value: Option<ObjectiveValue>,
    pub temperature_range: [f64; 2],
    /// Annulus with a centred circle: interface radius and the relative L2
    /// errors of state and adjoint.
    pub annulus: Option<(f64, f64, f64)>,
}

impl fmt::Display for SolveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "temperature range: {:.6e} .. {:.6e}", self.temperature_range[0], self.temperature_range[1])?;
        if let Some(v) = &self.value {
            writeln!(f, "J_main  = {:.10e}", v.j_main)?;
            writeln!(f, "J_tknv  = {:.10e}", v.j_tknv)?;
            writeln!(f, "J_vol   = {:.10e}", v.j_vol)?;
            writeln!(f, "J_total = {:.10e}", v.j_total)?;
        }
        if let Some((rl, et, ep)) = self.annulus {
            writeln!(f, "annulus R_L = {rl}: relative L2 error T {et:.4e}, P {ep:.4e}")?;
        }
        write!(f, "output: {}", self.output_dir.display())
    }
}

fn range(t: &[f64]) -> [f64; 2] {
    t.iter().fold([f64::INFINITY, f64::NEG_INFINITY], |[a, b], &v| [a.min(v), b.max(v)])
}

pub fn solve(cfg: &RunConfig) -> Result<SolveReport, CliError> {
    let dir = cfg.output_dir.clone();
    if cfg.problem == Problem::Plate {
        let disc = setup::discretization(cfg, &cfg.solution)?;
        let cond = Conductivity::uniform(&disc, cfg.plate.kappa);
        let t = StateSolver::new(&disc)?.solve_state(&disc, &cond)?.t;
        write_file(&dir, "field.vtk", &vtk_grid(&disc, &t, None, cfg.grid)?)?;
        write_file(&dir, "field.csv", &quadrature_csv(&disc, &cond, &t))?;
        return Ok(SolveReport { output_dir: dir, value: None, temperature_range: range(&t), annulus: None });
    }
    let p = setup::design_problem(cfg)?;
    let vars = setup::initial_vars(cfg, &p)?;
    let e = p.evaluate(&vars)?;
    let t = &e.state.t;
    write_file(&dir, "field.vtk", &vtk_grid(&p.disc, t, Some((&e.coeffs, p.smoothing)), cfg.grid)?)?;
    write_file(&dir, "field.csv", &quadrature_csv(&p.disc, &e.conductivity, t))?;
    let annulus = match (cfg.problem, centred_radius(cfg)) {
        (Problem::Annulus, Some(rl)) => {
            let (et, ep) = annulus_errors(&p.disc, cfg, rl, t, &e.adjoint)?;
            Some((rl, et, ep))
        }
        _ => None,
    };
    Ok(SolveReport { output_dir: dir, temperature_range: range(t), value: Some(e.value), annulus })
}

pub struct OptimizeReport {
    pub output_dir: PathBuf,
    pub result: SqpResult,
    /// Objective terms at the returned design.
    pub value: ObjectiveValue,
    pub interface: Vec<ZeroPoint>,
    /// Design variables (after symmetry reduction) at the start.
    pub initial: Vec<f64>,
}

impl OptimizeReport {
    /// Median distance of the interface points from the origin.
    pub fn median_radius(&self) -> Option<f64> {
        let mut r: Vec<f64> = self.interface.iter().map(|z| z.x[0].hypot(z.x[1])).collect();
        r.sort_by(f64::total_cmp);
        r.get(r.len() / 2).copied()
    }

    /// Function evaluations until the main objective first reached `level`.
    pub fn fevals_to_reach(&self, level: f64) -> Option<usize> {
        self.result.history.iter().find(|h| h.parts[0] <= level).map(|h| h.fevals)
    }
}

impl fmt::Display for OptimizeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = &self.result;
        writeln!(f, "stop: {:?} after {} iterations, {} evaluations, {} reinitializations", r.reason, r.iterations, r.fevals, r.reinits)?;
        writeln!(f, "J_main  = {:.10e}", self.value.j_main)?;
        writeln!(f, "J_tknv  = {:.10e}", self.value.j_tknv)?;
        writeln!(f, "J_vol   = {:.10e}", self.value.j_vol)?;
        writeln!(f, "J_total = {:.10e}", self.value.j_total)?;
        if let Some(m) = self.median_radius() {
            writeln!(f, "interface points: {}, median radius {m:.6}", self.interface.len())?;
        }
        write!(f, "output: {}", self.output_dir.display())
    }
}

pub fn optimize(cfg: &RunConfig) -> Result<OptimizeReport, CliError> {
    let mut p = setup::design_problem(cfg)?;
    let x0 = setup::initial_vars(cfg, &p)?;
    optimize_problem(cfg, &mut p, &x0)
}

pub fn optimize_problem(cfg: &RunConfig, p: &mut DesignProblem, x0: &[f64]) -> Result<OptimizeReport, CliError> {
    let sqp = setup::sqp_config(cfg, p);
    let result = optimize_observed(p, x0, &sqp, |rec, _| {
        log::info!(
            "iter {:4} fevals {:5} J {:.6e} |g| {:.3e}{}",
            rec.iteration,
            rec.fevals,
            rec.value,
            rec.gradient_norm,
            if rec.reinitialized { " reinit" } else { "" }
        );
    })?;
    if let StopReason::EvaluationFailed(msg) = &result.reason {
        log::warn!("evaluation failed, keeping the best design seen: {msg}");
    }
    let e = p.evaluate(&result.x)?;
    let interface = interface_points(&p.disc.design, &e.coeffs, cfg.reinit.lines_per_span)?;

    let dir = cfg.output_dir.clone();
    let mut conv = Csv::new(&["iteration", "fevals", "j_total", "j_main", "j_tknv", "j_vol", "gradient_norm", "step", "reinitialized"]);
    for h in &result.history {
        conv.row(&[
            h.iteration as f64,
            h.fevals as f64,
            h.value,
            h.parts[0],
            h.parts[1],
            h.parts[2],
            h.gradient_norm,
            h.step,
            if h.reinitialized { 1.0 } else { 0.0 },
        ]);
    }
    write_file(&dir, "convergence.csv", &conv.into_string())?;
    let mut coeffs = Csv::new(&["index", "x", "y", "phi"]);
    for (i, (c, v)) in p.disc.design.control_points().iter().zip(&e.coeffs).enumerate() {
        coeffs.row(&[i as f64, c[0], c[1], *v]);
    }
    write_file(&dir, "coefficients.csv", &coeffs.into_string())?;
    write_file(&dir, "interface.csv", &interface_csv(&interface))?;
    write_file(&dir, "field.vtk", &vtk_grid(&p.disc, &e.state.t, Some((&e.coeffs, p.smoothing)), cfg.grid)?)?;
    Ok(OptimizeReport { output_dir: dir, result, value: e.value, interface, initial: x0.to_vec() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// Interface radius grid at every delta.
    Radius,
    /// Deltas at the configured solution refinement.
    Delta,
    /// Every refinement at every delta.
    Refinement,
}

impl std::str::FromStr for SweepKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "radius" => Ok(Self::Radius),
            "delta" => Ok(Self::Delta),
            "refinement" => Ok(Self::Refinement),
            _ => Err(CliError::Config(format!("unknown sweep '{s}' (radius, delta, refinement)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiusRow {
    pub delta: f64,
    pub rl: f64,
    pub j: f64,
    pub j_exact: f64,
    pub dj: f64,
    pub dj_exact: f64,
    pub perimeter: f64,
    pub t_error: f64,
    pub p_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementRow {
    pub delta: f64,
    pub tangential: usize,
    pub radial: usize,
    pub dofs: usize,
    pub h_avg: f64,
    pub j: f64,
    pub err_j: f64,
    pub t_error: f64,
    pub p_error: f64,
}

/// Least-squares line `log10 err_J = m log10(delta / h_avg) + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
}

pub struct SweepReport {
    pub output_dir: PathBuf,
    pub radius: Vec<RadiusRow>,
    pub refinement: Vec<RefinementRow>,
    pub fit: Option<PowerFit>,
}

impl fmt::Display for SweepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in distinct(self.radius.iter().map(|r| r.delta)) {
            let dev = self
                .radius
                .iter()
                .filter(|r| r.delta == d)
                .map(|r| ((r.j - r.j_exact) / r.j_exact).abs())
                .fold(0.0, f64::max);
            writeln!(f, "delta {d}: max relative deviation of J {dev:.4e}")?;
        }
        for r in &self.refinement {
            writeln!(f, "delta {} dofs {} delta/h {:.4e} err_J {:.4e}", r.delta, r.dofs, r.delta / r.h_avg, r.err_j)?;
        }
        if let Some(fit) = self.fit {
            writeln!(f, "log-log fit: slope {:.4}, intercept {:.4}", fit.slope, fit.intercept)?;
        }
        write!(f, "output: {}", self.output_dir.display())
    }
}

fn distinct(v: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for x in v {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

pub fn fit_power_law(points: &[(f64, f64)]) -> Option<PowerFit> {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.log10(), y.log10())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some(PowerFit { slope, intercept: my - slope * mx })
}

/// J, dJ/dR_L and the field errors of a centred circular interface.
fn annulus_point(p: &mut DesignProblem, cfg: &RunConfig, delta: f64, rl: f64) -> Result<RadiusRow, CliError> {
    p.smoothing = heatopt_core::levelset::SmoothingParams::new(delta, cfg.smoothing.alpha)?;
    let vars = project_lsf(&p.disc, &p.symmetry, |x| x[0].hypot(x[1]) - rl)?;
    let e = p.evaluate(&vars)?;
    // shifting the radius lowers every coefficient at unit rate
    let dj = -e.value.grad_main.iter().sum::<f64>();
    let params = setup::annulus_params(&p.disc.model, cfg);
    let (t_error, p_error) = annulus_errors(&p.disc, cfg, rl, &e.state.t, &e.adjoint)?;
    Ok(RadiusRow {
        delta,
        rl,
        j: e.value.j_main,
        j_exact: annulus_objective(params, rl)?,
        dj,
        dj_exact: annulus_objective_derivative(params, rl)?,
        perimeter: perimeter(&p.disc, &e.coeffs, p.smoothing),
        t_error,
        p_error,
    })
}

pub fn sweep(cfg: &RunConfig, kind: SweepKind) -> Result<SweepReport, CliError> {
    if cfg.problem != Problem::Annulus {
        return Err(CliError::Config("sweeps are defined for the annulus problem".into()));
    }
    let dir = cfg.output_dir.clone();
    let mut report = SweepReport { output_dir: dir.clone(), radius: Vec::new(), refinement: Vec::new(), fit: None };
    match kind {
        SweepKind::Radius => {
            let mut p = setup::design_problem(cfg)?;
            let [a, b] = cfg.sweep.radius_range;
            let n = cfg.sweep.radius_count;
            for &delta in &cfg.sweep.deltas {
                for k in 0..n {
                    let rl = if n == 1 { a } else { a + (b - a) * k as f64 / (n - 1) as f64 };
                    report.radius.push(annulus_point(&mut p, cfg, delta, rl)?);
                }
            }
            let mut csv = Csv::new(&[
                "delta", "r_l", "j", "j_exact", "dj", "dj_exact", "perimeter", "perimeter_exact", "t_error", "p_error",
            ]);
            for r in &report.radius {
                let per = 2.0 * std::f64::consts::PI * r.rl;
                csv.row(&[r.delta, r.rl, r.j, r.j_exact, r.dj, r.dj_exact, r.perimeter, per, r.t_error, r.p_error]);
            }
            write_file(&dir, "sweep_radius.csv", &csv.into_string())?;
        }
        SweepKind::Delta | SweepKind::Refinement => {
            let meshes: Vec<MeshConfig> = match kind {
                SweepKind::Delta => vec![cfg.solution.clone()],
                _ => cfg
                    .sweep
                    .refinements
                    .iter()
                    .map(|&[t, r]| MeshConfig { tangential: t, radial: r, ..cfg.solution.clone() })
                    .collect(),
            };
            for mesh in &meshes {
                let disc = setup::discretization(cfg, mesh)?;
                let mut p = setup::design_problem_on(cfg, disc)?;
                let h_avg = p.disc.mean_element_size(None);
                for &delta in &cfg.sweep.deltas {
                    let row = annulus_point(&mut p, cfg, delta, cfg.sweep.radius)?;
                    report.refinement.push(RefinementRow {
                        delta,
                        tangential: mesh.tangential,
                        radial: mesh.radial,
                        dofs: p.disc.n_dofs,
                        h_avg,
                        j: row.j,
                        err_j: ((row.j - row.j_exact) / row.j_exact).abs(),
                        t_error: row.t_error,
                        p_error: row.p_error,
                    });
                }
            }
            let pts: Vec<(f64, f64)> = report.refinement.iter().map(|r| (r.delta / r.h_avg, r.err_j)).collect();
            report.fit = fit_power_law(&pts);
            let mut csv = Csv::new(&[
                "delta", "tangential", "radial", "dofs", "h_avg", "delta_over_h", "j", "err_j", "t_error", "p_error",
            ]);
            for r in &report.refinement {
                csv.row(&[
                    r.delta,
                    r.tangential as f64,
                    r.radial as f64,
                    r.dofs as f64,
                    r.h_avg,
                    r.delta / r.h_avg,
                    r.j,
                    r.err_j,
                    r.t_error,
                    r.p_error,
                ]);
            }
            let name = if kind == SweepKind::Delta { "sweep_delta.csv" } else { "sweep_refinement.csv" };
            write_file(&dir, name, &csv.into_string())?;
            if let Some(fit) = report.fit {
                let mut csv = Csv::new(&["slope", "intercept"]);
                csv.row(&[fit.slope, fit.intercept]);
                write_file(&dir, "sweep_fit.csv", &csv.into_string())?;
            }
        }
    }
    Ok(report)
}

pub struct OracleReport {
    pub output_dir: PathBuf,
    pub optimum: (f64, f64),
    pub rows: usize,
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "analytic optimum: R_L = {:.8}, J = {:.8e}", self.optimum.0, self.optimum.1)?;
        write!(f, "{} samples written to {}", self.rows, self.output_dir.display())
    }
}

/// Analytic J and dJ/dR_L over the sweep radius range (ten samples per
/// configured sweep point).
pub fn oracle(cfg: &RunConfig) -> Result<OracleReport, CliError> {
    let model = setup::coarse_model(&RunConfig { problem: Problem::Annulus, ..cfg.clone() })?;
    let params = setup::annulus_params(&model, cfg);
    let [a, b] = cfg.sweep.radius_range;
    let n = 10 * cfg.sweep.radius_count.max(2);
    let mut csv = Csv::new(&["r_l", "j", "dj"]);
    for k in 0..=n {
        let rl = a + (b - a) * k as f64 / n as f64;
        csv.row(&[rl, annulus_objective(params, rl)?, annulus_objective_derivative(params, rl)?]);
    }
    let dir = cfg.output_dir.clone();
    write_file(&dir, "oracle.csv", &csv.into_string())?;
    Ok(OracleReport { output_dir: dir, optimum: annulus_optimum(params)?, rows: n + 1 })
}
