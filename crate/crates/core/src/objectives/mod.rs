//! Objective functionals, reference fields, regularizers and the assembled
//! design problem evaluated by the optimizer.

use std::str::FromStr;

use crate::assembly::{
    adjoint_load, sensitivity, solve_adjoint, Conductivity, Discretization, StateSolution, StateSolver,
};
use crate::error::{Error, Result};
use crate::levelset::{reinitialize, volume_measure, SmoothingParams, SymmetryMap};
use crate::model::RegionLabel;
use crate::optimizer::{Evaluation, Objective};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    /// `int T^2` over the whole domain.
    Annular,
    /// Normalized disturbance of the plate field outside the cloak.
    Cloak,
    /// Normalized mismatch with the empty plate over object, design and plate.
    Camouflage,
}

impl FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "annular" | "annulus" => Ok(Self::Annular),
            "cloak" => Ok(Self::Cloak),
            "camouflage" => Ok(Self::Camouflage),
            _ => Err(Error::InvalidInput(format!("unknown objective kind '{s}'"))),
        }
    }
}

impl ObjectiveKind {
    /// Regions the main term integrates over (`None` means everywhere).
    pub fn region(self) -> Option<Vec<RegionLabel>> {
        match self {
            Self::Annular => None,
            Self::Cloak => Some(vec![RegionLabel::Outside]),
            Self::Camouflage => Some(vec![RegionLabel::Inside, RegionLabel::Design, RegionLabel::Outside]),
        }
    }
}

/// Reference temperatures for the disturbance objectives.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceFields {
    /// Field of the undisturbed plate (solution coefficients).
    pub t_bar: Vec<f64>,
    /// Field with the design region filled with the insulating material.
    pub t_tilde: Vec<f64>,
    /// `int |T_tilde - T_bar|^2` over the objective region.
    pub j_tilde: f64,
    t_bar_points: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    /// Tikhonov weight.
    pub chi: f64,
    /// Volume weight.
    pub rho: f64,
    pub reference: Option<ReferenceFields>,
    mask: Vec<bool>,
}

fn region_mask(disc: &Discretization, kind: ObjectiveKind) -> Vec<bool> {
    let region = kind.region();
    let mut mask = vec![false; disc.n_points];
    for el in &disc.elements {
        let inside = region.as_ref().is_none_or(|r| r.contains(&el.label));
        mask[el.first_point..el.first_point + el.points.len()].fill(inside);
    }
    mask
}

/// Conductivity given per region label.
pub fn conductivity_by_label(disc: &Discretization, kappa: impl Fn(RegionLabel) -> f64) -> Conductivity {
    let mut c = Conductivity::uniform(disc, 0.0);
    for el in &disc.elements {
        c.bulk[el.first_point..el.first_point + el.points.len()].fill(kappa(el.label));
    }
    for el in &disc.interfaces {
        let k = [kappa(disc.model.patches[el.patch[0]].label), kappa(disc.model.patches[el.patch[1]].label)];
        c.iface[el.first_point..el.first_point + el.points.len()].fill(k);
    }
    c
}

/// Solve the reference (`T_bar`) and insulator-filled (`T_tilde`) problems and the normalization.
pub fn compute_reference_fields(
    disc: &Discretization,
    solver: &StateSolver,
    kind: ObjectiveKind,
) -> Result<ReferenceFields> {
    let c = disc.model.conductivity;
    let base = c.outside;
    let bar = match kind {
        ObjectiveKind::Annular => return Err(Error::InvalidInput("the annular objective has no reference field".into())),
        ObjectiveKind::Cloak => conductivity_by_label(disc, |_| base),
        ObjectiveKind::Camouflage => conductivity_by_label(disc, |l| match l {
            RegionLabel::Sector => c.sector,
            _ => base,
        }),
    };
    let tilde = conductivity_by_label(disc, |l| c.region(l).unwrap_or(c.design.k2));
    let t_bar = solver.solve_state(disc, &bar)?.t;
    let t_tilde = solver.solve_state(disc, &tilde)?.t;
    let mask = region_mask(disc, kind);
    let t_bar_points = disc.field_at_points(&t_bar);
    let tt = disc.field_at_points(&t_tilde);
    let mut j_tilde = 0.0;
    for el in &disc.elements {
        for (q, pt) in el.points.iter().enumerate() {
            let i = el.first_point + q;
            if mask[i] {
                j_tilde += pt.w * (tt[i] - t_bar_points[i]).powi(2);
            }
        }
    }
    if !(j_tilde > 0.0 && j_tilde.is_finite()) {
        return Err(Error::InvalidInput(
            "degenerate normalization: the insulator-filled field equals the reference field".into(),
        ));
    }
    Ok(ReferenceFields { t_bar, t_tilde, j_tilde, t_bar_points })
}

impl ObjectiveSpec {
    /// Build the spec, solving the reference problems when the kind needs them.
    pub fn new(disc: &Discretization, solver: &StateSolver, kind: ObjectiveKind, chi: f64, rho: f64) -> Result<Self> {
        if !(chi >= 0.0 && rho >= 0.0) {
            return Err(Error::InvalidInput("objective weights must be non-negative".into()));
        }
        let reference = match kind {
            ObjectiveKind::Annular => None,
            _ => Some(compute_reference_fields(disc, solver, kind)?),
        };
        Ok(Self { kind, chi, rho, reference, mask: region_mask(disc, kind) })
    }

    /// Main term and the adjoint source `-dj/dT` at every bulk point.
    pub fn eval_main(&self, disc: &Discretization, t: &[f64]) -> (f64, Vec<f64>) {
        let vals = disc.field_at_points(t);
        let mut j = 0.0;
        let mut source = vec![0.0; disc.n_points];
        for el in &disc.elements {
            for (q, pt) in el.points.iter().enumerate() {
                let i = el.first_point + q;
                if !self.mask[i] {
                    continue;
                }
                match &self.reference {
                    None => {
                        j += pt.w * vals[i] * vals[i];
                        source[i] = -2.0 * vals[i];
                    }
                    Some(r) => {
                        let e = vals[i] - r.t_bar_points[i];
                        j += pt.w * e * e / r.j_tilde;
                        source[i] = -2.0 * e / r.j_tilde;
                    }
                }
            }
        }
        (j, source)
    }
}

/// `int |grad Phi|^2` over the design patches and its gradient.
pub fn tikhonov(disc: &Discretization, coeffs: &[f64]) -> (f64, Vec<f64>) {
    let mut j = 0.0;
    let mut g = vec![0.0; disc.num_design()];
    for (p, d) in disc.design_points() {
        let gp = d.grad_phi(coeffs);
        j += p.w * (gp[0] * gp[0] + gp[1] * gp[1]);
        for (&i, dr) in d.idx.iter().zip(&d.grad) {
            g[i] += 2.0 * p.w * (gp[0] * dr[0] + gp[1] * dr[1]);
        }
    }
    (j, g)
}

/// All objective terms with gradients over the full coefficient vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveValue {
    pub j_main: f64,
    pub j_tknv: f64,
    pub j_vol: f64,
    pub j_total: f64,
    pub grad_main: Vec<f64>,
    pub grad_tknv: Vec<f64>,
    pub grad_vol: Vec<f64>,
    pub grad_total: Vec<f64>,
}

/// Reinitialization settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReinitSettings {
    pub lines_per_span: usize,
    pub penalty_factor: f64,
}

impl Default for ReinitSettings {
    fn default() -> Self {
        Self { lines_per_span: 20, penalty_factor: 1e6 }
    }
}

/// Everything needed to evaluate the design objective for a vector of free variables.
pub struct DesignProblem {
    pub disc: Discretization,
    pub solver: StateSolver,
    pub symmetry: SymmetryMap,
    pub spec: ObjectiveSpec,
    pub smoothing: SmoothingParams,
    pub reinit: ReinitSettings,
}

/// State, adjoint and objective terms of one evaluation.
pub struct FullEvaluation {
    pub coeffs: Vec<f64>,
    pub conductivity: Conductivity,
    pub state: StateSolution,
    pub adjoint: Vec<f64>,
    pub value: ObjectiveValue,
}

impl DesignProblem {
    pub fn new(
        disc: Discretization,
        symmetry: SymmetryMap,
        kind: ObjectiveKind,
        chi: f64,
        rho: f64,
        smoothing: SmoothingParams,
    ) -> Result<Self> {
        if symmetry.num_coeffs() != disc.num_design() {
            return Err(Error::InvalidInput("symmetry map does not match the design basis".into()));
        }
        let solver = StateSolver::new(&disc)?;
        let spec = ObjectiveSpec::new(&disc, &solver, kind, chi, rho)?;
        Ok(Self { disc, solver, symmetry, spec, smoothing, reinit: ReinitSettings::default() })
    }

    pub fn num_vars(&self) -> usize {
        self.symmetry.num_vars()
    }

    /// State solve, adjoint solve and all terms for full coefficients.
    pub fn evaluate_coeffs(&self, coeffs: &[f64]) -> Result<FullEvaluation> {
        if coeffs.len() != self.disc.num_design() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("design coefficients must be finite and match the basis".into()));
        }
        let conductivity = Conductivity::from_level_set(&self.disc, coeffs, self.smoothing);
        let state = self.solver.solve_state(&self.disc, &conductivity)?;
        let (j_main, source) = self.spec.eval_main(&self.disc, &state.t);
        let adjoint = solve_adjoint(&state, &adjoint_load(&self.disc, &source))?;
        let grad_main = sensitivity(&self.disc, &conductivity, &state.t, &adjoint);
        let (j_tknv, grad_tknv) = tikhonov(&self.disc, coeffs);
        let (j_vol, grad_vol) = volume_measure(&self.disc, coeffs, self.smoothing);
        let (chi, rho) = (self.spec.chi, self.spec.rho);
        let j_total = j_main + chi * j_tknv + rho * j_vol;
        let grad_total = (0..coeffs.len()).map(|i| grad_main[i] + chi * grad_tknv[i] + rho * grad_vol[i]).collect();
        if !j_total.is_finite() {
            return Err(Error::NonFinite("objective value".into()));
        }
        let value = ObjectiveValue { j_main, j_tknv, j_vol, j_total, grad_main, grad_tknv, grad_vol, grad_total };
        Ok(FullEvaluation { coeffs: coeffs.to_vec(), conductivity, state, adjoint, value })
    }

    pub fn evaluate(&self, vars: &[f64]) -> Result<FullEvaluation> {
        self.evaluate_coeffs(&self.symmetry.expand(vars))
    }

    /// Reduced total objective and gradient.
    pub fn eval_total(&self, vars: &[f64]) -> Result<(ObjectiveValue, Vec<f64>)> {
        let e = self.evaluate(vars)?;
        let g = self.symmetry.reduce(&e.value.grad_total);
        Ok((e.value, g))
    }
}

impl Objective for DesignProblem {
    fn eval(&mut self, x: &[f64]) -> Result<Evaluation> {
        let (v, g) = self.eval_total(x)?;
        Ok(Evaluation { value: v.j_total, gradient: g, parts: [v.j_main, v.j_tknv, v.j_vol] })
    }

    fn reinitialize(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        let coeffs = self.symmetry.expand(x);
        let out = reinitialize(&self.disc, &self.symmetry, &coeffs, self.reinit.lines_per_span, self.reinit.penalty_factor)?;
        Ok(out.unwrap_or_else(|| x.to_vec()))
    }
}
