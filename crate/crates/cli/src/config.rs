//! Run configuration: a TOML file layered over per-problem defaults, plus
//! `key.path=value` overrides.

use std::path::PathBuf;
use std::str::FromStr;

use heatopt_core::model::CloakConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Annulus,
    Cloak,
    Camouflage,
    /// Homogeneous rectangular plate (solve only).
    Plate,
}

impl FromStr for Problem {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.to_ascii_lowercase().as_str() {
            "annulus" => Ok(Self::Annulus),
            "cloak" => Ok(Self::Cloak),
            "camouflage" => Ok(Self::Camouflage),
            "plate" => Ok(Self::Plate),
            _ => Err(CliError::Config(format!("unknown problem '{s}'"))),
        }
    }
}

/// Degree and element counts of a refinement stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    /// Degree along the layers.
    pub p: usize,
    /// Degree across the layers.
    pub q: usize,
    /// Elements per patch along the layers.
    pub tangential: usize,
    /// Elements per patch across the layers.
    pub radial: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub p: usize,
    pub q: usize,
    pub tangential: usize,
    pub radial: usize,
    /// Tie mirror images across the x and y axes.
    pub symmetry: bool,
}

impl DesignConfig {
    pub fn mesh(&self) -> MeshConfig {
        MeshConfig { p: self.p, q: self.q, tangential: self.tangential, radial: self.radial }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingConfig {
    /// Half width of the smoothing band.
    pub delta: f64,
    /// Lower plateau of the smoothed Heaviside.
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NitscheConfig {
    pub beta: f64,
    pub gamma: f64,
}

/// Conductivity overrides (W/mK); unset entries keep the model's values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialsConfig {
    /// Design material where the level set is positive.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k1: Option<f64>,
    /// Design material where the level set is negative.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inside: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outside: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sector: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveConfig {
    /// Tikhonov weight.
    pub chi: f64,
    /// Volume weight.
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub objective_limit: f64,
    pub step_tolerance: f64,
    pub optimality_tolerance: f64,
    pub max_iterations: usize,
    pub max_function_evaluations: usize,
    /// Box bound |Phi_i| <= bound; 0 selects the diameter of the design region.
    pub bound: f64,
    /// Infinity norm of the first step after every restart; 0 selects 2.5 % of
    /// the design-region diameter.
    pub initial_step: f64,
    /// Reinitialize every this many iterations (0 disables).
    pub reinit_iterations: usize,
    /// Reinitialize every this many function evaluations (0 disables).
    pub reinit_fevals: usize,
    pub consecutive_steptol_stop: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReinitConfig {
    /// Isoparameter lines per knot span used to find zero points.
    pub lines_per_span: usize,
    /// Interface penalty relative to the mass scale.
    pub penalty_factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    /// `Phi = |x - c| - radius`.
    Circle,
    /// `Phi = ||x - c| - radius| - width / 2`.
    Ring,
    /// Circles of `radius` on a 2 x 2 lattice of pitch `spacing` centred on `center`.
    Lattice2,
    /// Same on a 3 x 3 lattice.
    Lattice3,
    /// `Phi = value`.
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub shape: Shape,
    pub center: [f64; 2],
    pub radius: f64,
    pub width: f64,
    pub spacing: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnulusConfig {
    pub ra: f64,
    pub rb: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateConfig {
    pub width: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Interface radii `[first, last]` and the number of samples.
    pub radius_range: [f64; 2],
    pub radius_count: usize,
    /// Interface radius used by the delta and refinement sweeps.
    pub radius: f64,
    pub deltas: Vec<f64>,
    /// Solution refinements `[tangential, radial]` for the refinement sweep.
    pub refinements: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Problem,
    /// Cloak geometry: `circular` or `I`..`VIII`.
    pub cloak: String,
    pub output_dir: PathBuf,
    /// Samples per axis of the VTK evaluation grid.
    pub grid: usize,
    pub design: DesignConfig,
    pub solution: MeshConfig,
    pub smoothing: SmoothingConfig,
    pub nitsche: NitscheConfig,
    #[serde(default)]
    pub materials: MaterialsConfig,
    pub objective: ObjectiveConfig,
    pub optimizer: OptimizerConfig,
    pub reinit: ReinitConfig,
    pub initial: InitialConfig,
    pub annulus: AnnulusConfig,
    pub plate: PlateConfig,
    pub sweep: SweepConfig,
}

impl RunConfig {
    /// Defaults for one problem.
    pub fn defaults(problem: Problem) -> Self {
        let mesh = |p, q, tangential, radial| MeshConfig { p, q, tangential, radial };
        let mut cfg = Self {
            problem,
            cloak: "circular".into(),
            output_dir: PathBuf::from("output"),
            grid: 201,
            design: DesignConfig { p: 2, q: 1, tangential: 3, radial: 4, symmetry: true },
            solution: mesh(2, 2, 18, 20),
            smoothing: SmoothingConfig { delta: 0.0005, alpha: 0.0 },
            nitsche: NitscheConfig { beta: 1e12, gamma: 0.5 },
            materials: MaterialsConfig::default(),
            objective: ObjectiveConfig { chi: 0.0, rho: 0.0 },
            optimizer: OptimizerConfig {
                objective_limit: 1e-9,
                step_tolerance: 1e-8,
                optimality_tolerance: 1e-6,
                max_iterations: 500,
                max_function_evaluations: 5000,
                bound: 0.0,
                initial_step: 0.0,
                reinit_iterations: 10,
                reinit_fevals: 100,
                consecutive_steptol_stop: 4,
            },
            reinit: ReinitConfig { lines_per_span: 20, penalty_factor: 1e6 },
            initial: InitialConfig {
                shape: Shape::Ring,
                center: [0.0, 0.0],
                radius: 0.03,
                width: 0.008,
                spacing: 0.0,
                value: 0.0,
            },
            annulus: AnnulusConfig { ra: 1.0, rb: 2.0 },
            plate: PlateConfig { width: 0.14, height: 0.07, nx: 3, ny: 2, kappa: 200.0 },
            sweep: SweepConfig {
                radius_range: [1.05, 1.95],
                radius_count: 19,
                radius: 1.5,
                deltas: vec![0.5, 0.05, 0.005],
                refinements: vec![[3, 8], [3, 16], [4, 33], [7, 65], [7, 131], [14, 262]],
            },
        };
        match problem {
            Problem::Annulus => {
                cfg.solution = mesh(2, 2, 7, 131);
                cfg.smoothing.delta = 0.05;
                cfg.initial.shape = Shape::Circle;
                cfg.initial.radius = 1.3;
                cfg.initial.width = 0.4;
                cfg.initial.spacing = 1.5 * std::f64::consts::SQRT_2;
            }
            Problem::Cloak => {}
            Problem::Camouflage => {
                cfg.smoothing.delta = 0.001;
                cfg.objective = ObjectiveConfig { chi: 1.0, rho: 1e-2 };
                cfg.optimizer.reinit_fevals = 300;
                cfg.initial.radius = 0.018;
                cfg.initial.width = 0.006;
            }
            Problem::Plate => {
                cfg.solution = mesh(2, 2, 3, 2);
            }
        }
        cfg
    }

    /// Layer a TOML document and overrides over the defaults of its problem.
    pub fn from_sources(text: Option<&str>, overrides: &[String]) -> Result<Self, CliError> {
        let mut user = match text {
            Some(t) => toml::from_str::<toml::Table>(t).map_err(|e| CliError::Config(format!("config file: {e}")))?,
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut user, o)?;
        }
        let problem = match user.get("problem") {
            Some(toml::Value::String(s)) => s.parse()?,
            Some(v) => return Err(CliError::Config(format!("problem must be a string, got {v}"))),
            None => Problem::Annulus,
        };
        let mut base = toml::Table::try_from(Self::defaults(problem)).map_err(|e| CliError::Config(e.to_string()))?;
        merge(&mut base, user);
        let cfg: Self = toml::Value::Table(base).try_into().map_err(|e| CliError::Config(format!("{e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn cloak_config(&self) -> Result<CloakConfig, CliError> {
        self.cloak.parse().map_err(|e| CliError::Config(format!("{e}")))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.into()));
        if !(self.smoothing.delta > 0.0) {
            return bad("smoothing.delta must be positive");
        }
        if !(0.0..1.0).contains(&self.smoothing.alpha) {
            return bad("smoothing.alpha must lie in [0, 1)");
        }
        if !(self.nitsche.beta > 0.0) || !(0.0..=1.0).contains(&self.nitsche.gamma) {
            return bad("nitsche.beta must be positive and nitsche.gamma in [0, 1]");
        }
        if self.grid < 2 {
            return bad("grid must be at least 2");
        }
        if self.objective.chi < 0.0 || self.objective.rho < 0.0 {
            return bad("objective weights must be nonnegative");
        }
        if self.optimizer.bound < 0.0 || self.optimizer.initial_step < 0.0 {
            return bad("optimizer.bound and optimizer.initial_step must be nonnegative");
        }
        let m = &self.materials;
        if [m.k1, m.k2, m.inside, m.outside, m.sector].iter().flatten().any(|k| !(*k > 0.0)) {
            return bad("conductivities must be positive");
        }
        for s in [&self.design.mesh(), &self.solution] {
            if s.p == 0 || s.q == 0 || s.tangential == 0 || s.radial == 0 {
                return bad("degrees and element counts must be positive");
            }
        }
        if self.sweep.deltas.iter().any(|d| !(*d > 0.0)) {
            return bad("sweep.deltas must be positive");
        }
        if self.sweep.radius_count == 0 {
            return bad("sweep.radius_count must be positive");
        }
        if self.problem == Problem::Cloak {
            self.cloak_config()?;
        }
        Ok(())
    }
}

/// Recursive table merge; values of `over` win.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Set `a.b.c=value`; the value is read as TOML and falls back to a bare string.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| CliError::Config(format!("override '{spec}' lacks '='")))?;
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.trim().into()),
    };
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!("bad override key '{path}'")));
    }
    let mut cur = table;
    for k in &keys[..keys.len() - 1] {
        let entry = cur.entry(k.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| CliError::Config(format!("'{k}' in '{path}' is not a table")))?;
    }
    cur.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        for p in [Problem::Annulus, Problem::Cloak, Problem::Camouflage, Problem::Plate] {
            let d = RunConfig::defaults(p);
            let text = toml::to_string(&d).unwrap();
            assert_eq!(RunConfig::from_sources(Some(&text), &[]).unwrap(), d);
        }
    }

    #[test]
    fn overrides_and_problem_defaults() {
        let cfg = RunConfig::from_sources(
            Some("problem = \"camouflage\"\n[objective]\nrho = 0.1\n"),
            &["optimizer.max_iterations=7".into(), "output_dir=runs/a".into()],
        )
        .unwrap();
        assert_eq!(cfg.smoothing.delta, 0.001);
        assert_eq!(cfg.objective.chi, 1.0);
        assert_eq!(cfg.objective.rho, 0.1);
        assert_eq!(cfg.optimizer.max_iterations, 7);
        assert_eq!(cfg.output_dir, PathBuf::from("runs/a"));
    }

    #[test]
    fn invalid_settings_are_config_errors() {
        for bad in ["smoothing.delta=0", "problem=\"disk\"", "nosuchkey=1", "cloak=\"IX\"", "grid=1"] {
            let r = RunConfig::from_sources(Some("problem = \"cloak\""), &[bad.into()]);
            assert!(matches!(r, Err(CliError::Config(_))), "{bad}");
        }
    }
}
