//! CSV tables and legacy VTK grids.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use heatopt_core::assembly::{point_fields, Conductivity, Discretization};
use heatopt_core::levelset::{eval_lsf, SmoothingParams, ZeroPoint};
use heatopt_core::model::PointLocator;
use heatopt_core::RegionLabel;

use crate::error::CliError;

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    std::fs::create_dir_all(dir).map_err(|err| CliError::Write { path: dir.to_path_buf(), err })?;
    std::fs::write(&path, contents).map_err(|err| CliError::Write { path: path.clone(), err })?;
    Ok(path)
}

/// Comma-separated table with a header row. Floats use the shortest
/// representation that round-trips.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(columns: &[&str]) -> Self {
        Self { text: columns.join(",") + "\n" }
    }

    pub fn row(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|v| format!("{v:e}")).collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Temperature, conductivity and gradient at every bulk quadrature point.
pub fn quadrature_csv(disc: &Discretization, cond: &Conductivity, t: &[f64]) -> String {
    let mut csv = Csv::new(&["x", "y", "temperature", "grad_x", "grad_y", "conductivity"]);
    let fields = point_fields(disc, cond, t);
    let xs = disc.elements.iter().flat_map(|el| el.points.iter().map(|p| p.x));
    for (x, (v, g, k)) in xs.zip(fields) {
        csv.row(&[x[0], x[1], v, g[0], g[1], k]);
    }
    csv.into_string()
}

pub fn interface_csv(points: &[ZeroPoint]) -> String {
    let mut csv = Csv::new(&["patch", "xi", "eta", "x", "y"]);
    for z in points {
        csv.row(&[z.patch as f64, z.xi[0], z.xi[1], z.x[0], z.x[1]]);
    }
    csv.into_string()
}

/// Samples the fields on an `n x n` grid over the bounding box and writes a
/// legacy ASCII VTK structured-points file. Points outside the domain carry
/// `inside = 0` and zero values.
pub fn vtk_grid(
    disc: &Discretization,
    t: &[f64],
    design: Option<(&[f64], SmoothingParams)>,
    n: usize,
) -> Result<String, CliError> {
    let model = &disc.model;
    let [lo, hi] = model.bounding_box();
    let spacing = [(hi[0] - lo[0]) / (n - 1) as f64, (hi[1] - lo[1]) / (n - 1) as f64];
    let locator = PointLocator::new(model, 2);
    let mut inside = Vec::with_capacity(n * n);
    let mut temp = Vec::with_capacity(n * n);
    let mut kappa = Vec::with_capacity(n * n);
    let mut phi = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let x = [lo[0] + i as f64 * spacing[0], lo[1] + j as f64 * spacing[1]];
            let Some((k, xi)) = locator.locate(model, x) else {
                inside.push(0.0);
                temp.push(0.0);
                kappa.push(0.0);
                phi.push(0.0);
                continue;
            };
            inside.push(1.0);
            temp.push(model.field_at(t, k, xi)?);
            let label = model.patches[k].label;
            let c = &model.conductivity;
            match design {
                Some((coeffs, sp)) if label == RegionLabel::Design => {
                    let (v, _) = eval_lsf(&disc.design, coeffs, k, xi)?;
                    phi.push(v);
                    kappa.push(c.design.kappa_at(v, sp));
                }
                _ => {
                    phi.push(0.0);
                    kappa.push(c.region(label).unwrap_or(c.design.k1));
                }
            }
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{} fields", model.name);
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET STRUCTURED_POINTS");
    let _ = writeln!(s, "DIMENSIONS {n} {n} 1");
    let _ = writeln!(s, "ORIGIN {:e} {:e} 0", lo[0], lo[1]);
    let _ = writeln!(s, "SPACING {:e} {:e} 1", spacing[0], spacing[1]);
    let _ = writeln!(s, "POINT_DATA {}", n * n);
    for (name, vals) in [("inside", &inside), ("temperature", &temp), ("conductivity", &kappa), ("level_set", &phi)] {
        let _ = writeln!(s, "SCALARS {name} double 1");
        let _ = writeln!(s, "LOOKUP_TABLE default");
        for v in vals.iter() {
            let _ = writeln!(s, "{v:e}");
        }
    }
    Ok(s)
}
