//! Level-set description of the design: smoothed Heaviside mapping,
//! symmetry reduction, projection, reinitialization and measures.

mod field;
mod smoothing;
mod symmetry;

pub use field::{
    design_point_positions, eval_lsf, interface_points, mean_mass_diagonal, perimeter, project_lsf, project_values,
    reinitialize, volume_measure, ZeroPoint,
};
pub use smoothing::{dirac, heaviside, SmoothingParams};
pub use symmetry::SymmetryMap;
