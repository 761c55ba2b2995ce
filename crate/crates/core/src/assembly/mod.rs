//! Quadrature cache, system assembly with Nitsche coupling, state and adjoint
//! solves, and sensitivities.

mod discretization;
mod material;
mod system;

pub use discretization::{
    BulkElement, BulkPoint, DesignPoint, Discretization, FluxElement, InterfaceElement, InterfacePoint,
    QuadratureOptions, SidePoint,
};
pub use material::MaterialPair;
pub use system::{
    adjoint_load, assemble_load, assemble_matrix, bulk_local, dirichlet_vector, interface_local, point_fields,
    sensitivity, solve_adjoint, Conductivity, Factorization, Parts, ReducedSystem, StateSolution, StateSolver,
};
