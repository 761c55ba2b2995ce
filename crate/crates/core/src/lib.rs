//! Isogeometric level-set design of steady heat conduction devices.

pub mod assembly;
pub mod error;
pub mod levelset;
pub mod model;
pub mod objectives;
pub mod optimizer;
pub mod oracle;
pub mod splines;

pub use error::{Error, Result};
pub use model::{MultiPatchModel, RegionLabel};
pub use objectives::{DesignProblem, ObjectiveKind};
pub use optimizer::{SqpConfig, SqpResult};
pub use splines::Point;
