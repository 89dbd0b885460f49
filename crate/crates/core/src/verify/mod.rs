//! Independent oracles: pointwise distortion inequalities on arbitrary test maps,
//! discrete minimization over radial stretchings, a log-polar mesh energy minimizer,
//! and rotation invariance.

pub mod pointwise;
pub mod mesh;
pub mod radial_min;
pub mod rotation;

pub use pointwise::{pointwise_check, random_test_map, DerivativeMode, PointwiseReport, TestMap};
pub use mesh::{mesh_energy_minimize, MeshDiagnostics, MeshOptions, MeshRun, MeshSpec, MeshState};
pub use radial_min::{radial_discrete_minimize, RadialMinimum};
pub use rotation::{rotation_check_nitsche, rotation_invariance_check, RotationReport};
