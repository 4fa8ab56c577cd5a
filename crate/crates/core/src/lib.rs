//! Singularity analysis of planar inverse-kinematic maps ℝ² → ℝ².
//!
//! The crate is organised around the [`MapFamily`] trait: every analysed map
//! (the 2-RPR-PR manipulator, its offset variant, and the unfolded complex
//! square and quarto normal forms) implements it, and a [`FamilyRegistry`]
//! builds them by name from key/value parameters. The analysis modules are
//! generic over `&dyn MapFamily`:
//!
//! - [`singular`] solves the cusp / corank-2 detection system and classifies
//!   the points it finds;
//! - [`trace`] follows the singular curve `J = 0`, pushes it to the joint
//!   space, and builds characteristic curves;
//! - [`dkp`] enumerates direct-kinematic solutions and solution-count maps;
//! - [`monodromy`] lifts closed joint-space loops and reports the induced
//!   permutation of assembly modes.

pub mod dkp;
pub mod error;
pub mod linalg;
pub mod maps;
pub mod monodromy;
pub mod singular;
pub mod trace;

pub use error::{Error, Result};
pub use maps::{
    canonical_phi, family_scale, jacobian_det, jacobian_det_gradient, jacobian_det_hessian,
    FamilyParams, FamilyRegistry, FamilyScale, Jet2, JointPoint, MapFamily, WorkspaceBox,
    WorkspacePoint,
};
