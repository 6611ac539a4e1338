//! Numerical toolkit for the steady states of the diffusive Holling-Tanner
//! predator-prey system with Neumann boundary conditions,
//!
//! ```text
//! -w'' = lambda w - eps a(x) w^2 - b w v/(1+w)
//! -v'' = mu v - d v^2 + eps c(x) w v/(1+w)
//! ```
//!
//! written in the rescaled prey density `w = gamma u` and `eps = 1/gamma`.

pub mod checks;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod linstab;
pub mod model;
pub mod nodal;
pub mod perturbed;
pub mod quadrature;
pub mod spectral;
pub mod timemap;

pub use error::{Error, Result};
pub use grid::Profile;
pub use model::{CoeffFn, ModelParams, PhaseState};
