//! Numerics for the upper-critical Choquard equation on the unit ball of R^3:
//!
//!   -Delta u + a u = (int_Omega u^{6-alpha}(y) / |x-y|^alpha dy) u^{5-alpha}
//!
//! with alpha in (0, 3) and -Delta + a coercive. The crate provides the
//! sharp constants of the problem, radial quadrature with exact angular
//! reduction of the Riesz kernel, Green/Robin functions of -Delta + a on the
//! ball, the Aubin-Talenti bubble family and its projections, constrained
//! minimization of the Hardy-Littlewood Rayleigh quotient, and the
//! second-order energy expansions under a perturbation a -> a + eps V.
//!
//! Everything is radial and centered: profiles are sampled on graded
//! composite Gauss-Legendre grids (see [`grid`]) and all O(n^2) nonlocal
//! kernels run data-parallel under the `parallel` feature.

pub mod asymptotics;
pub mod bubbles;
pub mod constants;
mod error;
pub mod greens;
pub mod grid;
pub mod minimize;
pub mod par;
pub mod riesz;

pub use error::{Error, Result};

pub use constants::{Alpha, ConstantsBundle};
pub use greens::{GreenData, PotentialSpec};
pub use grid::{Boundary, GridKind, RadialField, RadialGrid};
pub use minimize::{Concentration, MinimizeOptions, MinimizeResult};
