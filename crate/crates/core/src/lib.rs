//! Pseudospectral laboratory for the biharmonic nonlinear Schrödinger equation
//!
//! ```text
//! i psi_t - gamma Lap^2 psi + mu Lap psi + |psi|^(2 sigma) psi = 0
//! ```
//!
//! on a periodic box standing in for `R^N`. The crate computes standing-wave
//! ground states, evolves initial data with a Strang split-step scheme,
//! evaluates the variational functionals (action, Nehari, Pohozaev, virial)
//! and the localized virial, and runs perturbation experiments probing
//! instability by blow-up.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`, which the documented tolerances
//! assume.

pub mod error;
pub mod evolution;
pub mod field;
pub mod functionals;
pub mod grid;
pub mod io;
pub mod groundstate;
pub mod instability;
pub mod num;
pub mod params;
pub mod virial;

pub use error::{Error, Result};
pub use field::{Field, SpectralField, SpectralMultiplier};
pub use grid::Grid;
pub use num::Real;
pub use params::{InstabilityClass, PhysicalParams, Regime};

pub type Grid64 = Grid<f64>;
pub type Field64 = Field<f64>;
pub type Params64 = PhysicalParams<f64>;
