//! Periodic grids standing in for `R^d`, complex fields on them, the unitary
//! Fourier pair, and quadrature norms.

mod field;
mod fourier;
mod grid;
pub mod io;
mod norms;
pub(crate) mod trajectory;

pub use field::Field;
pub use fourier::{interpolate_onto, inverse_transform, transform};
pub use grid::GridSpec;
pub use norms::{ball_weights, boundary_mass_fraction, inner, lp_norm, weighted_h_norm, Region};
pub use trajectory::{StepMeta, Trajectory};

pub type C64 = num_complex::Complex64;
