//! Numerical laboratory for `i u_t + (1/2) Δu = F(u)` on `d = 1, 2` periodic
//! grids: exponent arithmetic, split-step integration, the free propagator in
//! multiplier and `M D F M` form, cutoff functionals and scattering
//! diagnostics.

// `!(x > 0.0)` is how parameter checks reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod exponents;
pub mod free;
pub mod harness;
pub mod integrator;
pub mod nonlinearity;
pub mod par;
pub mod spectral;

pub use error::{Error, Result};
pub use spectral::{Field, GridSpec, Trajectory, C64};
