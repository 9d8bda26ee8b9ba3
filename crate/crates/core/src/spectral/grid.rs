use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Uniform periodic grid on `[-L, L)^d` with `n` points per axis.
///
/// The dual (frequency) grid is again of this form, with spacing `pi/L` and
/// half-length `pi n / (2L)`, so every field (physical or spectral) lives on
/// a `GridSpec`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
    pub half_length: f64,
}

impl GridSpec {
    pub fn new(dim: usize, n: usize, half_length: f64) -> Result<Self> {
        let g = Self {
            dim,
            n,
            half_length,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dim == 1 || self.dim == 2) {
            return Err(invalid(
                "dim",
                format!("only d = 1, 2 grids are supported, got {}", self.dim),
            ));
        }
        if self.n < 2 || !self.n.is_power_of_two() {
            return Err(invalid(
                "n",
                format!(
                    "points per axis must be a power of two >= 2, got {}",
                    self.n
                ),
            ));
        }
        if !(self.half_length.is_finite() && self.half_length > 0.0) {
            return Err(invalid(
                "half_length",
                format!("must be finite and positive, got {}", self.half_length),
            ));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_length / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        (2.0 * self.half_length).powi(self.dim as i32)
    }

    /// Total number of nodes, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.dx()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Coordinates of flat index `idx` (row-major, axis 0 slowest). For `d = 1`
    /// the second entry is zero.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        match self.dim {
            1 => [self.node(idx), 0.0],
            _ => [self.node(idx / self.n), self.node(idx % self.n)],
        }
    }

    pub fn radius_sq(&self, idx: usize) -> f64 {
        let [x, y] = self.point(idx);
        x * x + y * y
    }

    /// The frequency grid `xi_k = pi k / L`, `k in [-n/2, n/2)`.
    pub fn dual(&self) -> GridSpec {
        GridSpec {
            dim: self.dim,
            n: self.n,
            half_length: PI * self.n as f64 / (2.0 * self.half_length),
        }
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.dual().nodes()
    }

    /// Equal up to rounding in `half_length` (dual of dual is `self` only up
    /// to the last ulp).
    pub fn same_as(&self, other: &GridSpec) -> bool {
        self.dim == other.dim
            && self.n == other.n
            && (self.half_length - other.half_length).abs() <= 1e-12 * self.half_length
    }

    pub(crate) fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }

    /// True if every coordinate of flat index `idx` has modulus above
    /// `fraction * L`, i.e. the node sits in the outer shell of the box.
    pub(crate) fn in_outer_shell(&self, idx: usize, fraction: f64) -> bool {
        let edge = fraction * self.half_length;
        let [x, y] = self.point(idx);
        match self.dim {
            1 => x.abs() > edge,
            _ => x.abs() > edge || y.abs() > edge,
        }
    }
}
