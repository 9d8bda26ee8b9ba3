use super::{GridSpec, C64};
use crate::error::{Error, Result};
use crate::par;

/// Complex samples on a [`GridSpec`], row-major over axes.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<C64>,
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<C64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_parts(grid: GridSpec, values: Vec<C64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::from_parts(grid, vec![C64::new(0.0, 0.0); grid.len()])
    }

    /// Sample `f([x, y])` at every node (`y = 0` for `d = 1`).
    pub fn from_fn<F>(grid: GridSpec, f: F) -> Self
    where
        F: Fn([f64; 2]) -> C64 + Sync + Send,
    {
        let values = par::map_range(grid.len(), |i| f(grid.point(i)));
        Self::from_parts(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Pointwise map with node coordinates.
    pub fn map<F>(&self, f: F) -> Field
    where
        F: Fn([f64; 2], C64) -> C64 + Sync + Send,
    {
        let grid = self.grid;
        let values = par::map_range(self.len(), |i| f(grid.point(i), self.values[i]));
        Field::from_parts(grid, values)
    }

    pub fn zip_map<F>(&self, other: &Field, f: F) -> Result<Field>
    where
        F: Fn(C64, C64) -> C64 + Sync + Send,
    {
        self.grid.ensure_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Field::from_parts(self.grid, values))
    }

    pub fn scale(&self, c: C64) -> Field {
        Field::from_parts(self.grid, self.values.iter().map(|&v| v * c).collect())
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a + b)
    }

    /// `int |u|^2 dx`.
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.mass().sqrt()
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Re-tag the samples with a grid of identical shape (used for the
    /// dual-of-dual round trip).
    pub(crate) fn with_grid(mut self, grid: GridSpec) -> Field {
        debug_assert_eq!(grid.len(), self.values.len());
        self.grid = grid;
        self
    }

    pub(crate) fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }
}
