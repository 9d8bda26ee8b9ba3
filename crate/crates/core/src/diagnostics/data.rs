//! Slowly decaying data `i·1_{|x|>1}|x|^{-k}`.

use crate::error::{invalid, Result};
use crate::spectral::{weighted_h_norm, Field, GridSpec, C64};

pub fn ikeda_inui_data(grid: GridSpec, k: f64) -> Result<Field> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(invalid("k", format!("need finite k > 0, got {k}")));
    }
    Ok(Field::from_fn(grid, move |[x, y]| {
        let r2 = x * x + y * y;
        if r2 > 1.0 {
            C64::new(0.0, r2.powf(-0.5 * k))
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

/// `i·1_{|x|>1}|x|^{-k}` lies in `FH^α(R^d)` iff `k > α + d/2`; the
/// borderline is a (logarithmically divergent) non-member.
pub fn ikeda_inui_member(d: usize, k: f64, alpha: f64) -> bool {
    k > alpha + d as f64 / 2.0
}

/// `‖⟨x⟩^α u‖_2` of the truncated family on boxes of growing half-length at
/// fixed spacing `dx`.
pub fn weighted_norm_growth(
    d: usize,
    k: f64,
    alpha: f64,
    half_lengths: &[f64],
    dx: f64,
) -> Result<Vec<f64>> {
    half_lengths
        .iter()
        .map(|&l| {
            let n = ((2.0 * l / dx).round() as usize).next_power_of_two();
            let grid = GridSpec::new(d, n, l)?;
            Ok(weighted_h_norm(&ikeda_inui_data(grid, k)?, alpha))
        })
        .collect()
}
