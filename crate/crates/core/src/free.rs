//! The free group `U(t) = e^{itΔ/2}` and the operators of its `M D F M`
//! factorisation.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::par;
use crate::spectral::{interpolate_onto, inverse_transform, transform, Field, GridSpec, C64};

/// Mass fraction allowed outside the target box before [`dilate`] reports a
/// support escape.
pub const ESCAPE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagatorForm {
    /// `e^{-it|xi|^2/2}` applied in frequency.
    Multiplier,
    /// `M(t) D(t) F M(t)`.
    Factorized,
}

/// Precomputed `e^{-it|xi|^2/2}` for one grid and one `t`.
#[derive(Clone, Debug)]
pub struct KineticPhase {
    grid: GridSpec,
    t: f64,
    symbol: Vec<C64>,
}

impl KineticPhase {
    pub fn new(grid: GridSpec, t: f64) -> Self {
        let dual = grid.dual();
        let symbol = (0..grid.len())
            .map(|i| C64::from_polar(1.0, -0.5 * t * dual.radius_sq(i)))
            .collect();
        Self { grid, t, symbol }
    }

    /// Also project onto `|xi_i| <= (2/3) xi_max` on every axis. The
    /// projection commutes with the multiplier, so folding it into the
    /// symbol costs nothing extra per step.
    pub fn dealiased(mut self) -> Self {
        let dual = self.grid.dual();
        let cut = 2.0 / 3.0 * dual.half_length;
        for (i, s) in self.symbol.iter_mut().enumerate() {
            let [a, b] = dual.point(i);
            if a.abs() > cut || b.abs() > cut {
                *s = C64::new(0.0, 0.0);
            }
        }
        self
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        f.grid().ensure_same(&self.grid)?;
        let mut spec = transform(f);
        for (v, s) in spec.values_mut().iter_mut().zip(&self.symbol) {
            *v *= s;
        }
        Ok(inverse_transform(&spec).with_grid(*f.grid()))
    }
}

fn multiplier(f: &Field, t: f64) -> Field {
    if t == 0.0 {
        return f.clone();
    }
    KineticPhase::new(*f.grid(), t)
        .apply(f)
        .expect("phase built on the field's own grid")
}

/// `U(t) f`.
pub fn free_evolve(f: &Field, t: f64, form: PropagatorForm) -> Result<Field> {
    if !t.is_finite() {
        return Err(invalid("t", format!("time must be finite, got {t}")));
    }
    match form {
        PropagatorForm::Multiplier => Ok(multiplier(f, t)),
        PropagatorForm::Factorized => {
            if t == 0.0 {
                return Err(invalid(
                    "t",
                    "the factorised form needs t != 0 (D(0) is undefined)",
                ));
            }
            let inner = transform(&mod_multiply(f, t)?);
            let dilated = dilate(&inner, t, f.grid())?;
            mod_multiply(&dilated, t)
        }
    }
}

/// `U(t) f` for each `t`, evaluated concurrently.
pub fn free_evolve_batch(f: &Field, times: &[f64], form: PropagatorForm) -> Result<Vec<Field>> {
    par::try_map_range(times.len(), |i| free_evolve(f, times[i], form))
}

/// `[M(t) f](x) = e^{i|x|^2/(2t)} f(x)`.
pub fn mod_multiply(f: &Field, t: f64) -> Result<Field> {
    if t == 0.0 || !t.is_finite() {
        return Err(invalid("t", format!("M(t) needs finite t != 0, got {t}")));
    }
    Ok(f.map(|[x, y], v| v * C64::from_polar(1.0, (x * x + y * y) / (2.0 * t))))
}

/// `(it)^{-d/2}`, principal branch.
pub fn dilation_factor(dim: usize, t: f64) -> C64 {
    C64::new(0.0, t).powf(-(dim as f64) / 2.0)
}

fn mass_outside(f: &Field, half: f64) -> f64 {
    let grid = f.grid();
    let (mut out, mut total) = (0.0, 0.0);
    for (i, v) in f.values().iter().enumerate() {
        let m = v.norm_sqr();
        total += m;
        let [x, y] = grid.point(i);
        if x.abs() > half || y.abs() > half {
            out += m;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        out / total
    }
}

/// `[D(t) f](x) = (it)^{-d/2} f(x/t)` sampled on `target`.
///
/// `f` is evaluated off-grid by band-limited interpolation. Errors if more
/// than [`ESCAPE_TOL`] of the mass of `f` would land outside `target`.
pub fn dilate(f: &Field, t: f64, target: &GridSpec) -> Result<Field> {
    if t == 0.0 || !t.is_finite() {
        return Err(invalid("t", format!("D(t) needs finite t != 0, got {t}")));
    }
    if f.grid().dim != target.dim {
        return Err(Error::GridMismatch(
            "dilation between grids of different dimension".into(),
        ));
    }
    let escaped = mass_outside(f, target.half_length / t.abs());
    if escaped > ESCAPE_TOL {
        return Err(Error::SupportEscape(format!(
            "D({t}) pushes a mass fraction {escaped:.3e} outside |x| < {}",
            target.half_length
        )));
    }
    Ok(dilate_unchecked(f, t, target))
}

fn dilate_unchecked(f: &Field, t: f64, target: &GridSpec) -> Field {
    interpolate_onto(f, target, t).scale(dilation_factor(target.dim, t))
}

/// `phi_+(t) = M(t) D(t) F u_+` on the grid of `u_plus`.
pub fn asymptotic_profile(u_plus: &Field, t: f64) -> Result<Field> {
    asymptotic_profile_onto(u_plus, t, u_plus.grid())
}

pub fn asymptotic_profile_onto(u_plus: &Field, t: f64, target: &GridSpec) -> Result<Field> {
    if !(t > 0.0) {
        return Err(invalid(
            "t",
            format!("asymptotic profile needs t > 0, got {t}"),
        ));
    }
    mod_multiply(&dilate(&transform(u_plus), t, target)?, t)
}

/// `φ_+(t)` sampled on a window that may cut off part of its support (e.g.
/// the ball of a slab); no escape check.
pub fn asymptotic_profile_window(u_plus: &Field, t: f64, target: &GridSpec) -> Result<Field> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(
            "t",
            format!("asymptotic profile needs finite t > 0, got {t}"),
        ));
    }
    mod_multiply(&dilate_unchecked(&transform(u_plus), t, target), t)
}

/// `U(t) f` restricted to the window `target`, which may be smaller than the
/// spread of the solution. Uses the multiplier while the solution still fits
/// in the source box (boundary shell below `ESCAPE_TOL`), the factorised form
/// otherwise; the window truncation is intended and not an error.
pub fn free_evolve_onto(f: &Field, t: f64, target: &GridSpec) -> Result<Field> {
    if !t.is_finite() {
        return Err(invalid("t", format!("time must be finite, got {t}")));
    }
    let direct = multiplier(f, t);
    if crate::spectral::boundary_mass_fraction(&direct, 0.9) <= ESCAPE_TOL {
        return Ok(interpolate_onto(&direct, target, 1.0));
    }
    let inner = transform(&mod_multiply(f, t)?);
    mod_multiply(&dilate_unchecked(&inner, t, target), t)
}

/// Box half-length heuristic `L >= factor * k_max * t_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxSizing {
    pub t_max: f64,
    pub factor: f64,
}

impl Default for BoxSizing {
    fn default() -> Self {
        Self {
            t_max: 100.0,
            factor: 4.0,
        }
    }
}

impl BoxSizing {
    pub fn half_length(&self, max_frequency: f64) -> f64 {
        self.factor * max_frequency * self.t_max
    }
}

/// Smallest `|xi|` beyond which `F f` carries at most `tail` of the mass.
pub fn effective_max_frequency(f: &Field, tail: f64) -> f64 {
    let spec = transform(f);
    let grid = *spec.grid();
    let total: f64 = spec.values().iter().map(|v| v.norm_sqr()).sum();
    let mut by_radius: Vec<(f64, f64)> = spec
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| (grid.radius_sq(i).sqrt(), v.norm_sqr()))
        .collect();
    by_radius.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut acc = 0.0;
    for (r, m) in by_radius {
        acc += m;
        if acc > tail * total {
            return r;
        }
    }
    0.0
}
