use super::{Field, GridSpec, C64};
use crate::error::{invalid, Result};

/// Integration region for [`lp_norm`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region {
    Full,
    /// Nodes with `|x| <= r`.
    Ball(f64),
}

impl Region {
    fn contains(&self, grid: &GridSpec, idx: usize) -> bool {
        match *self {
            Region::Full => true,
            Region::Ball(r) => grid.radius_sq(idx) <= r * r,
        }
    }
}

/// `(int_region |u|^p dx)^{1/p}`; `p = inf` gives the max modulus on the region.
pub fn lp_norm(f: &Field, p: f64, region: Region) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(invalid(
            "p",
            format!("Lebesgue exponent must be >= 1, got {p}"),
        ));
    }
    let grid = f.grid();
    let selected = f
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| region.contains(grid, *i))
        .map(|(_, v)| v.norm());
    if p.is_infinite() {
        return Ok(selected.fold(0.0, f64::max));
    }
    let sum: f64 = if p == 2.0 {
        selected.map(|a| a * a).sum()
    } else {
        selected.map(|a| a.powf(p)).sum()
    };
    Ok((sum * grid.cell_volume()).powf(1.0 / p))
}

/// `|| <x>^s u ||_{L^2}` with `<x> = (1 + |x|^2)^{1/2}`.
pub fn weighted_h_norm(f: &Field, s: f64) -> f64 {
    let grid = f.grid();
    let sum: f64 = f
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v.norm_sqr() * (1.0 + grid.radius_sq(i)).powf(s))
        .sum();
    (sum * grid.cell_volume()).sqrt()
}

/// `int conj(f) g dx`.
pub fn inner(f: &Field, g: &Field) -> Result<C64> {
    f.grid().ensure_same(g.grid())?;
    let s: C64 = f
        .values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(s * f.grid().cell_volume())
}

/// Fraction of the mass of `f` carried by nodes outside `shell_start * L`
/// along some axis (the outer `1 - shell_start` shell of the box).
pub fn boundary_mass_fraction(f: &Field, shell_start: f64) -> f64 {
    let grid = f.grid();
    let (mut shell, mut total) = (0.0, 0.0);
    for (i, v) in f.values().iter().enumerate() {
        let m = v.norm_sqr();
        total += m;
        if grid.in_outer_shell(i, shell_start) {
            shell += m;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        shell / total
    }
}

/// Fraction of each node's cell lying inside the ball `|x| <= r`.
///
/// Exact in `d = 1`; `d = 2` supersamples boundary cells on an 8x8 lattice.
pub fn ball_weights(grid: &GridSpec, r: f64) -> Vec<f64> {
    let dx = grid.dx();
    let h = 0.5 * dx;
    match grid.dim {
        1 => (0..grid.n)
            .map(|j| {
                let x = grid.node(j);
                let lo = (x - h).max(-r);
                let hi = (x + h).min(r);
                ((hi - lo) / dx).clamp(0.0, 1.0)
            })
            .collect(),
        _ => (0..grid.len())
            .map(|i| {
                let [x, y] = grid.point(i);
                let near = (x.abs() - h).max(0.0).hypot((y.abs() - h).max(0.0));
                let far = (x.abs() + h).hypot(y.abs() + h);
                if far <= r {
                    1.0
                } else if near > r {
                    0.0
                } else {
                    const SUB: usize = 8;
                    let mut inside = 0usize;
                    for a in 0..SUB {
                        for b in 0..SUB {
                            let sx = x - h + (a as f64 + 0.5) * dx / SUB as f64;
                            let sy = y - h + (b as f64 + 0.5) * dx / SUB as f64;
                            if sx * sx + sy * sy <= r * r {
                                inside += 1;
                            }
                        }
                    }
                    inside as f64 / (SUB * SUB) as f64
                }
            })
            .collect(),
    }
}
