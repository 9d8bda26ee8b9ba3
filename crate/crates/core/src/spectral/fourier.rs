//! Unitary discrete Fourier pair between a grid and its dual, plus
//! band-limited evaluation at scaled off-grid points (chirp-z).
//!
//! Convention: `F[u](xi) = (2 pi)^{-d/2} int e^{-i x.xi} u(x) dx`, discretised
//! by the rectangle rule. On the symmetric grids used here every phase factor
//! reduces to a sign, so the transform is an FFT between `(-1)^j` twists and
//! is exactly unitary with respect to the `dx`/`dxi` weighted inner products.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::{Fft, FftDirection, FftPlanner};

use super::{Field, GridSpec, C64};
use crate::par;

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

type PlanCache = Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>;

fn plan(n: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (n, direction == FftDirection::Forward);
    let mut guard = cache.lock().expect("fft cache poisoned");
    guard
        .entry(key)
        .or_insert_with(|| {
            planner()
                .lock()
                .expect("fft planner poisoned")
                .plan_fft(n, direction)
        })
        .clone()
}

#[inline]
fn sign(j: usize) -> f64 {
    if j.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Transform every contiguous line of length `n` in place.
/// `forward` selects `e^{-i x xi}`; `spacing` is the input-grid spacing.
fn transform_lines(data: &mut [C64], n: usize, spacing: f64, forward: bool) {
    let direction = if forward {
        FftDirection::Forward
    } else {
        FftDirection::Inverse
    };
    let fft = plan(n, direction);
    // e^{+-i pi n / 2} for the corner phase; n is a power of two.
    let corner = if n.is_multiple_of(4) { 1.0 } else { -1.0 };
    let c = corner * spacing / (2.0 * PI).sqrt();
    let lines = data.len() / n;
    // Batch lines so small grids are not dominated by task overhead.
    let batch = n * lines.div_ceil(64).max(1);
    par::for_each_chunk_mut(data, batch, |_, chunk| {
        let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for line in chunk.chunks_mut(n) {
            for (j, v) in line.iter_mut().enumerate() {
                *v *= sign(j);
            }
            fft.process_with_scratch(line, &mut scratch);
            for (k, v) in line.iter_mut().enumerate() {
                *v *= c * sign(k);
            }
        }
    });
}

fn transpose(data: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); data.len()];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = data[i * n + j];
        }
    }
    out
}

fn apply(f: &Field, forward: bool, out_grid: GridSpec) -> Field {
    let grid = *f.grid();
    let n = grid.n;
    let dx = grid.dx();
    let mut data = f.values().to_vec();
    transform_lines(&mut data, n, dx, forward);
    if grid.dim == 2 {
        let mut t = transpose(&data, n);
        transform_lines(&mut t, n, dx, forward);
        data = transpose(&t, n);
    }
    Field::from_parts(out_grid, data)
}

/// `F[f]` sampled on the dual grid.
pub fn transform(f: &Field) -> Field {
    apply(f, true, f.grid().dual())
}

/// `F^{-1}[f]` for a field living on a dual grid; output lives on the dual
/// of `f.grid()`.
pub fn inverse_transform(f: &Field) -> Field {
    apply(f, false, f.grid().dual())
}

/// `S_k = sum_j c_j exp(i sigma y_k zeta_j)` with `zeta_j = zeta0 + j dzeta`,
/// `y_k = y0 + k dy`, `k < m`, via Bluestein's convolution.
pub(crate) fn chirp_sum(
    coeffs: &[C64],
    zeta0: f64,
    dzeta: f64,
    y0: f64,
    dy: f64,
    m: usize,
    sigma: f64,
) -> Vec<C64> {
    let n = coeffs.len();
    let a = sigma * dy * dzeta;
    let size = (n + m - 1).next_power_of_two();
    let chirp = |r: usize| C64::from_polar(1.0, 0.5 * a * (r as f64 * r as f64));
    let mut lhs = vec![C64::new(0.0, 0.0); size];
    for (j, &c) in coeffs.iter().enumerate() {
        let jf = j as f64;
        lhs[j] = c * C64::from_polar(1.0, sigma * y0 * jf * dzeta) * chirp(j);
    }
    let mut rhs = vec![C64::new(0.0, 0.0); size];
    for (r, slot) in rhs.iter_mut().enumerate().take(m) {
        *slot = chirp(r).conj();
    }
    for r in 1..n {
        rhs[size - r] = chirp(r).conj();
    }
    let fwd = plan(size, FftDirection::Forward);
    let inv = plan(size, FftDirection::Inverse);
    fwd.process(&mut lhs);
    fwd.process(&mut rhs);
    for (l, r) in lhs.iter_mut().zip(&rhs) {
        *l *= r / size as f64;
    }
    inv.process(&mut lhs);
    (0..m)
        .map(|k| {
            let kf = k as f64;
            let phase = sigma * (y0 * zeta0 + kf * dy * zeta0);
            lhs[k] * C64::from_polar(1.0, phase) * chirp(k)
        })
        .collect()
}

/// Band-limited interpolation of one line: values of the trigonometric
/// interpolant of `line` (on `src`) at `q_k = x_k / scale` for the nodes `x_k`
/// of `target`. Points with `|q_k| > L_src` are set to zero.
fn interpolate_line(spectrum: &[C64], src: &GridSpec, target: &GridSpec, scale: f64) -> Vec<C64> {
    let n = src.n;
    let dual = src.dual();
    // Split the Nyquist bin symmetrically between -L' and +L'.
    let mut coeffs = Vec::with_capacity(n + 1);
    coeffs.push(spectrum[0] * 0.5);
    coeffs.extend_from_slice(&spectrum[1..]);
    coeffs.push(spectrum[0] * 0.5);
    let y0 = target.node(0) / scale;
    let dy = target.dx() / scale;
    let mut out = chirp_sum(&coeffs, -dual.half_length, dual.dx(), y0, dy, target.n, 1.0);
    let c = dual.dx() / (2.0 * PI).sqrt();
    let edge = src.half_length * (1.0 + 1e-12);
    for (k, v) in out.iter_mut().enumerate() {
        let q = y0 + k as f64 * dy;
        if q.abs() > edge {
            *v = C64::new(0.0, 0.0);
        } else {
            *v *= c;
        }
    }
    out
}

/// Sample the band-limited interpolant of `f` at `x / scale` for every node
/// `x` of `target`, treating `f` as zero outside its own box.
///
/// `scale = 1` is plain resampling; `D(t)` uses `scale = t`.
pub fn interpolate_onto(f: &Field, target: &GridSpec, scale: f64) -> Field {
    let src = *f.grid();
    assert_eq!(src.dim, target.dim, "dimension mismatch in interpolation");
    let spectrum = transform(f);
    let n = src.n;
    let m = target.n;
    match src.dim {
        1 => Field::from_parts(
            *target,
            interpolate_line(spectrum.values(), &src, target, scale),
        ),
        _ => {
            // Axis 1 first: n rows of length n -> n rows of length m.
            let rows: Vec<Vec<C64>> = par::map_range(n, |i| {
                interpolate_line(&spectrum.values()[i * n..(i + 1) * n], &src, target, scale)
            });
            // Axis 0: columns are still spectral along axis 0.
            let col_grid = GridSpec { dim: 1, ..src };
            let col_target = GridSpec { dim: 1, ..*target };
            let cols: Vec<Vec<C64>> = par::map_range(m, |j| {
                let col: Vec<C64> = (0..n).map(|i| rows[i][j]).collect();
                interpolate_line(&col, &col_grid, &col_target, scale)
            });
            let mut out = vec![C64::new(0.0, 0.0); m * m];
            for (j, col) in cols.iter().enumerate() {
                for (i, &v) in col.iter().enumerate() {
                    out[i * m + j] = v;
                }
            }
            Field::from_parts(*target, out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gaussian(grid: GridSpec, a: f64) -> Field {
        Field::from_fn(grid, move |[x, y]| {
            C64::new((-a * (x * x + y * y)).exp(), 0.0)
        })
    }

    fn rel_l2(a: &Field, b: &Field) -> f64 {
        a.sub(b).unwrap().l2_norm() / b.l2_norm()
    }

    #[test]
    fn round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(dim, n) in &[(1, 256), (2, 32), (1, 2)] {
            let g = GridSpec::new(dim, n, 5.0).unwrap();
            let vals = (0..g.len())
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let f = Field::new(g, vals).unwrap();
            let back = inverse_transform(&transform(&f));
            assert!(back.grid().same_as(&g));
            let back = back.with_grid(g);
            assert!(rel_l2(&back, &f) < 1e-12);
            assert!((transform(&f).l2_norm() - f.l2_norm()).abs() / f.l2_norm() < 1e-12);
        }
    }

    #[test]
    fn plane_wave_is_spike() {
        let g = GridSpec::new(1, 128, 10.0).unwrap();
        let xi = g.frequencies();
        let m = 70;
        let f = Field::from_fn(g, |[x, _]| C64::from_polar(1.0, xi[m] * x));
        let spec = transform(&f);
        let peak = spec.values()[m].norm();
        for (k, v) in spec.values().iter().enumerate() {
            if k != m {
                assert!(v.norm() < 1e-12 * peak, "bin {k}: {}", v.norm());
            }
        }
    }

    #[test]
    fn gaussian_self_dual() {
        for dim in [1, 2] {
            let n = if dim == 1 { 256 } else { 64 };
            let g = GridSpec::new(dim, n, 12.0).unwrap();
            let spec = transform(&gaussian(g, 0.5));
            let expect = gaussian(spec.grid().to_owned(), 0.5);
            let err = spec
                .values()
                .iter()
                .zip(expect.values())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-8, "dim {dim}: {err}");
        }
    }

    #[test]
    fn chirp_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let coeffs: Vec<C64> = (0..37)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let (z0, dz, y0, dy, m) = (-1.3, 0.11, 2.0, -0.07, 50);
        let fast = chirp_sum(&coeffs, z0, dz, y0, dy, m, -1.0);
        for (k, v) in fast.iter().enumerate() {
            let y = y0 + k as f64 * dy;
            let direct: C64 = coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| c * C64::from_polar(1.0, -y * (z0 + j as f64 * dz)))
                .sum();
            assert!((v - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn interpolation_reproduces_nodes_and_smooth_values() {
        let g = GridSpec::new(1, 128, 10.0).unwrap();
        let f = gaussian(g, 0.3);
        let same = interpolate_onto(&f, &g, 1.0);
        assert!(rel_l2(&same, &f) < 1e-12);
        let fine = GridSpec::new(1, 512, 6.0).unwrap();
        let up = interpolate_onto(&f, &fine, 1.0);
        let exact = gaussian(fine, 0.3);
        assert!(rel_l2(&up, &exact) < 1e-10);
        let g2 = GridSpec::new(2, 32, 8.0).unwrap();
        let fine2 = GridSpec::new(2, 48_usize.next_power_of_two(), 5.0).unwrap();
        let up2 = interpolate_onto(&gaussian(g2, 0.4), &fine2, 2.0);
        let exact2 = Field::from_fn(fine2, |[x, y]| {
            C64::new((-0.4 * (x * x + y * y) / 4.0).exp(), 0.0)
        });
        assert!(rel_l2(&up2, &exact2) < 1e-9);
    }
}
