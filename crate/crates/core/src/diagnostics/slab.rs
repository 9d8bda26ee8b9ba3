//! The slab `D_{r0,R} = {R/(4r0) <= t <= R/(2r0), |x| <= r0 t}` and the
//! lower-bound chain through `φ_+`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::free::{asymptotic_profile_window, free_evolve_onto};
use crate::nonlinearity::modulus_pow;
use crate::par;
use crate::spectral::trajectory::trapezoid_on;
use crate::spectral::{ball_weights, lp_norm, transform, Field, GridSpec, Region, Trajectory};

/// `[R/(4r0), R/(2r0)]`.
pub fn slab_interval(r0: f64, r: f64) -> (f64, f64) {
    (r / (4.0 * r0), r / (2.0 * r0))
}

fn check_slab(grid: &GridSpec, r0: f64, r: f64, p: f64) -> Result<(f64, f64)> {
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(invalid("r0", format!("need finite r0 > 0, got {r0}")));
    }
    if !(r > 2.0 && r.is_finite()) {
        return Err(invalid("R", format!("the slab needs R > 2, got {r}")));
    }
    if !(p >= 1.0) {
        return Err(invalid("p", format!("need p >= 1, got {p}")));
    }
    let (t0, t1) = slab_interval(r0, r);
    if r0 * t1 > grid.half_length {
        return Err(Error::SupportEscape(format!(
            "slab ball radius r0 t = {} exceeds the box half-length {}",
            r0 * t1,
            grid.half_length
        )));
    }
    Ok((t0, t1))
}

fn ball_integral(f: &Field, radius: f64, p: f64) -> f64 {
    let w = ball_weights(f.grid(), radius);
    f.values()
        .iter()
        .zip(&w)
        .filter(|(_, &w)| w > 0.0)
        .map(|(z, w)| modulus_pow(z.norm_sqr(), p) * w)
        .sum::<f64>()
        * f.grid().cell_volume()
}

fn covering(traj: &Trajectory, t0: f64, t1: f64) -> Result<(usize, usize)> {
    let tol = 1e-9 * (1.0 + t1);
    if traj.start() > t0 + tol || traj.end() < t1 - tol {
        return Err(Error::Coverage(format!(
            "slab [{t0}, {t1}] not covered by [{}, {}]",
            traj.start(),
            traj.end()
        )));
    }
    let times = traj.times();
    let lo = times.partition_point(|&t| t <= t0 + tol).saturating_sub(1);
    let hi = times
        .partition_point(|&t| t < t1 - tol)
        .min(times.len() - 1);
    Ok((lo, hi))
}

/// `∬_{D_{r0,R}} |u|^p dx dt`; trapezoid in time with partial end intervals.
pub fn slab_mass(traj: &Trajectory, r0: f64, r: f64, p: f64) -> Result<f64> {
    let (t0, t1) = check_slab(traj.grid(), r0, r, p)?;
    let (lo, hi) = covering(traj, t0, t1)?;
    let times = &traj.times()[lo..=hi];
    let g = par::map_range(times.len(), |i| {
        ball_integral(&traj.fields()[lo + i], r0 * times[i], p)
    });
    Ok(trapezoid_on(times, &g, t0, t1))
}

/// Exponent `d + 1 - dp/2` of the slab scaling.
pub fn slab_exponent(d: usize, p: f64) -> f64 {
    d as f64 + 1.0 - d as f64 * p / 2.0
}

/// `C` in `∬_D |φ_+|^p = C R^{d+1-dp/2} ||F u_+||^p_{L^p(B(r0))}`.
pub fn slab_constant(d: usize, p: f64, r0: f64) -> f64 {
    let e = slab_exponent(d, p);
    if e.abs() < 1e-14 {
        std::f64::consts::LN_2
    } else {
        (0.5f64.powf(e) - 0.25f64.powf(e)) * r0.powf(-e) / e
    }
}

/// `||F u_+||^p_{L^p(B(r0))}` with fractional boundary cells.
pub fn profile_ball_mass(u_plus: &Field, r0: f64, p: f64) -> f64 {
    ball_integral(&transform(u_plus), r0, p)
}

/// Closed form of `∬_D |φ_+|^p`.
pub fn slab_prediction(u_plus: &Field, r0: f64, r: f64, p: f64) -> f64 {
    let d = u_plus.grid().dim;
    slab_constant(d, p, r0) * r.powf(slab_exponent(d, p)) * profile_ball_mass(u_plus, r0, p)
}

/// Slab integrals of the three pieces of `u = φ_+ + (U u_+ - φ_+) + (u - U u_+)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlabTerms {
    pub slab_mass: f64,
    pub profile: f64,
    pub profile_gap: f64,
    pub scattering_gap: f64,
    pub prediction: f64,
}

impl SlabTerms {
    /// `I_D^{1/p} >= profile^{1/p} - gap^{1/p} - gap^{1/p}` (triangle
    /// inequality in `L^p(D)`), returned as its right-hand side.
    pub fn lower_bound(&self, p: f64) -> f64 {
        self.profile.powf(1.0 / p)
            - self.profile_gap.powf(1.0 / p)
            - self.scattering_gap.powf(1.0 / p)
    }
}

/// The three-term split on the trajectory's snapshots inside the slab;
/// `u_plus` may live on a different (larger) grid.
pub fn slab_decomposition(
    traj: &Trajectory,
    u_plus: &Field,
    r0: f64,
    r: f64,
    p: f64,
) -> Result<SlabTerms> {
    let grid = *traj.grid();
    if grid.dim != u_plus.grid().dim {
        return Err(Error::GridMismatch(
            "u_plus and trajectory differ in dimension".into(),
        ));
    }
    let (t0, t1) = check_slab(&grid, r0, r, p)?;
    let (lo, hi) = covering(traj, t0, t1)?;
    let times = &traj.times()[lo..=hi];
    let rows = par::try_map_range(times.len(), |i| -> Result<[f64; 4]> {
        let t = times[i];
        let u = &traj.fields()[lo + i];
        let free = free_evolve_onto(u_plus, t, &grid)?;
        let phi = asymptotic_profile_window(u_plus, t, &grid)?;
        let rad = r0 * t;
        Ok([
            ball_integral(u, rad, p),
            ball_integral(&phi, rad, p),
            ball_integral(&free.sub(&phi)?, rad, p),
            ball_integral(&u.sub(&free)?, rad, p),
        ])
    })?;
    let col = |k: usize| -> f64 {
        let g: Vec<f64> = rows.iter().map(|r| r[k]).collect();
        trapezoid_on(times, &g, t0, t1)
    };
    Ok(SlabTerms {
        slab_mass: col(0),
        profile: col(1),
        profile_gap: col(2),
        scattering_gap: col(3),
        prediction: slab_prediction(u_plus, r0, r, p),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum R0Policy {
    /// Smallest `r` with `||F u_+||_{L^p(B(r))} >= fraction · ||F u_+||_{L^p}`.
    Fraction {
        fraction: f64,
    },
    Fixed {
        r0: f64,
    },
}

impl Default for R0Policy {
    fn default() -> Self {
        R0Policy::Fraction { fraction: 0.5 }
    }
}

pub fn select_r0(u_plus: &Field, p: f64, policy: R0Policy) -> Result<f64> {
    match policy {
        R0Policy::Fixed { r0 } if r0 > 0.0 && r0.is_finite() => Ok(r0),
        R0Policy::Fixed { r0 } => Err(invalid("r0", format!("need finite r0 > 0, got {r0}"))),
        R0Policy::Fraction { fraction } => {
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(invalid(
                    "fraction",
                    format!("need 0 < fraction < 1, got {fraction}"),
                ));
            }
            let spec = transform(u_plus);
            let total = lp_norm(&spec, p, Region::Full)?.powf(p);
            if total == 0.0 {
                return Err(invalid("u_plus", "r0 is undefined for u_plus = 0"));
            }
            // The fractional-cell ball mass is continuous and monotone in r.
            let target = fraction.powf(p) * total;
            let (mut lo, mut hi) = (
                0.0,
                spec.grid().half_length * (spec.grid().dim as f64).sqrt(),
            );
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if ball_integral(&spec, mid, p) >= target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Ok(hi)
        }
    }
}
