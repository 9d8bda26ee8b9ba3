//! `I(R)`, the Lemma 1 ratio and the Lemma 2 data term.

use serde::{Deserialize, Serialize};

use super::CutoffSpec;
use crate::error::{Error, Result};
use crate::exponents::DataTermCase;
use crate::free::free_evolve_onto;
use crate::integrator::pairing_series;
use crate::nonlinearity::modulus_pow;
use crate::par;
use crate::spectral::trajectory::trapezoid_on;
use crate::spectral::{weighted_h_norm, Field, Trajectory};

/// Power `p` paired with the cutoff exponent `2p'`.
pub(crate) fn power_of(cutoff: &CutoffSpec) -> f64 {
    cutoff.p_prime / (cutoff.p_prime - 1.0)
}

/// Integration window `[0, T]` with `T = min(R², cap)` and the index of the
/// first snapshot at or beyond `T`.
pub(crate) fn window(
    traj: &Trajectory,
    cutoff: &CutoffSpec,
    cap: Option<f64>,
) -> Result<(f64, bool, usize)> {
    if traj.start().abs() > 1e-12 {
        return Err(Error::Coverage(format!(
            "trajectory starts at t = {}, not 0",
            traj.start()
        )));
    }
    let full = cutoff.horizon();
    let (horizon, capped) = match cap {
        Some(c) if c < full => (c, true),
        _ => (full, false),
    };
    let tol = 1e-9 * (1.0 + horizon);
    if traj.end() < horizon - tol {
        let hint = if capped {
            ""
        } else {
            " (no horizon cap given)"
        };
        return Err(Error::Coverage(format!(
            "trajectory ends at t = {} before T = {horizon}{hint}",
            traj.end()
        )));
    }
    let last = traj
        .times()
        .partition_point(|&t| t < horizon - tol)
        .min(traj.len() - 1);
    Ok((horizon, capped, last))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalI {
    pub value: f64,
    pub horizon: f64,
    pub capped: bool,
}

/// `I(R) = ∬_{(0,T)×R^d} |u|^p ψ_R dx dt`, trapezoid in time.
pub fn functional_i(
    traj: &Trajectory,
    cutoff: &CutoffSpec,
    cap: Option<f64>,
) -> Result<FunctionalI> {
    cutoff.validate()?;
    let (horizon, capped, last) = window(traj, cutoff, cap)?;
    let p = power_of(cutoff);
    let grid = *traj.grid();
    let dv = grid.cell_volume();
    let g = par::map_range(last + 1, |i| {
        let t = traj.times()[i];
        traj.fields()[i]
            .values()
            .iter()
            .enumerate()
            .map(|(j, z)| {
                let psi = cutoff.value(t, grid.radius_sq(j));
                if psi == 0.0 {
                    0.0
                } else {
                    modulus_pow(z.norm_sqr(), p) * psi
                }
            })
            .sum::<f64>()
            * dv
    });
    Ok(FunctionalI {
        value: trapezoid_on(&traj.times()[..=last], &g, 0.0, horizon),
        horizon,
        capped,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1 {
    /// `Re ∬ u (-i∂_tψ + ½Δψ)`.
    pub numerator: f64,
    /// `R^{d-(d+2)/p} I(R)^{1/p}`.
    pub denominator: f64,
    pub ratio: f64,
    pub capped: bool,
}

pub fn lemma1_bound(traj: &Trajectory, cutoff: &CutoffSpec, cap: Option<f64>) -> Result<Lemma1> {
    let i_r = functional_i(traj, cutoff, cap)?;
    let (horizon, capped, last) = window(traj, cutoff, cap)?;
    let series = pairing_series(traj, cutoff, None, last);
    let re: Vec<f64> = series.iter().map(|s| s[0].re).collect();
    let numerator = trapezoid_on(&traj.times()[..=last], &re, 0.0, horizon);
    let p = power_of(cutoff);
    let d = traj.grid().dim as f64;
    let denominator = cutoff.r.powf(d - (d + 2.0) / p) * i_r.value.powf(1.0 / p);
    let ratio = if denominator > 0.0 {
        numerator / denominator
    } else if numerator == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(Lemma1 {
        numerator,
        denominator,
        ratio,
        capped,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma2 {
    /// `|Im ∫ u_0 ψ_R(0, x) dx|`.
    pub lhs: f64,
    /// `||u_0||_{FH^α} · {1, log R, R^{(d-2α)/2}}`.
    pub majorant: f64,
    pub case: DataTermCase,
}

pub fn lemma2_bound(u0: &Field, cutoff: &CutoffSpec, alpha: f64) -> Result<Lemma2> {
    cutoff.validate()?;
    let grid = u0.grid();
    let s: f64 = u0
        .values()
        .iter()
        .enumerate()
        .map(|(j, z)| z.im * cutoff.value(0.0, grid.radius_sq(j)))
        .sum();
    let d = grid.dim as u32;
    let case = DataTermCase::of(d, alpha);
    Ok(Lemma2 {
        lhs: (s * grid.cell_volume()).abs(),
        majorant: weighted_h_norm(u0, alpha) * case.growth(d, alpha, cutoff.r),
        case,
    })
}

/// Share of the free-flow surrogate `∬|U(t)u_0|^p ψ_R` lying beyond
/// `t = cap`, by the trapezoid rule on `nt` uniform intervals of `[0, R²]`.
pub fn capped_tail_fraction(u0: &Field, cutoff: &CutoffSpec, cap: f64, nt: usize) -> Result<f64> {
    cutoff.validate()?;
    let horizon = cutoff.horizon();
    if cap >= horizon {
        return Ok(0.0);
    }
    if nt < 2 {
        return Err(crate::error::invalid("nt", "need at least 2 intervals"));
    }
    let p = power_of(cutoff);
    let grid = *u0.grid();
    let times: Vec<f64> = (0..=nt).map(|k| horizon * k as f64 / nt as f64).collect();
    let g = par::try_map_range(nt + 1, |k| -> Result<f64> {
        let t = times[k];
        let u = free_evolve_onto(u0, t, &grid)?;
        Ok(u.values()
            .iter()
            .enumerate()
            .map(|(j, z)| {
                let psi = cutoff.value(t, grid.radius_sq(j));
                if psi == 0.0 {
                    0.0
                } else {
                    modulus_pow(z.norm_sqr(), p) * psi
                }
            })
            .sum::<f64>()
            * grid.cell_volume())
    })?;
    let total = trapezoid_on(&times, &g, 0.0, horizon);
    if total == 0.0 {
        return Ok(0.0);
    }
    Ok(trapezoid_on(&times, &g, cap.max(0.0), horizon) / total)
}

/// One row of an `R`-sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "I_R")]
    pub i_r: f64,
    pub lemma1_ratio: f64,
    pub data_term: f64,
    pub data_majorant: f64,
    pub slab_mass: f64,
    pub slab_prediction: f64,
    pub horizon_capped: bool,
}
