//! Distance to free evolution: `‖u(t) - U(t)u_+‖` in the two topologies, and
//! the would-be scattering states `U(-t)u(t)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::free::{free_evolve, free_evolve_onto, PropagatorForm};
use crate::par;
use crate::spectral::trajectory::trapezoid_on;
use crate::spectral::{lp_norm, Field, Region, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualMode {
    /// `sup_{s in [t, t_end]} ‖u(s) - U(s)u_+‖_2`.
    L2,
    /// `t^{d(p-2)/(4p)} (∫_t^{t_end} ‖u(s) - U(s)u_+‖_p^q ds)^{1/q}`,
    /// `q = 4p/(d(p-2))`.
    SpaceTime,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualPoint {
    pub t: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringResidual {
    pub mode: ResidualMode,
    pub points: Vec<ResidualPoint>,
    /// The tail beyond the last snapshot is missing: values are lower
    /// estimates of the infinite-horizon quantities.
    pub truncated: bool,
}

impl ScatteringResidual {
    /// Residual at the snapshot nearest to `t`.
    pub fn at(&self, t: f64) -> f64 {
        self.points
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
            .map_or(f64::NAN, |p| p.residual)
    }
}

/// `u(t) - U(t)u_+` for every snapshot.
fn deviations(traj: &Trajectory, u_plus: &Field) -> Result<Vec<Field>> {
    if u_plus.grid().dim != traj.grid().dim {
        return Err(Error::GridMismatch(
            "u_plus and trajectory differ in dimension".into(),
        ));
    }
    let grid = *traj.grid();
    par::try_map_range(traj.len(), |i| {
        let t = traj.times()[i];
        let free = if u_plus.grid().same_as(&grid) {
            free_evolve(u_plus, t, PropagatorForm::Multiplier)?
        } else {
            free_evolve_onto(u_plus, t, &grid)?
        };
        traj.fields()[i].sub(&free)
    })
}

pub fn scattering_residual(
    traj: &Trajectory,
    u_plus: &Field,
    mode: ResidualMode,
    p: f64,
) -> Result<ScatteringResidual> {
    let times = traj.times();
    let points = match mode {
        ResidualMode::L2 => {
            let norms: Vec<f64> = deviations(traj, u_plus)?
                .iter()
                .map(Field::l2_norm)
                .collect();
            let mut sup = 0.0f64;
            let mut out = vec![0.0; norms.len()];
            for i in (0..norms.len()).rev() {
                sup = sup.max(norms[i]);
                out[i] = sup;
            }
            times
                .iter()
                .zip(out)
                .map(|(&t, residual)| ResidualPoint { t, residual })
                .collect()
        }
        ResidualMode::SpaceTime => {
            if !(p > 2.0) {
                return Err(invalid(
                    "p",
                    format!("the space-time residual needs p > 2, got {p}"),
                ));
            }
            let d = traj.grid().dim as f64;
            let q = 4.0 * p / (d * (p - 2.0));
            let g: Vec<f64> = deviations(traj, u_plus)?
                .iter()
                .map(|f| lp_norm(f, p, Region::Full).map(|n| n.powf(q)))
                .collect::<Result<_>>()?;
            let end = traj.end();
            let weight = d * (p - 2.0) / (4.0 * p);
            times
                .iter()
                .map(|&t| ResidualPoint {
                    t,
                    residual: t.powf(weight) * trapezoid_on(times, &g, t, end).powf(1.0 / q),
                })
                .collect()
        }
    };
    Ok(ScatteringResidual {
        mode,
        points,
        truncated: true,
    })
}

/// `U(-t) u(t)` at a snapshot time.
pub fn wouldbe_state(traj: &Trajectory, t: f64) -> Result<Field> {
    let i = traj
        .index_of(t)
        .ok_or_else(|| Error::Coverage(format!("t = {t} is not a snapshot time")))?;
    free_evolve(
        &traj.fields()[i],
        -traj.times()[i],
        PropagatorForm::Multiplier,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyEntry {
    pub s: f64,
    pub t: f64,
    /// `‖U(-t)u(t) - U(-s)u(s)‖_2`.
    pub difference: f64,
}

pub fn cauchy_differences(traj: &Trajectory, pairs: &[(f64, f64)]) -> Result<Vec<CauchyEntry>> {
    par::try_map_range(pairs.len(), |k| {
        let (s, t) = pairs[k];
        Ok(CauchyEntry {
            s,
            t,
            difference: wouldbe_state(traj, t)?
                .sub(&wouldbe_state(traj, s)?)?
                .l2_norm(),
        })
    })
}

/// `(t_end/2^{k+1}, t_end/2^k)` snapped to snapshots, for
/// `t_end/2^{k+1} >= t_min`; ordered by increasing time.
pub fn dyadic_pairs(traj: &Trajectory, t_min: f64) -> Vec<(f64, f64)> {
    let snap = |t: f64| {
        *traj
            .times()
            .iter()
            .min_by(|a, b| (*a - t).abs().total_cmp(&(*b - t).abs()))
            .expect("non-empty")
    };
    let mut pairs = Vec::new();
    let mut hi = traj.end();
    while hi / 2.0 >= t_min.max(f64::MIN_POSITIVE) {
        let (s, t) = (snap(hi / 2.0), snap(hi));
        if s < t {
            pairs.push((s, t));
        }
        hi /= 2.0;
    }
    pairs.reverse();
    pairs
}

/// Differences between consecutive snapshots.
pub fn cauchy_table(traj: &Trajectory) -> Result<Vec<CauchyEntry>> {
    let pairs: Vec<(f64, f64)> = traj.times().windows(2).map(|w| (w[0], w[1])).collect();
    cauchy_differences(traj, &pairs)
}
