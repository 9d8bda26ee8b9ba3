//! The experiment orchestrator: integrate, sweep in `R`, fit, diagnose.

use serde::{Deserialize, Serialize};

use super::config::{config_error, scoped, ExperimentConfig};
use crate::diagnostics::{
    capped_tail_fraction, cauchy_differences, dyadic_pairs, fit_slope, functional_i, lemma1_bound,
    lemma2_bound, relative_spread, scattering_residual, select_r0, slab_mass, slab_prediction,
    wouldbe_state, CauchyEntry, CutoffSpec, ResidualMode, SlopeFit, SweepRecord,
};
use crate::error::{Error, Result};
use crate::exponents::{regime_report, RegimeReport};
use crate::integrator::{integrate, weak_form_residual, AbortReason, Integration};
use crate::par;
use crate::spectral::Field;

/// Uniform intervals of `[0, R²]` for the free-flow cap surrogate.
pub const SURROGATE_INTERVALS: usize = 256;
/// Cauchy-difference growth exponents inside `±TREND_BAND` count as flat.
pub const TREND_BAND: f64 = 0.1;
/// Number of trailing dyadic pairs the Cauchy trend is fitted on.
pub const LATE_PAIRS: usize = 3;

/// Which stages run after the integration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub sweep: bool,
    pub scattering: bool,
}

impl Plan {
    pub const FULL: Plan = Plan {
        sweep: true,
        scattering: true,
    };
    pub const SIMULATE: Plan = Plan {
        sweep: false,
        scattering: false,
    };
    pub const SWEEP: Plan = Plan {
        sweep: true,
        scattering: false,
    };
    pub const SCATTER: Plan = Plan {
        sweep: false,
        scattering: true,
    };
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    Aborted {
        step: usize,
        time: f64,
        reason: AbortReason,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakFormEntry {
    #[serde(rename = "R")]
    pub r: f64,
    pub horizon: f64,
    /// `None` when the horizon is not a snapshot time.
    pub residual: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub t: f64,
    pub mass: f64,
    pub boundary_fraction: f64,
    pub flux: f64,
    pub max_modulus: f64,
    pub l2_residual: Option<f64>,
    pub spacetime_residual: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CauchyTrend {
    Decreasing,
    Saturating,
    Growing,
}

impl CauchyTrend {
    pub fn of(exponent: f64) -> Self {
        if exponent < -TREND_BAND {
            CauchyTrend::Decreasing
        } else if exponent > TREND_BAND {
            CauchyTrend::Growing
        } else {
            CauchyTrend::Saturating
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    /// Log-log fit of `I(R)` over the rows in `fit_radii`.
    pub i_slope: Option<SlopeFit>,
    pub fit_radii: Vec<f64>,
    pub slab_slope: Option<SlopeFit>,
    /// `slab_mass / slab_prediction` at the largest `R`.
    pub slab_ratio: Option<f64>,
    pub lower_exponent: f64,
    pub upper_exponent: f64,
    /// `i_slope - upper_exponent`.
    pub exponent_margin: Option<f64>,
    pub lemma1_spread: Option<f64>,
    /// Spread of `data_term / data_majorant` across `R`.
    pub data_ratio_spread: Option<f64>,
    /// Log-log growth of the last dyadic Cauchy differences in `t`.
    pub cauchy_exponent: Option<f64>,
    pub cauchy_trend: Option<CauchyTrend>,
    pub mass_ratio: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub plan: Plan,
    pub regime: RegimeReport,
    pub outcome: Outcome,
    pub initial: Field,
    pub integration: Integration,
    pub r0: Option<f64>,
    pub records: Vec<SweepRecord>,
    /// Surrogate tail share beyond the cap; `None` for uncapped rows.
    pub tail_fractions: Vec<Option<f64>>,
    pub weak_form: Vec<WeakFormEntry>,
    pub residuals: Vec<ResidualRow>,
    pub cauchy: Vec<CauchyEntry>,
    pub verdicts: Verdicts,
}

impl ExperimentResult {
    pub fn aborted(&self) -> bool {
        matches!(self.outcome, Outcome::Aborted { .. })
    }
}

pub fn run(config: &ExperimentConfig) -> Result<ExperimentResult> {
    run_plan(config, Plan::FULL)
}

/// Guard aborts are not errors: the partial trajectory is kept, the
/// diagnostics that need the full horizon are skipped, and
/// [`ExperimentResult::outcome`] says why.
pub fn run_plan(config: &ExperimentConfig, plan: Plan) -> Result<ExperimentResult> {
    config.validate()?;
    let regime = regime_report(&config.regime).map_err(|e| scoped("regime", e))?;
    let u0 = config.initial_field()?;
    let (integration, outcome) = match integrate(&u0, &config.nonlinearity, &config.step) {
        Ok(run) => (run, Outcome::Completed),
        Err(Error::Aborted {
            step,
            time,
            reason,
            partial,
        }) => (*partial, Outcome::Aborted { step, time, reason }),
        Err(Error::InvalidParameter { name: "u0", reason }) => {
            return Err(config_error("initial_data", reason))
        }
        Err(e) => return Err(scoped("step", e)),
    };
    let mut result = ExperimentResult {
        config: config.clone(),
        plan,
        verdicts: Verdicts {
            lower_exponent: regime.lower_exponent,
            upper_exponent: regime.upper_exponent,
            mass_ratio: integration.trajectory.last().mass() / u0.mass(),
            ..Verdicts::default()
        },
        regime,
        outcome,
        initial: u0,
        r0: None,
        records: Vec::new(),
        tail_fractions: Vec::new(),
        weak_form: Vec::new(),
        residuals: ledger_rows(&integration),
        cauchy: Vec::new(),
        integration,
    };
    if result.aborted() {
        return Ok(result);
    }
    let traj = &result.integration.trajectory;
    let u_plus = wouldbe_state(traj, traj.end())?;
    if plan.sweep && !config.sweep.radii.is_empty() {
        sweep(&mut result, &u_plus)?;
    }
    if plan.scattering {
        scattering(&mut result, &u_plus)?;
    }
    Ok(result)
}

fn ledger_rows(run: &Integration) -> Vec<ResidualRow> {
    run.ledger
        .iter()
        .map(|r| ResidualRow {
            t: r.t,
            mass: r.mass,
            boundary_fraction: r.boundary_fraction,
            flux: r.flux,
            max_modulus: r.max_modulus,
            l2_residual: None,
            spacetime_residual: None,
        })
        .collect()
}

fn sweep(result: &mut ExperimentResult, u_plus: &Field) -> Result<()> {
    let config = &result.config;
    let traj = &result.integration.trajectory;
    let p = config.power();
    let cap = config.sweep.horizon_cap;
    let r0 = select_r0(u_plus, p, config.sweep.r0).map_err(|e| scoped("sweep.r0", e))?;
    for i in 0..config.sweep.radii.len() {
        config.check_slab(i, r0)?;
    }
    let radii = &config.sweep.radii;
    let rows = par::try_map_range(
        radii.len(),
        |i| -> Result<(SweepRecord, Option<f64>, WeakFormEntry)> {
            let r = radii[i];
            let at = |e: Error| match e {
                e @ (Error::Config { .. } | Error::Aborted { .. }) => e,
                other => config_error(format!("sweep.R[{i}]"), other.to_string()),
            };
            let cutoff = CutoffSpec::for_power(r, p).map_err(at)?;
            let big_i = functional_i(traj, &cutoff, cap).map_err(at)?;
            let lemma1 = lemma1_bound(traj, &cutoff, cap).map_err(at)?;
            let lemma2 = lemma2_bound(&result.initial, &cutoff, config.regime.alpha).map_err(at)?;
            let record = SweepRecord {
                r,
                i_r: big_i.value,
                lemma1_ratio: lemma1.ratio,
                data_term: lemma2.lhs,
                data_majorant: lemma2.majorant,
                slab_mass: slab_mass(traj, r0, r, p).map_err(at)?,
                slab_prediction: slab_prediction(u_plus, r0, r, p),
                horizon_capped: big_i.capped,
            };
            let tail = if big_i.capped {
                Some(
                    capped_tail_fraction(
                        &result.initial,
                        &cutoff,
                        big_i.horizon,
                        SURROGATE_INTERVALS,
                    )
                    .map_err(at)?,
                )
            } else {
                None
            };
            let weak = WeakFormEntry {
                r,
                horizon: big_i.horizon,
                residual: weak_form_residual(traj, &config.nonlinearity, r, cap).ok(),
            };
            Ok((record, tail, weak))
        },
    )?;
    let mut records = Vec::with_capacity(rows.len());
    for (record, tail, weak) in rows {
        records.push(record);
        result.tail_fractions.push(tail);
        result.weak_form.push(weak);
    }

    let v = &mut result.verdicts;
    let tol = config.sweep.cap_tail_tol;
    let eligible: Vec<(f64, f64)> = records
        .iter()
        .zip(&result.tail_fractions)
        .filter(|(_, tail)| tail.is_none_or(|f| f < tol))
        .map(|(rec, _)| (rec.r, rec.i_r))
        .collect();
    v.fit_radii = eligible.iter().map(|e| e.0).collect();
    v.i_slope = fit_slope(&eligible).ok();
    v.exponent_margin = v.i_slope.map(|f| f.slope - v.upper_exponent);
    let slab: Vec<(f64, f64)> = records.iter().map(|r| (r.r, r.slab_mass)).collect();
    v.slab_slope = fit_slope(&slab).ok();
    v.slab_ratio = records.last().map(|r| r.slab_mass / r.slab_prediction);
    let lemma1: Vec<f64> = records.iter().map(|r| r.lemma1_ratio.abs()).collect();
    v.lemma1_spread = (lemma1.len() >= 2).then(|| relative_spread(&lemma1));
    let data: Vec<f64> = records
        .iter()
        .map(|r| r.data_term / r.data_majorant)
        .collect();
    v.data_ratio_spread = (data.len() >= 2).then(|| relative_spread(&data));
    result.r0 = Some(r0);
    result.records = records;
    Ok(())
}

fn scattering(result: &mut ExperimentResult, u_plus: &Field) -> Result<()> {
    let traj = &result.integration.trajectory;
    let p = result.config.power();
    let l2 = scattering_residual(traj, u_plus, ResidualMode::L2, p)?;
    let st = if p > 2.0 {
        Some(scattering_residual(
            traj,
            u_plus,
            ResidualMode::SpaceTime,
            p,
        )?)
    } else {
        None
    };
    for (i, row) in result.residuals.iter_mut().enumerate() {
        row.l2_residual = Some(l2.points[i].residual);
        row.spacetime_residual = st.as_ref().map(|s| s.points[i].residual);
    }
    let t_min = traj
        .times()
        .get(1)
        .copied()
        .unwrap_or(traj.end())
        .max(traj.end() / 1024.0);
    let pairs = dyadic_pairs(traj, t_min);
    result.cauchy = cauchy_differences(traj, &pairs)?;
    // Early pairs carry the transient; the trend is read off the last three.
    let late = result.cauchy.len().saturating_sub(LATE_PAIRS);
    let pts: Vec<(f64, f64)> = result.cauchy[late..]
        .iter()
        .map(|c| (c.t, c.difference))
        .collect();
    let fit = fit_slope(&pts).ok();
    result.verdicts.cauchy_exponent = fit.map(|f| f.slope);
    result.verdicts.cauchy_trend = fit.map(|f| CauchyTrend::of(f.slope));
    Ok(())
}
