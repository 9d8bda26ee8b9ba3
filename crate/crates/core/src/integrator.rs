//! Strang split-step integration of `i u_t + (1/2)Δu = F(u)`.

use std::fmt;
use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::CutoffSpec;
use crate::error::{invalid, Error, Result};
use crate::exponents::holder_conjugate;
use crate::free::KineticPhase;
use crate::nonlinearity::{modulus_pow, NonlinearitySpec, PointwiseNonlinearity};
use crate::par;
use crate::spectral::trajectory::simpson;
use crate::spectral::{boundary_mass_fraction, io, Field, StepMeta, Trajectory, C64};

pub const TRAJECTORY_SCHEMA: u32 = 1;
/// The outer tenth of the box along each axis.
pub const SHELL_START: f64 = 0.9;

fn default_boundary_tol() -> f64 {
    1e-6
}
fn default_substep_tol() -> f64 {
    1e-10
}
fn default_blowup() -> f64 {
    1e6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_stride: usize,
    #[serde(default = "default_boundary_tol")]
    pub boundary_mass_tol: f64,
    #[serde(default)]
    pub dealias: bool,
    #[serde(default = "default_substep_tol")]
    pub substep_tol: f64,
    /// Abort once `max|u|` exceeds this multiple of its initial value.
    #[serde(default = "default_blowup")]
    pub blowup_factor: f64,
}

impl StepConfig {
    pub fn new(dt: f64, t_end: f64, snapshot_stride: usize) -> Self {
        Self {
            dt,
            t_end,
            snapshot_stride,
            boundary_mass_tol: default_boundary_tol(),
            dealias: false,
            substep_tol: default_substep_tol(),
            blowup_factor: default_blowup(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid(
                "dt",
                format!("need finite dt > 0, got {}", self.dt),
            ));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt) {
            return Err(invalid(
                "t_end",
                format!("need dt <= t_end < inf, got t_end = {}", self.t_end),
            ));
        }
        if self.snapshot_stride == 0 {
            return Err(invalid("snapshot_stride", "must be at least 1"));
        }
        if !(self.boundary_mass_tol > 0.0) {
            return Err(invalid("boundary_mass_tol", "must be positive"));
        }
        if !(self.substep_tol > 0.0) {
            return Err(invalid("substep_tol", "must be positive"));
        }
        if !(self.blowup_factor > 1.0) {
            return Err(invalid("blowup_factor", "must exceed 1"));
        }
        Ok(())
    }

    /// Number of steps; the last one is shortened to land on `t_end`.
    pub fn step_count(&self) -> usize {
        ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn time_of(&self, k: usize) -> f64 {
        if k >= self.step_count() {
            self.t_end
        } else {
            k as f64 * self.dt
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum AbortReason {
    NonFinite,
    BoundaryMass { fraction: f64, tol: f64 },
    BlowUp { max_modulus: f64, limit: f64 },
}

impl fmt::Display for AbortReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbortReason::NonFinite => write!(f, "non-finite values in the solution"),
            AbortReason::BoundaryMass { fraction, tol } => write!(
                f,
                "boundary-shell mass fraction {fraction:.3e} exceeds {tol:.1e}; the periodic box no longer represents the whole line"
            ),
            AbortReason::BlowUp { max_modulus, limit } => {
                write!(f, "max|u| = {max_modulus:.3e} exceeds the blow-up limit {limit:.3e}")
            }
        }
    }
}

/// Per-snapshot ledger entry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub t: f64,
    pub mass: f64,
    pub boundary_fraction: f64,
    /// `2 Im ∫ ū F(u) dx`, the exact rate of change of the mass.
    pub flux: f64,
    pub max_modulus: f64,
}

impl SnapshotRecord {
    pub fn of(t: f64, u: &Field, spec: &NonlinearitySpec) -> Self {
        Self {
            t,
            mass: u.mass(),
            boundary_fraction: boundary_mass_fraction(u, SHELL_START),
            flux: mass_flux(u, spec),
            max_modulus: u.max_modulus(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Integration {
    pub trajectory: Trajectory,
    pub ledger: Vec<SnapshotRecord>,
    pub spec: NonlinearitySpec,
    pub config: StepConfig,
}

/// `2 Im ∫ ū F(u) dx`.
pub fn mass_flux(u: &Field, spec: &NonlinearitySpec) -> f64 {
    if spec.is_free() {
        return 0.0;
    }
    let s: f64 = u
        .values()
        .iter()
        .map(|z| (z.conj() * spec.value(*z)).im)
        .sum();
    2.0 * s * u.grid().cell_volume()
}

// Dormand–Prince 5(4); the right-hand side is autonomous, so the nodes are unused.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];
const MAX_DEPTH: u32 = 24;

fn dp_step<F: Fn(C64) -> C64>(f: &F, z: C64, h: f64) -> (C64, f64) {
    let mut k = [C64::new(0.0, 0.0); 7];
    for s in 0..7 {
        let mut y = z;
        for j in 0..s {
            y += k[j] * (h * A[s][j]);
        }
        k[s] = f(y);
    }
    let mut hi = z;
    let mut err = C64::new(0.0, 0.0);
    for s in 0..7 {
        hi += k[s] * (h * B5[s]);
        err += k[s] * (h * (B5[s] - B4[s]));
    }
    (hi, err.norm())
}

fn ode_adaptive<F: Fn(C64) -> C64>(f: &F, z: C64, h: f64, tol: f64, depth: u32) -> C64 {
    let (next, err) = dp_step(f, z, h);
    if err <= tol * (1.0 + z.norm()) || depth >= MAX_DEPTH || !err.is_finite() {
        return next;
    }
    let mid = ode_adaptive(f, z, 0.5 * h, tol, depth + 1);
    ode_adaptive(f, mid, 0.5 * h, tol, depth + 1)
}

/// Pointwise solution of `i u_t = F(u)` over `dt`.
pub fn nonlinear_substep(u: &Field, spec: &NonlinearitySpec, dt: f64, tol: f64) -> Field {
    if spec.is_free() {
        return u.clone();
    }
    if let Some(eta) = spec.gauge_rate() {
        let q = spec.p - 1.0;
        return u.map(|_, z| z * C64::from_polar(1.0, -eta * modulus_pow(z.norm_sqr(), q) * dt));
    }
    let rhs = |z: C64| C64::new(0.0, -1.0) * spec.value(z);
    u.map(|_, z| {
        if z.norm_sqr() == 0.0 {
            return z;
        }
        let mid = ode_adaptive(&rhs, z, 0.5 * dt, tol, 0);
        ode_adaptive(&rhs, mid, 0.5 * dt, tol, 0)
    })
}

struct Stepper<'a> {
    spec: &'a NonlinearitySpec,
    half: KineticPhase,
    tol: f64,
    dealias: bool,
}

impl<'a> Stepper<'a> {
    fn new(u: &Field, spec: &'a NonlinearitySpec, dt: f64, tol: f64, dealias: bool) -> Self {
        let half = KineticPhase::new(*u.grid(), 0.5 * dt);
        let half = if dealias { half.dealiased() } else { half };
        Self {
            spec,
            half,
            tol,
            dealias,
        }
    }

    fn dt(&self) -> f64 {
        2.0 * self.half.time()
    }

    fn retimed(&self, u: &Field, dt: f64) -> Self {
        Self::new(u, self.spec, dt, self.tol, self.dealias)
    }

    fn step(&self, u: &Field) -> Result<Field> {
        let a = self.half.apply(u)?;
        let b = nonlinear_substep(&a, self.spec, self.dt(), self.tol);
        self.half.apply(&b)
    }
}

/// One Strang step: half kinetic, nonlinear substep, half kinetic.
pub fn step(u: &Field, spec: &NonlinearitySpec, dt: f64) -> Result<Field> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt", format!("need finite dt > 0, got {dt}")));
    }
    spec.validate()?;
    Stepper::new(u, spec, dt, default_substep_tol(), false).step(u)
}

/// Integrate to `cfg.t_end`, storing every `snapshot_stride`-th state and the
/// final one. Guard violations return [`Error::Aborted`] carrying the
/// trajectory so far (ending with the last finite state).
pub fn integrate(u0: &Field, spec: &NonlinearitySpec, cfg: &StepConfig) -> Result<Integration> {
    cfg.validate()?;
    spec.validate()?;
    if !u0.is_finite() {
        return Err(invalid("u0", "initial data must be finite"));
    }
    let shell = boundary_mass_fraction(u0, SHELL_START);
    if shell > cfg.boundary_mass_tol {
        return Err(invalid(
            "u0",
            format!(
                "initial boundary-shell mass fraction {shell:.3e} already exceeds {:.1e}",
                cfg.boundary_mass_tol
            ),
        ));
    }
    let limit = cfg.blowup_factor * u0.max_modulus().max(f64::MIN_POSITIVE);
    let n = cfg.step_count();
    let stepper = Stepper::new(u0, spec, cfg.dt, cfg.substep_tol, cfg.dealias);
    let last_dt = cfg.t_end - (n - 1) as f64 * cfg.dt;
    let tail = ((last_dt - cfg.dt).abs() > 1e-12 * cfg.dt).then(|| stepper.retimed(u0, last_dt));

    let mut times = vec![0.0];
    let mut fields = vec![u0.clone()];
    let mut meta = vec![StepMeta::EXACT];
    let mut ledger = vec![SnapshotRecord::of(0.0, u0, spec)];
    let mut since = 0usize;
    let mut u = u0.clone();

    let finish = |times: Vec<f64>,
                  fields: Vec<Field>,
                  meta: Vec<StepMeta>,
                  ledger: Vec<SnapshotRecord>|
     -> Result<Integration> {
        Ok(Integration {
            trajectory: Trajectory::new(times, fields, meta)?,
            ledger,
            spec: spec.clone(),
            config: cfg.clone(),
        })
    };

    for k in 1..=n {
        let s = match (&tail, k == n) {
            (Some(t), true) => t,
            _ => &stepper,
        };
        let next = s.step(&u)?;
        since += 1;
        let t = cfg.time_of(k);
        let reason = if !next.is_finite() {
            Some(AbortReason::NonFinite)
        } else {
            let fraction = boundary_mass_fraction(&next, SHELL_START);
            let peak = next.max_modulus();
            if fraction > cfg.boundary_mass_tol {
                Some(AbortReason::BoundaryMass {
                    fraction,
                    tol: cfg.boundary_mass_tol,
                })
            } else if peak > limit {
                Some(AbortReason::BlowUp {
                    max_modulus: peak,
                    limit,
                })
            } else {
                None
            }
        };
        if let Some(reason) = reason {
            let (keep, keep_t) = if matches!(reason, AbortReason::NonFinite) {
                (u, cfg.time_of(k - 1))
            } else {
                (next, t)
            };
            if keep_t > *times.last().expect("non-empty") {
                ledger.push(SnapshotRecord::of(keep_t, &keep, spec));
                meta.push(StepMeta {
                    dt: cfg.dt,
                    steps: if keep_t == t { since } else { since - 1 },
                    order: 2,
                });
                times.push(keep_t);
                fields.push(keep);
            }
            let partial = finish(times, fields, meta, ledger)?;
            return Err(Error::Aborted {
                step: k,
                time: t,
                reason,
                partial: Box::new(partial),
            });
        }
        if k % cfg.snapshot_stride == 0 || k == n {
            ledger.push(SnapshotRecord::of(t, &next, spec));
            meta.push(StepMeta {
                dt: cfg.dt,
                steps: since,
                order: 2,
            });
            times.push(t);
            fields.push(next.clone());
            since = 0;
        }
        u = next;
    }
    finish(times, fields, meta, ledger)
}

/// Both sides of the weak identity
/// `∬ u(-i∂_tψ + ½Δψ) = i∫u_0ψ(0) + ∬F(u)ψ - i∫u(T)ψ(T)` over `(0, T)`,
/// `T = min(R², horizon)` (the last term vanishes when `T = R²`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakForm {
    pub horizon: f64,
    pub capped: bool,
    pub lhs: C64,
    pub rhs: C64,
    pub residual: f64,
}

/// Per-snapshot `(∫u(-i∂_tψ + ½Δψ), ∫F(u)ψ, ∫uψ)`.
pub(crate) fn pairing_series(
    traj: &Trajectory,
    cutoff: &CutoffSpec,
    spec: Option<&NonlinearitySpec>,
    upto: usize,
) -> Vec<[C64; 3]> {
    let grid = *traj.grid();
    let dv = grid.cell_volume();
    par::map_range(upto + 1, |i| {
        let t = traj.times()[i];
        let u = &traj.fields()[i];
        let mut acc = [C64::new(0.0, 0.0); 3];
        for (j, z) in u.values().iter().enumerate() {
            let jet = cutoff.jet(t, grid.radius_sq(j), grid.dim);
            if jet.psi == 0.0 && jet.dt == 0.0 && jet.lap == 0.0 {
                continue;
            }
            acc[0] += z * C64::new(0.5 * jet.lap, -jet.dt);
            if let Some(s) = spec {
                acc[1] += s.value(*z) * jet.psi;
            }
            acc[2] += z * jet.psi;
        }
        acc.map(|a| a * dv)
    })
}

/// Snapshot index of `min(R², cap)`, or a coverage error.
pub(crate) fn horizon_index(
    traj: &Trajectory,
    r: f64,
    cap: Option<f64>,
) -> Result<(usize, f64, bool)> {
    if traj.start().abs() > 1e-12 {
        return Err(Error::Coverage(format!(
            "trajectory starts at t = {}, not 0",
            traj.start()
        )));
    }
    let full = r * r;
    let (horizon, capped) = match cap {
        Some(c) if c < full => (c, true),
        _ => (full, false),
    };
    match traj.index_of(horizon) {
        Some(i) => Ok((i, horizon, capped)),
        None if traj.end() < horizon => Err(Error::Coverage(format!(
            "trajectory ends at t = {} before the horizon {horizon}",
            traj.end()
        ))),
        None => Err(Error::Coverage(format!(
            "horizon {horizon} is not a snapshot time"
        ))),
    }
}

fn integrate_c(times: &[f64], g: impl Fn(usize) -> C64) -> C64 {
    let re: Vec<f64> = (0..times.len()).map(|i| g(i).re).collect();
    let im: Vec<f64> = (0..times.len()).map(|i| g(i).im).collect();
    C64::new(simpson(times, &re), simpson(times, &im))
}

pub fn weak_form_terms(
    traj: &Trajectory,
    spec: &NonlinearitySpec,
    r: f64,
    horizon: Option<f64>,
) -> Result<WeakForm> {
    spec.validate()?;
    let cutoff = CutoffSpec::new(r, holder_conjugate(spec.p))?;
    let (idx, horizon, capped) = horizon_index(traj, r, horizon)?;
    let series = pairing_series(traj, &cutoff, Some(spec), idx);
    let times = &traj.times()[..=idx];
    let i = C64::new(0.0, 1.0);
    let lhs = integrate_c(times, |k| series[k][0]);
    let forcing = integrate_c(times, |k| series[k][1]);
    let rhs = i * series[0][2] + forcing - i * series[idx][2];
    Ok(WeakForm {
        horizon,
        capped,
        lhs,
        rhs,
        residual: (lhs - rhs).norm(),
    })
}

/// `|LHS - RHS|` of the weak identity; see [`WeakForm`].
pub fn weak_form_residual(
    traj: &Trajectory,
    spec: &NonlinearitySpec,
    r: f64,
    horizon: Option<f64>,
) -> Result<f64> {
    Ok(weak_form_terms(traj, spec, r, horizon)?.residual)
}

#[derive(Serialize, Deserialize)]
struct SnapshotEntry {
    index: usize,
    file: String,
    step: StepMeta,
    #[serde(flatten)]
    record: SnapshotRecord,
}

#[derive(Serialize, Deserialize)]
struct TrajectoryManifest {
    schema: u32,
    grid: crate::spectral::GridSpec,
    spec: NonlinearitySpec,
    config: StepConfig,
    snapshots: Vec<SnapshotEntry>,
}

/// Write `manifest.json` plus one binary field per snapshot into `dir`.
pub fn save_dir(run: &Integration, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let traj = &run.trajectory;
    let mut snapshots = Vec::with_capacity(traj.len());
    for (i, f) in traj.fields().iter().enumerate() {
        let file = format!("snapshot_{i:05}.bin");
        io::write_binary(f, BufWriter::new(fs::File::create(dir.join(&file))?))?;
        snapshots.push(SnapshotEntry {
            index: i,
            file,
            step: traj.step_meta()[i],
            record: run.ledger[i],
        });
    }
    let manifest = TrajectoryManifest {
        schema: TRAJECTORY_SCHEMA,
        grid: *traj.grid(),
        spec: run.spec.clone(),
        config: run.config.clone(),
        snapshots,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(dir.join("manifest.json"), text)?;
    Ok(())
}

pub fn load_dir(dir: &Path) -> Result<Integration> {
    let manifest: TrajectoryManifest =
        serde_json::from_reader(BufReader::new(fs::File::open(dir.join("manifest.json"))?))?;
    if manifest.schema != TRAJECTORY_SCHEMA {
        return Err(Error::Format(format!(
            "unsupported trajectory schema {}",
            manifest.schema
        )));
    }
    let mut times = Vec::new();
    let mut fields = Vec::new();
    let mut meta = Vec::new();
    let mut ledger = Vec::new();
    for s in manifest.snapshots {
        let f = io::read_binary(BufReader::new(fs::File::open(dir.join(&s.file))?))?;
        if !f.grid().same_as(&manifest.grid) {
            return Err(Error::Format(format!(
                "{} is not on the manifest grid",
                s.file
            )));
        }
        times.push(s.record.t);
        fields.push(f);
        meta.push(s.step);
        ledger.push(s.record);
    }
    Ok(Integration {
        trajectory: Trajectory::new(times, fields, meta)?,
        ledger,
        spec: manifest.spec,
        config: manifest.config,
    })
}
