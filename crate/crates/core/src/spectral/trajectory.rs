use serde::{Deserialize, Serialize};

use super::{Field, GridSpec};
use crate::error::{invalid, Error, Result};
use crate::par;

/// How a snapshot was reached from the previous one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepMeta {
    /// Nominal step used since the previous snapshot (0 for sampled data).
    pub dt: f64,
    pub steps: usize,
    /// Splitting order (2 for Strang; 0 for exact/sampled fields).
    pub order: u32,
}

impl StepMeta {
    pub const EXACT: StepMeta = StepMeta {
        dt: 0.0,
        steps: 0,
        order: 0,
    };
}

/// Time-indexed fields on one grid.
#[derive(Clone, Debug)]
pub struct Trajectory {
    times: Vec<f64>,
    fields: Vec<Field>,
    step_meta: Vec<StepMeta>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, fields: Vec<Field>, step_meta: Vec<StepMeta>) -> Result<Self> {
        if times.is_empty() {
            return Err(invalid("times", "a trajectory needs at least one snapshot"));
        }
        if times.len() != fields.len() || times.len() != step_meta.len() {
            return Err(invalid(
                "times",
                format!(
                    "{} times, {} fields, {} step records",
                    times.len(),
                    fields.len(),
                    step_meta.len()
                ),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid(
                "times",
                "snapshot times must be strictly increasing",
            ));
        }
        let grid = *fields[0].grid();
        for f in &fields[1..] {
            if !f.grid().same_as(&grid) {
                return Err(Error::GridMismatch(
                    "trajectory snapshots on different grids".into(),
                ));
            }
        }
        Ok(Self {
            times,
            fields,
            step_meta,
        })
    }

    /// Evaluate `source(t)` at each time (in parallel when enabled).
    pub fn sample<F>(times: &[f64], source: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<Field> + Sync + Send,
    {
        let fields = par::try_map_range(times.len(), |i| source(times[i]))?;
        Self::new(times.to_vec(), fields, vec![StepMeta::EXACT; times.len()])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn step_meta(&self) -> &[StepMeta] {
        &self.step_meta
    }

    pub fn grid(&self) -> &GridSpec {
        self.fields[0].grid()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }

    /// Index of the snapshot at time `t` (relative tolerance `1e-9`).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * (1.0 + t.abs());
        self.times.iter().position(|&s| (s - t).abs() <= tol)
    }

    pub fn last(&self) -> &Field {
        self.fields.last().expect("non-empty")
    }
}

/// Trapezoid rule for samples `g` at strictly increasing `times`, restricted
/// to `[a, b]`; partial end intervals use linear interpolation of `g`.
pub(crate) fn trapezoid_on(times: &[f64], g: &[f64], a: f64, b: f64) -> f64 {
    debug_assert_eq!(times.len(), g.len());
    let mut total = 0.0;
    for i in 1..times.len() {
        let (t0, t1) = (times[i - 1], times[i]);
        let lo = t0.max(a);
        let hi = t1.min(b);
        if hi <= lo {
            continue;
        }
        let lerp = |t: f64| g[i - 1] + (g[i] - g[i - 1]) * (t - t0) / (t1 - t0);
        total += 0.5 * (hi - lo) * (lerp(lo) + lerp(hi));
    }
    total
}

/// `∫_a^b` of the quadratic through `(t_i, g_i)`, as weights on `g`.
fn quadratic_weights(t: [f64; 3], a: f64, b: f64) -> [f64; 3] {
    let anti = |s: f64, u: f64, v: f64| s * s * s / 3.0 - (u + v) * s * s / 2.0 + u * v * s;
    // Shift to t[1] for conditioning.
    let s = [t[0] - t[1], 0.0, t[2] - t[1]];
    let (a, b) = (a - t[1], b - t[1]);
    let basis = |i: usize, j: usize, k: usize| {
        (anti(b, s[j], s[k]) - anti(a, s[j], s[k])) / ((s[i] - s[j]) * (s[i] - s[k]))
    };
    [basis(0, 1, 2), basis(1, 0, 2), basis(2, 0, 1)]
}

/// Composite Simpson over the whole (possibly non-uniform) snapshot grid;
/// an odd trailing interval uses the quadratic through the last three
/// points. Two points fall back to the trapezoid.
pub(crate) fn simpson(times: &[f64], g: &[f64]) -> f64 {
    debug_assert_eq!(times.len(), g.len());
    let n = times.len();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 0.5 * (times[1] - times[0]) * (g[0] + g[1]);
    }
    let mut total = 0.0;
    let mut i = 0;
    while i + 2 < n {
        let w = quadratic_weights(
            [times[i], times[i + 1], times[i + 2]],
            times[i],
            times[i + 2],
        );
        total += w[0] * g[i] + w[1] * g[i + 1] + w[2] * g[i + 2];
        i += 2;
    }
    if i + 1 < n {
        let w = quadratic_weights(
            [times[i - 1], times[i], times[i + 1]],
            times[i],
            times[i + 1],
        );
        total += w[0] * g[i - 1] + w[1] * g[i] + w[2] * g[i + 1];
    }
    total
}
