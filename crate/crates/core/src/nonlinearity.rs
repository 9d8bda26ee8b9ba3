//! Homogeneous nonlinearities `F(λz) = λ^p F(z)`: the catalog, pointwise
//! evaluation, the circle Fourier decomposition
//! `F(z) = |z|^p Σ g_n (z/|z|)^n`, and sampled checks of the Lipschitz
//! condition (A1) and the sign condition (A2).

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::par;
use crate::spectral::{Field, C64};

pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_RADIUS: f64 = 10.0;
/// Resolution of the `θ` search in [`verify_a2`].
pub const THETA_GRID: usize = 1024;

const CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierCoefficient {
    pub n: i64,
    pub re: f64,
    pub im: f64,
}

impl FourierCoefficient {
    pub fn new(n: i64, g: C64) -> Self {
        Self {
            n,
            re: g.re,
            im: g.im,
        }
    }

    pub fn value(&self) -> C64 {
        C64::new(self.re, self.im)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonlinearityKind {
    /// `F = 0`.
    Free,
    /// `F = η|u|^p`.
    PurePower { eta: C64 },
    /// `F = η|u|^{p-1}u`, `η` real.
    GaugeInvariant { eta: f64 },
    /// `F = |u|^p Σ g_n (u/|u|)^n`.
    FourierSeries {
        coefficients: Vec<FourierCoefficient>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    pub p: f64,
    #[serde(flatten)]
    pub kind: NonlinearityKind,
}

impl NonlinearitySpec {
    pub fn free(p: f64) -> Self {
        Self {
            p,
            kind: NonlinearityKind::Free,
        }
    }

    pub fn pure_power(p: f64, eta: C64) -> Self {
        Self {
            p,
            kind: NonlinearityKind::PurePower { eta },
        }
    }

    pub fn gauge_invariant(p: f64, eta: f64) -> Self {
        Self {
            p,
            kind: NonlinearityKind::GaugeInvariant { eta },
        }
    }

    pub fn fourier_series(p: f64, coefficients: Vec<FourierCoefficient>) -> Self {
        Self {
            p,
            kind: NonlinearityKind::FourierSeries { coefficients },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(invalid("p", format!("need finite p > 1, got {}", self.p)));
        }
        match &self.kind {
            NonlinearityKind::Free => {}
            NonlinearityKind::PurePower { eta } => {
                if !(eta.re.is_finite() && eta.im.is_finite()) || eta.norm() == 0.0 {
                    return Err(invalid("eta", format!("need finite eta != 0, got {eta}")));
                }
            }
            NonlinearityKind::GaugeInvariant { eta } => {
                if !eta.is_finite() {
                    return Err(invalid("eta", format!("need finite eta, got {eta}")));
                }
            }
            NonlinearityKind::FourierSeries { coefficients } => {
                if coefficients.is_empty() {
                    return Err(invalid("coefficients", "empty coefficient window"));
                }
                let mut seen: Vec<i64> = coefficients.iter().map(|c| c.n).collect();
                seen.sort_unstable();
                if seen.windows(2).any(|w| w[0] == w[1]) {
                    return Err(invalid("coefficients", "repeated mode index"));
                }
                if coefficients
                    .iter()
                    .any(|c| !(c.re.is_finite() && c.im.is_finite()))
                {
                    return Err(invalid("coefficients", "non-finite coefficient"));
                }
            }
        }
        Ok(())
    }

    pub fn is_free(&self) -> bool {
        match &self.kind {
            NonlinearityKind::Free => true,
            NonlinearityKind::FourierSeries { coefficients } => {
                coefficients.iter().all(|c| c.re == 0.0 && c.im == 0.0)
            }
            _ => false,
        }
    }

    /// Gauge-invariant kinds admit the exact phase-rotation substep.
    pub fn gauge_rate(&self) -> Option<f64> {
        match &self.kind {
            NonlinearityKind::GaugeInvariant { eta } => Some(*eta),
            NonlinearityKind::Free => Some(0.0),
            _ => None,
        }
    }

    /// `g_n` of the circle restriction `θ ↦ F(e^{iθ})`.
    pub fn circle_coefficients(&self) -> Vec<FourierCoefficient> {
        match &self.kind {
            NonlinearityKind::Free => vec![],
            NonlinearityKind::PurePower { eta } => vec![FourierCoefficient::new(0, *eta)],
            NonlinearityKind::GaugeInvariant { eta } => {
                vec![FourierCoefficient::new(1, C64::new(*eta, 0.0))]
            }
            NonlinearityKind::FourierSeries { coefficients } => coefficients.clone(),
        }
    }

    /// `|g_0| - Σ_{n≠0} |g_n|`; positive means (A2) holds with `θ = -arg g_0`.
    pub fn ell1_margin(&self) -> f64 {
        let coeffs = self.circle_coefficients();
        let g0 = coeffs
            .iter()
            .find(|c| c.n == 0)
            .map_or(0.0, |c| c.value().norm());
        let rest: f64 = coeffs
            .iter()
            .filter(|c| c.n != 0)
            .map(|c| c.value().norm())
            .sum();
        g0 - rest
    }
}

/// A pointwise map `z ↦ F(z)` with homogeneity degree `p`.
pub trait PointwiseNonlinearity: Sync {
    fn degree(&self) -> f64;
    fn value(&self, z: C64) -> C64;
}

impl PointwiseNonlinearity for NonlinearitySpec {
    fn degree(&self) -> f64 {
        self.p
    }

    fn value(&self, z: C64) -> C64 {
        let r2 = z.norm_sqr();
        if r2 == 0.0 {
            return C64::new(0.0, 0.0);
        }
        match &self.kind {
            NonlinearityKind::Free => C64::new(0.0, 0.0),
            NonlinearityKind::PurePower { eta } => eta * modulus_pow(r2, self.p),
            NonlinearityKind::GaugeInvariant { eta } => z * (eta * modulus_pow(r2, self.p - 1.0)),
            NonlinearityKind::FourierSeries { coefficients } => {
                let phi = z.im.atan2(z.re);
                let s: C64 = coefficients
                    .iter()
                    .map(|c| c.value() * C64::from_polar(1.0, c.n as f64 * phi))
                    .sum();
                s * modulus_pow(r2, self.p)
            }
        }
    }
}

/// `|z|^q` from `|z|^2`, exact for the common integer powers.
#[inline]
pub(crate) fn modulus_pow(r2: f64, q: f64) -> f64 {
    if q == 2.0 {
        r2
    } else if q == 1.0 {
        r2.sqrt()
    } else if q == 4.0 {
        r2 * r2
    } else {
        r2.powf(0.5 * q)
    }
}

/// Closure-backed nonlinearity, e.g. for checking (A1) on candidates outside
/// the catalog.
pub struct CustomNonlinearity<F> {
    pub p: f64,
    pub f: F,
}

impl<F: Fn(C64) -> C64 + Sync> PointwiseNonlinearity for CustomNonlinearity<F> {
    fn degree(&self) -> f64 {
        self.p
    }

    fn value(&self, z: C64) -> C64 {
        (self.f)(z)
    }
}

/// Pointwise `F(u(x))`; zero input gives exactly zero output.
pub fn evaluate(spec: &NonlinearitySpec, f: &Field) -> Field {
    f.map(|_, z| spec.value(z))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub spec: NonlinearitySpec,
    /// `sup_θ |F(e^{iθ}) - Σ g_n e^{inθ}|` on a grid offset from the
    /// quadrature nodes.
    pub reconstruction_error: f64,
}

/// `g_n = (1/2π) ∫ F(e^{iθ}) e^{-inθ} dθ` for `|n| <= window` by the
/// trapezoidal rule.
pub fn decompose<F>(f_on_circle: F, p: f64, window: usize) -> Result<Decomposition>
where
    F: Fn(f64) -> C64,
{
    if !(p > 1.0 && p.is_finite()) {
        return Err(invalid("p", format!("need finite p > 1, got {p}")));
    }
    let m = (8 * (2 * window + 1)).next_power_of_two().max(1024);
    let samples: Vec<C64> = (0..m)
        .map(|j| f_on_circle(TAU * j as f64 / m as f64))
        .collect();
    if samples
        .iter()
        .any(|v| !(v.re.is_finite() && v.im.is_finite()))
    {
        return Err(invalid(
            "F_on_circle",
            "non-finite sample on the unit circle",
        ));
    }
    let w = window as i64;
    let coefficients: Vec<FourierCoefficient> = (-w..=w)
        .map(|n| {
            let g: C64 = samples
                .iter()
                .enumerate()
                .map(|(j, v)| v * C64::from_polar(1.0, -TAU * (n * j as i64) as f64 / m as f64))
                .sum::<C64>()
                / m as f64;
            FourierCoefficient::new(n, g)
        })
        .collect();
    let check = 4 * m;
    let mut err: f64 = 0.0;
    for j in 0..check {
        let theta = TAU * (j as f64 + 0.5) / check as f64;
        let recon: C64 = coefficients
            .iter()
            .map(|c| c.value() * C64::from_polar(1.0, c.n as f64 * theta))
            .sum();
        err = err.max((f_on_circle(theta) - recon).norm());
    }
    Ok(Decomposition {
        spec: NonlinearitySpec::fourier_series(p, coefficients),
        reconstruction_error: err,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionCertificate {
    pub c0: Option<f64>,
    pub theta: Option<f64>,
    pub lipschitz_constant: Option<f64>,
    pub sample_count: usize,
}

fn disk_point(rng: &mut ChaCha8Rng, radius: f64) -> C64 {
    let r = radius * rng.random::<f64>().sqrt();
    C64::from_polar(r, TAU * rng.random::<f64>())
}

/// Chunked draws, one ChaCha stream per chunk, so results do not depend on
/// thread count.
fn sample_chunks<T, G>(samples: usize, seed: u64, g: G) -> Vec<T>
where
    T: Send,
    G: Fn(&mut ChaCha8Rng, usize) -> T + Sync + Send,
{
    let chunks = samples.div_ceil(CHUNK);
    par::map_range(chunks, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let len = CHUNK.min(samples - c * CHUNK);
        g(&mut rng, len)
    })
}

/// Empirical `C` in `|F(z)-F(w)| <= C (|z|+|w|)^{p-1} |z-w|` over random
/// pairs in the disk of the given radius.
pub fn verify_a1(
    f: &dyn PointwiseNonlinearity,
    samples: usize,
    radius: f64,
    seed: u64,
) -> Result<ConditionCertificate> {
    if samples == 0 {
        return Err(invalid("samples", "need at least one sample"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid(
            "radius",
            format!("need finite radius > 0, got {radius}"),
        ));
    }
    let at_zero = f.value(C64::new(0.0, 0.0));
    if at_zero.norm() != 0.0 {
        return Err(invalid(
            "F",
            format!("(A1) needs F(0) = 0, got F(0) = {at_zero}"),
        ));
    }
    let p = f.degree();
    let worst = sample_chunks(samples, seed, |rng, len| {
        let mut worst: f64 = 0.0;
        for _ in 0..len {
            let z = disk_point(rng, radius);
            let w = disk_point(rng, radius);
            let denom = (z.norm() + w.norm()).powf(p - 1.0) * (z - w).norm();
            if denom == 0.0 {
                continue;
            }
            worst = worst.max((f.value(z) - f.value(w)).norm() / denom);
        }
        worst
    })
    .into_iter()
    .fold(0.0, f64::max);
    if !worst.is_finite() {
        return Err(Error::NoCertificate(format!(
            "(A1) ratio is unbounded on the sample ({worst})"
        )));
    }
    Ok(ConditionCertificate {
        c0: None,
        theta: None,
        lipschitz_constant: Some(worst),
        sample_count: samples,
    })
}

/// `(c_0, θ)` with `Re[e^{iθ} F(z)] >= c_0 |z|^p`.
///
/// Exact for pure powers; otherwise the best `θ` on a uniform grid (plus
/// `-arg g_0`) against the minimum over sampled `z`.
pub fn verify_a2(
    spec: &NonlinearitySpec,
    samples: usize,
    seed: u64,
) -> Result<ConditionCertificate> {
    spec.validate()?;
    if samples == 0 {
        return Err(invalid("samples", "need at least one sample"));
    }
    if let NonlinearityKind::PurePower { eta } = spec.kind {
        return Ok(ConditionCertificate {
            c0: Some(eta.norm()),
            theta: Some(-eta.arg()),
            lipschitz_constant: None,
            sample_count: 0,
        });
    }
    // By homogeneity only arg z matters: store F(z)/|z|^p.
    let normalised: Vec<C64> = sample_chunks(samples, seed, |rng, len| {
        let mut out = Vec::with_capacity(len);
        while out.len() < len {
            let z = disk_point(rng, 1.0);
            if z.norm_sqr() > 0.0 {
                out.push(spec.value(z) / modulus_pow(z.norm_sqr(), spec.p));
            }
        }
        out
    })
    .concat();
    let mut thetas: Vec<f64> = (0..THETA_GRID)
        .map(|k| TAU * k as f64 / THETA_GRID as f64)
        .collect();
    if let Some(g0) = spec.circle_coefficients().iter().find(|c| c.n == 0) {
        if g0.value().norm() > 0.0 {
            thetas.push(-g0.value().arg());
        }
    }
    let mins = par::map_slice(&thetas, |&theta| {
        let rot = C64::from_polar(1.0, theta);
        normalised
            .iter()
            .fold(f64::INFINITY, |m, v| m.min((rot * v).re))
    });
    let (best, c0) =
        mins.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, &m)| if m > acc.1 { (i, m) } else { acc },
        );
    if !(c0 > 0.0) {
        return Err(Error::NoCertificate(format!(
            "(A2): best sampled c0 = {c0:.3e} <= 0 over {} angles",
            thetas.len()
        )));
    }
    Ok(ConditionCertificate {
        c0: Some(c0),
        theta: Some(thetas[best]),
        lipschitz_constant: None,
        sample_count: samples,
    })
}
