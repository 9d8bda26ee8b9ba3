//! `ψ_R(t, x) = η((|x|² + t)/R²)^{2p'}` and its derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exponents::holder_conjugate;
use crate::par;

/// `h(τ) = g(τ)/(g(τ)+g(1-τ))`, `g(τ) = e^{-1/τ}`, on `0 < τ < 1`, as the
/// logistic `1/(1+e^E)` with `E = 1/τ - 1/(1-τ)`; plus `h(1-h)`, computed
/// without cancellation.
fn logistic(tau: f64) -> (f64, f64) {
    let e = 1.0 / tau - 1.0 / (1.0 - tau);
    let h = if e > 0.0 {
        let q = (-e).exp();
        q / (1.0 + q)
    } else {
        1.0 / (1.0 + e.exp())
    };
    let c = (0.5 * e).cosh();
    (h, 0.25 / (c * c))
}

/// `(η, η', η'')` at `s`: `η = 1` on `s <= 1/2`, `0` on `s >= 1`, and
/// `h(2(1-s))` in between.
pub fn eta_jet(s: f64) -> [f64; 3] {
    if s <= 0.5 {
        return [1.0, 0.0, 0.0];
    }
    if s >= 1.0 {
        return [0.0, 0.0, 0.0];
    }
    let tau = 2.0 * (1.0 - s);
    let (h, hh) = logistic(tau);
    let (a, b) = (tau, 1.0 - tau);
    let w = 1.0 / (a * a) + 1.0 / (b * b);
    let dw = -2.0 / (a * a * a) + 2.0 / (b * b * b);
    let d1 = hh * w;
    let d2 = hh * ((1.0 - 2.0 * h) * w * w + dw);
    // dτ/ds = -2
    [h, -2.0 * d1, 4.0 * d2]
}

pub fn eta_bump(s: f64) -> f64 {
    eta_jet(s)[0]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    #[serde(rename = "R")]
    pub r: f64,
    pub p_prime: f64,
}

/// `ψ`, `∂_t ψ`, `Δ_x ψ` at one space-time point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffJet {
    pub psi: f64,
    pub dt: f64,
    pub lap: f64,
}

impl CutoffSpec {
    pub fn new(r: f64, p_prime: f64) -> Result<Self> {
        let s = Self { r, p_prime };
        s.validate()?;
        Ok(s)
    }

    /// Cutoff paired with power `p`, i.e. exponent `2p/(p-1)`.
    pub fn for_power(r: f64, p: f64) -> Result<Self> {
        Self::new(r, holder_conjugate(p))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 1.0 && self.r.is_finite()) {
            return Err(invalid("R", format!("need finite R > 1, got {}", self.r)));
        }
        if !(self.p_prime > 1.0 && self.p_prime.is_finite()) {
            return Err(invalid(
                "p_prime",
                format!("need finite p' > 1, got {}", self.p_prime),
            ));
        }
        Ok(())
    }

    pub fn exponent(&self) -> f64 {
        2.0 * self.p_prime
    }

    /// Support in time: `ψ_R(t, ·) = 0` for `t >= R²`.
    pub fn horizon(&self) -> f64 {
        self.r * self.r
    }

    /// `ψ_R` at time `t` and `|x|² = r2`.
    pub fn value(&self, t: f64, r2: f64) -> f64 {
        let eta = eta_bump((r2 + t) / (self.r * self.r));
        if eta == 1.0 || eta == 0.0 {
            eta
        } else {
            eta.powf(self.exponent())
        }
    }

    /// Jet at `(t, |x|² = r2)` in dimension `dim`.
    pub fn jet(&self, t: f64, r2: f64, dim: usize) -> CutoffJet {
        let rr = self.r * self.r;
        let [e, e1, e2] = eta_jet((r2 + t) / rr);
        if e == 0.0 {
            return CutoffJet {
                psi: 0.0,
                dt: 0.0,
                lap: 0.0,
            };
        }
        if e1 == 0.0 && e2 == 0.0 {
            return CutoffJet {
                psi: e,
                dt: 0.0,
                lap: 0.0,
            };
        }
        let k = self.exponent();
        let ek2 = e.powf(k - 2.0);
        let ek1 = ek2 * e;
        let psi = ek1 * e;
        let dt = k * ek1 * e1 / rr;
        let lap = k * ((k - 1.0) * ek2 * e1 * e1 + ek1 * e2) * 4.0 * r2 / (rr * rr)
            + k * ek1 * e1 * 2.0 * dim as f64 / rr;
        CutoffJet { psi, dt, lap }
    }
}

/// `[η((|x|²+t)/R²)]^{2p'}` at `x`.
pub fn cutoff_value(spec: &CutoffSpec, t: f64, x: &[f64]) -> f64 {
    spec.value(t, x.iter().map(|v| v * v).sum())
}

/// Sampling lattice for [`lemma_psi_check`], scaled with `R`:
/// `t_i = R² i/nt`, `|x|_j = R j/nr`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiSampleGrid {
    pub dim: usize,
    pub nt: usize,
    pub nr: usize,
}

impl Default for PsiSampleGrid {
    fn default() -> Self {
        Self {
            dim: 1,
            nt: 400,
            nr: 400,
        }
    }
}

/// Empirical constants `sup |∂_t ψ| R² / ψ^{1-1/(2p')}` and
/// `sup |Δψ| R² / ψ^{1-1/p'}` over lattice points with `ψ > 0`.
pub fn lemma_psi_check(spec: &CutoffSpec, grid: &PsiSampleGrid) -> (f64, f64) {
    let rr = spec.r * spec.r;
    let k = spec.exponent();
    let rows = par::map_range(grid.nt + 1, |i| {
        let t = rr * i as f64 / grid.nt as f64;
        let mut best = (0.0f64, 0.0f64);
        for j in 0..=grid.nr {
            let x = spec.r * j as f64 / grid.nr as f64;
            let jet = spec.jet(t, x * x, grid.dim);
            if jet.psi <= 0.0 {
                continue;
            }
            best.0 = best.0.max(jet.dt.abs() * rr / jet.psi.powf(1.0 - 1.0 / k));
            best.1 = best.1.max(jet.lap.abs() * rr / jet.psi.powf(1.0 - 2.0 / k));
        }
        best
    });
    rows.into_iter()
        .fold((0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)))
}
