//! Closed-form exponent arithmetic and the regime classifier.
//!
//! Everything here is a pure function of `(d, p, alpha, beta)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Tolerance on `|p - p_st(d)|` below which a power is classified critical.
pub const CRITICAL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeParams {
    pub d: u32,
    pub p: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
}

impl RegimeParams {
    pub fn new(d: u32, p: f64, alpha: f64, beta: f64) -> Result<Self> {
        let params = Self { d, p, alpha, beta };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(invalid("d", "dimension must be at least 1"));
        }
        if !(self.p.is_finite() && self.p > 1.0) {
            return Err(invalid(
                "p",
                format!("power must be finite and > 1, got {}", self.p),
            ));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(invalid(
                "alpha",
                format!("weight must be >= 0, got {}", self.alpha),
            ));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(invalid(
                "beta",
                format!("weight must be >= 0, got {}", self.beta),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    SubShortRange,
    SubStrauss,
    CriticalStrauss,
    SuperStrauss,
}

/// Which majorant applies to the initial-data term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataTermCase {
    /// `alpha > d/2`: bounded.
    Bounded,
    /// `alpha = d/2`: `log R`.
    Logarithmic,
    /// `alpha < d/2`: `R^{(d - 2 alpha)/2}`.
    Power,
}

impl DataTermCase {
    pub fn of(d: u32, alpha: f64) -> Self {
        let half = d as f64 / 2.0;
        if (alpha - half).abs() <= CRITICAL_TOL {
            DataTermCase::Logarithmic
        } else if alpha > half {
            DataTermCase::Bounded
        } else {
            DataTermCase::Power
        }
    }

    /// Growth factor in `R` of the majorant.
    pub fn growth(self, d: u32, alpha: f64, radius: f64) -> f64 {
        match self {
            DataTermCase::Bounded => 1.0,
            DataTermCase::Logarithmic => radius.ln(),
            DataTermCase::Power => radius.powf((d as f64 - 2.0 * alpha) / 2.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub d: u32,
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub p_strauss: f64,
    pub p_short_range: f64,
    pub p_mass_crit: f64,
    pub s_c: f64,
    pub holder_conjugate: f64,
    pub q0_r0: (f64, f64),
    pub lower_exponent: f64,
    pub upper_exponent: f64,
    pub lemma2_exponent: f64,
    pub lemma2_case: DataTermCase,
    /// `d(p-2)/(4p)`; `None` when `p <= 2`.
    pub decay_rate: Option<f64>,
    pub theorem_gap: f64,
    /// `alpha >= s_c`.
    pub weight_admissible: bool,
    /// `beta > d/2 - d/p` (only meaningful for `p > 2`).
    pub beta_admissible: bool,
    pub classification: Classification,
}

/// Positive root of `d x^2 - (d+2) x - 2 = 0`.
///
/// `d = 0` returns `+inf`, the wave-equation convention `p_st(0) = inf`.
pub fn strauss_exponent(d: i64) -> Result<f64> {
    if d < 0 {
        return Err(invalid("d", format!("dimension must be >= 0, got {d}")));
    }
    if d == 0 {
        return Ok(f64::INFINITY);
    }
    let d = d as f64;
    let disc = d * d + 12.0 * d + 4.0;
    Ok((d + 2.0 + disc.sqrt()) / (2.0 * d))
}

pub(crate) fn strauss(d: u32) -> f64 {
    strauss_exponent(d as i64).expect("d >= 0")
}

/// `d x^2 - (d+2) x - 2` evaluated at `x`.
pub fn strauss_quadratic(d: u32, x: f64) -> f64 {
    let d = d as f64;
    d * x * x - (d + 2.0) * x - 2.0
}

pub fn holder_conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

/// Lower-bound exponent `d + 1 - dp/2` carried by asymptotically free profiles.
pub fn lower_exponent(d: u32, p: f64) -> f64 {
    d as f64 + 1.0 - d as f64 * p / 2.0
}

/// Upper-bound exponent `d - 2/(p-1)` forced by the nonlinearity.
pub fn upper_exponent(d: u32, p: f64) -> f64 {
    d as f64 - 2.0 / (p - 1.0)
}

pub fn scale_critical_weight(d: u32, p: f64) -> f64 {
    2.0 / (p - 1.0) - d as f64 / 2.0
}

/// `(d - 2 alpha)/2`.
pub fn lemma2_exponent(d: u32, alpha: f64) -> f64 {
    (d as f64 - 2.0 * alpha) / 2.0
}

/// `lower_exponent - upper_exponent`; positive exactly when `p < p_st(d)`.
pub fn theorem_gap(params: &RegimeParams) -> f64 {
    lower_exponent(params.d, params.p) - upper_exponent(params.d, params.p)
}

pub fn classify(d: u32, p: f64) -> Classification {
    let pst = strauss(d);
    if p <= 1.0 + 2.0 / d as f64 {
        Classification::SubShortRange
    } else if (p - pst).abs() <= CRITICAL_TOL {
        Classification::CriticalStrauss
    } else if p > pst {
        Classification::SuperStrauss
    } else {
        Classification::SubStrauss
    }
}

pub fn regime_report(params: &RegimeParams) -> Result<RegimeReport> {
    params.validate()?;
    let RegimeParams { d, p, alpha, beta } = *params;
    let df = d as f64;
    let s_c = scale_critical_weight(d, p);
    Ok(RegimeReport {
        d,
        p,
        alpha,
        beta,
        p_strauss: strauss(d),
        p_short_range: 1.0 + 2.0 / df,
        p_mass_crit: 1.0 + 4.0 / df,
        s_c,
        holder_conjugate: holder_conjugate(p),
        q0_r0: (4.0 * (p + 1.0) / (df * (p - 1.0)), 1.0 + p),
        lower_exponent: lower_exponent(d, p),
        upper_exponent: upper_exponent(d, p),
        lemma2_exponent: lemma2_exponent(d, alpha),
        lemma2_case: DataTermCase::of(d, alpha),
        decay_rate: (p > 2.0).then(|| df * (p - 2.0) / (4.0 * p)),
        theorem_gap: theorem_gap(params),
        weight_admissible: alpha >= s_c,
        beta_admissible: beta > df / 2.0 - df / p,
        classification: classify(d, p),
    })
}

/// Strichartz admissibility of `(q, r)` in dimension `d`; `f64::INFINITY`
/// stands for the endpoint `inf`.
pub fn is_admissible(d: u32, q: f64, r: f64) -> bool {
    let in_range = |v: f64| v >= 2.0 && (v.is_finite() || v == f64::INFINITY);
    if d == 0 || !in_range(q) || !in_range(r) {
        return false;
    }
    if d == 2 && q == 2.0 && r.is_infinite() {
        return false;
    }
    let lhs = 2.0 / q;
    let rhs = d as f64 * (0.5 - 1.0 / r);
    (lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs())
}

/// `(4p/(d(p-2)), p)`, admissible for `d = 1, 2` and `p > 2`.
pub fn decay_pair(d: u32, p: f64) -> Option<(f64, f64)> {
    (p > 2.0).then(|| (4.0 * p / (d as f64 * (p - 2.0)), p))
}

/// One row of the phase table over a p-grid.
pub fn phase_table(d: u32, alpha: f64, p_values: &[f64]) -> Result<Vec<RegimeReport>> {
    p_values
        .iter()
        .map(|&p| regime_report(&RegimeParams::new(d, p, alpha, 0.0)?))
        .collect()
}

pub const PHASE_TABLE_HEADER: &str =
    "d,p,p_strauss,s_c,lower_exponent,upper_exponent,theorem_gap,lemma2_exponent,decay_rate,classification";

pub fn phase_table_row(r: &RegimeReport) -> String {
    let decay = r.decay_rate.map(|v| format!("{v:.12}")).unwrap_or_default();
    let class = serde_json::to_value(r.classification)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default();
    format!(
        "{},{:.12},{:.12},{:.12},{:.12},{:.12},{:.12},{:.12},{},{}",
        r.d,
        r.p,
        r.p_strauss,
        r.s_c,
        r.lower_exponent,
        r.upper_exponent,
        r.theorem_gap,
        r.lemma2_exponent,
        decay,
        class
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bisection on the quadratic, independent of the closed form.
    fn bisect_root(d: u32) -> f64 {
        let (mut lo, mut hi) = (1.0_f64, 10.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if strauss_quadratic(d, mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn strauss_known_values() {
        assert_eq!(strauss_exponent(3).unwrap(), 2.0);
        assert!((strauss_exponent(1).unwrap() - bisect_root(1)).abs() < 1e-13);
        assert!((strauss_exponent(1).unwrap() - (3.0 + 17f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!((strauss_exponent(2).unwrap() - (1.0 + 2f64.sqrt())).abs() < 1e-15);
        assert!((strauss_exponent(2).unwrap() - bisect_root(2)).abs() < 1e-13);
        assert!(strauss_exponent(-1).is_err());
        assert_eq!(strauss_exponent(0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn strauss_decreasing_and_below_two() {
        let vals: Vec<f64> = (1..=10).map(|d| strauss_exponent(d).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
        for d in 3..=10 {
            assert!(vals[d - 1] <= 2.0);
        }
        for d in 1..=10u32 {
            assert!(strauss_quadratic(d, vals[d as usize - 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn report_d1_p2() {
        let r = regime_report(&RegimeParams::new(1, 2.0, 1.5, 0.0).unwrap()).unwrap();
        assert_eq!(r.lower_exponent, 1.0);
        assert_eq!(r.upper_exponent, -1.0);
        assert_eq!(r.s_c, 1.5);
        // p = 2 <= 1 + 2/d = 3
        assert_eq!(r.classification, Classification::SubShortRange);
        assert_eq!(classify(1, 3.2), Classification::SubStrauss);
        assert_eq!(r.decay_rate, None);
        assert_eq!(r.theorem_gap, 2.0);
        assert_eq!(r.holder_conjugate, 2.0);
        assert_eq!(r.q0_r0, (12.0, 3.0));
    }

    #[test]
    fn report_boundaries() {
        let r = regime_report(&RegimeParams::new(2, 2.0, 0.0, 0.0).unwrap()).unwrap();
        // 2/(p-1) - d/2 = 2 - 1
        assert_eq!(r.s_c, 1.0);
        assert_eq!(r.p_short_range, 2.0);
        assert_eq!(r.classification, Classification::SubShortRange);
        let r = regime_report(&RegimeParams::new(1, 4.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(r.classification, Classification::SuperStrauss);
        assert!(4.0 > bisect_root(1));
        let pst = strauss_exponent(1).unwrap();
        assert_eq!(classify(1, pst), Classification::CriticalStrauss);
        assert!(theorem_gap(&RegimeParams::new(1, pst, 0.0, 0.0).unwrap()).abs() < 1e-10);
        assert_eq!(
            theorem_gap(&RegimeParams::new(3, 2.0, 0.0, 0.0).unwrap()),
            0.0
        );
        let r = regime_report(&RegimeParams::new(1, 3.0, 0.0, 0.0).unwrap()).unwrap();
        assert!((r.decay_rate.unwrap() - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(RegimeParams::new(0, 2.0, 0.0, 0.0).is_err());
        assert!(RegimeParams::new(1, 1.0, 0.0, 0.0).is_err());
        assert!(RegimeParams::new(1, 2.0, -0.1, 0.0).is_err());
    }

    #[test]
    fn admissible_pairs() {
        assert!(is_admissible(1, f64::INFINITY, 2.0));
        assert!(!is_admissible(2, 2.0, f64::INFINITY));
        let (q, r) = decay_pair(1, 3.0).unwrap();
        assert_eq!((q, r), (12.0, 3.0));
        assert!(is_admissible(1, q, r));
        assert!(is_admissible(3, 2.0, 6.0));
        assert!(!is_admissible(1, 1.0, 2.0));
        assert!(!is_admissible(1, 4.0, 4.0));
        for &p in &[2.2, 2.4, 3.0] {
            let (q, r) = decay_pair(2, p).unwrap();
            assert!(is_admissible(2, q, r));
        }
    }

    #[test]
    fn lemma2_case_tags() {
        assert_eq!(DataTermCase::of(1, 0.3), DataTermCase::Power);
        assert_eq!(DataTermCase::of(1, 0.5), DataTermCase::Logarithmic);
        assert_eq!(DataTermCase::of(1, 1.0), DataTermCase::Bounded);
    }

    #[test]
    fn balancing_identity_at_critical_weight() {
        for d in 1..=4u32 {
            for &p in &[2.0, 2.5, 3.0, 4.0] {
                let sc = scale_critical_weight(d, p);
                assert!((lemma2_exponent(d, sc) - upper_exponent(d, p)).abs() < 1e-12);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]
            #[test]
            fn gap_sign_matches_threshold(d in 1u32..=6, p in 1.0001f64..6.0) {
                let gap = theorem_gap(&RegimeParams { d, p, alpha: 0.0, beta: 0.0 });
                let lead = strauss(d) - p;
                prop_assume!(lead.abs() > 1e-9);
                prop_assert_eq!(gap > 0.0, lead > 0.0);
                prop_assert_eq!(lower_exponent(d, p) <= upper_exponent(d, p), p >= strauss(d));
            }
        }
    }
}
