//! Growth-rate families: nondecreasing maps h on [0, inf) with values in [1, inf)
//! that diverge at infinity. Exponential and polynomial rates are the canonical
//! families; tabulated rates cover measured or hand-crafted profiles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default threshold for the divergence heuristic.
pub const DEFAULT_DIVERGENCE_THRESHOLD: f64 = 1e6;

/// A growth rate. Evaluation is pure and reentrant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GrowthRate {
    /// h(t) = exp(alpha * t), alpha > 0.
    Exponential { alpha: f64 },
    /// h(t) = (t + 1)^alpha, alpha > 0.
    Polynomial { alpha: f64 },
    /// Piecewise-linear interpolation through (t, value) knots with constant
    /// extrapolation on both sides. Values are clamped below at 1 so the
    /// codomain invariant holds regardless of the data.
    Tabulated { knots: Vec<(f64, f64)> },
}

impl GrowthRate {
    pub fn exponential(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::InvalidRate(format!(
                "exponential rate needs alpha > 0, got {alpha}"
            )));
        }
        Ok(GrowthRate::Exponential { alpha })
    }

    pub fn polynomial(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::InvalidRate(format!(
                "polynomial rate needs alpha > 0, got {alpha}"
            )));
        }
        Ok(GrowthRate::Polynomial { alpha })
    }

    /// Knot abscissae must be finite, nonnegative and strictly increasing.
    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidRate(
                "tabulated rate needs at least one knot".into(),
            ));
        }
        if knots
            .iter()
            .any(|&(t, v)| !t.is_finite() || t < 0.0 || !v.is_finite())
        {
            return Err(Error::InvalidRate(
                "tabulated knots must be finite with t >= 0".into(),
            ));
        }
        for w in knots.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidRate(format!(
                    "tabulated knots must have strictly increasing times ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        Ok(GrowthRate::Tabulated { knots })
    }

    /// Evaluate at t >= 0.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidTime(t));
        }
        Ok(self.value(t))
    }

    /// Evaluation without the domain check; callers guarantee t >= 0.
    pub(crate) fn value(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match self {
            GrowthRate::Exponential { alpha } => (alpha * t).exp(),
            GrowthRate::Polynomial { alpha } => (t + 1.0).powf(*alpha),
            GrowthRate::Tabulated { knots } => {
                let interpolated = if t <= knots[0].0 {
                    knots[0].1
                } else if t >= knots[knots.len() - 1].0 {
                    knots[knots.len() - 1].1
                } else {
                    let hi = knots.partition_point(|&(kt, _)| kt <= t);
                    let (t0, v0) = knots[hi - 1];
                    let (t1, v1) = knots[hi];
                    if t == t0 {
                        v0
                    } else {
                        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
                    }
                };
                interpolated.max(1.0)
            }
        }
    }
}

/// Evaluate a rate at t >= 0; negative or non-finite times are domain errors.
pub fn eval_rate(rate: &GrowthRate, t: f64) -> Result<f64> {
    rate.eval(t)
}

/// The four rates h1..h4 attached to the stable, unstable and central
/// directions of a certification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateQuadruple {
    pub h1: GrowthRate,
    pub h2: GrowthRate,
    pub h3: GrowthRate,
    pub h4: GrowthRate,
}

impl RateQuadruple {
    pub fn new(h1: GrowthRate, h2: GrowthRate, h3: GrowthRate, h4: GrowthRate) -> Self {
        Self { h1, h2, h3, h4 }
    }

    /// All four rates exponential with the given exponents.
    pub fn exponential(alphas: [f64; 4]) -> Result<Self> {
        Ok(Self {
            h1: GrowthRate::exponential(alphas[0])?,
            h2: GrowthRate::exponential(alphas[1])?,
            h3: GrowthRate::exponential(alphas[2])?,
            h4: GrowthRate::exponential(alphas[3])?,
        })
    }

    /// The rate attached to inequality index 1..=4.
    pub fn rate(&self, index: u8) -> &GrowthRate {
        match index {
            1 => &self.h1,
            2 => &self.h2,
            3 => &self.h3,
            4 => &self.h4,
            _ => panic!("rate index must be 1..=4, got {index}"),
        }
    }

    pub fn as_array(&self) -> [&GrowthRate; 4] {
        [&self.h1, &self.h2, &self.h3, &self.h4]
    }
}

/// Outcome of checking the growth-rate axioms on a grid.
///
/// Divergence to infinity is not decidable from samples; the `divergence_ok`
/// field reports a heuristic (h(t_div) > threshold) and is labelled as such in
/// emitted reports. Tabulated rates may fail it and are flagged, not rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateValidation {
    pub lower_bound_ok: bool,
    pub monotone_ok: bool,
    pub divergence_ok: bool,
    pub t_div: f64,
    pub divergence_threshold: f64,
    /// First grid point violating the lower bound or monotonicity, if any.
    pub first_violation: Option<RateViolation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateViolation {
    pub at: f64,
    pub check: String,
}

impl RateValidation {
    pub fn all_pass(&self) -> bool {
        self.lower_bound_ok && self.monotone_ok && self.divergence_ok
    }
}

/// Default horizon for the divergence heuristic: ten times the grid span.
pub fn default_t_div(grid: &[f64]) -> f64 {
    grid.iter().cloned().fold(0.0, f64::max) * 10.0
}

/// Check the lower bound, monotonicity and the divergence heuristic on a grid
/// of evaluation points.
pub fn validate_rate(
    rate: &GrowthRate,
    grid: &[f64],
    t_div: f64,
    divergence_threshold: f64,
) -> Result<RateValidation> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let values: Vec<f64> = grid.iter().map(|&t| rate.eval(t)).collect::<Result<_>>()?;

    let mut first_violation = None;
    let mut lower_bound_ok = true;
    for (&t, &v) in grid.iter().zip(&values) {
        if v < 1.0 {
            lower_bound_ok = false;
            first_violation.get_or_insert(RateViolation {
                at: t,
                check: "lower-bound".into(),
            });
            break;
        }
    }

    let mut monotone_ok = true;
    for i in 1..grid.len() {
        if values[i] < values[i - 1] {
            monotone_ok = false;
            if first_violation.is_none() {
                first_violation = Some(RateViolation {
                    at: grid[i],
                    check: "monotonicity".into(),
                });
            }
            break;
        }
    }

    let divergence_ok = rate.eval(t_div)? > divergence_threshold;

    Ok(RateValidation {
        lower_bound_ok,
        monotone_ok,
        divergence_ok,
        t_div,
        divergence_threshold,
        first_violation,
    })
}
