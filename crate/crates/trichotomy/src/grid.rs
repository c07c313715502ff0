//! Time grids and their restriction to the domain t >= s >= 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing, nonnegative evaluation times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::InvalidTime(
                *times.iter().find(|t| !t.is_finite() || **t < 0.0).unwrap(),
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Scenario(
                "grid times must be strictly increasing".into(),
            ));
        }
        Ok(Self { times })
    }

    /// Uniform grid 0, 1/ppu, 2/ppu, ..., t_max.
    pub fn uniform(t_max: f64, points_per_unit: u32) -> Result<Self> {
        if !t_max.is_finite() || t_max <= 0.0 || points_per_unit == 0 {
            return Err(Error::Scenario(format!(
                "uniform grid needs t_max > 0 and points_per_unit > 0, got {t_max}, {points_per_unit}"
            )));
        }
        let n = (t_max * f64::from(points_per_unit)).round() as usize;
        let step = 1.0 / f64::from(points_per_unit);
        let times = (0..=n).map(|k| k as f64 * step).collect();
        Self::from_times(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_t(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Extension to twice the time span, continuing the trailing step width.
    /// Used by the divergence probe.
    pub fn extended_doubled(&self) -> TimeGrid {
        let mut times = self.times.clone();
        let step = if self.times.len() >= 2 {
            self.times[self.times.len() - 1] - self.times[self.times.len() - 2]
        } else {
            1.0
        };
        let target = self.max_t().max(step) * 2.0;
        let mut t = self.max_t();
        while t < target - step * 0.5 {
            t += step;
            times.push(t);
        }
        TimeGrid { times }
    }
}

/// How the s variable ranges relative to t.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SRule {
    /// Every ordered pair of grid times with t >= s.
    #[default]
    AllPairs,
    /// Only pairs (t, 0); mirrors arguments that pin the start time.
    OriginOnly,
}

/// A sample of the domain t >= s >= 0 built from a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaGrid {
    pub times: TimeGrid,
    pub s_rule: SRule,
}

impl DeltaGrid {
    pub fn new(times: TimeGrid, s_rule: SRule) -> Self {
        Self { times, s_rule }
    }

    pub fn uniform(t_max: f64, points_per_unit: u32) -> Result<Self> {
        Ok(Self::new(
            TimeGrid::uniform(t_max, points_per_unit)?,
            SRule::AllPairs,
        ))
    }

    /// Index pairs (i_t, i_s) with times[i_t] >= times[i_s].
    pub fn index_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.times.len();
        match self.s_rule {
            SRule::AllPairs => {
                let mut out = Vec::with_capacity(n * (n + 1) / 2);
                for it in 0..n {
                    for is in 0..=it {
                        out.push((it, is));
                    }
                }
                out
            }
            SRule::OriginOnly => (0..n).map(|it| (it, 0)).collect(),
        }
    }

    pub fn pairs(&self) -> Vec<(f64, f64)> {
        let t = self.times.times();
        self.index_pairs()
            .into_iter()
            .map(|(it, is)| (t[it], t[is]))
            .collect()
    }

    /// Chains t >= s >= t0 for cocycle-style checks.
    pub fn chains(&self) -> Vec<(f64, f64, f64)> {
        let t = self.times.times();
        let n = t.len();
        let mut out = Vec::new();
        match self.s_rule {
            SRule::AllPairs => {
                for i in 0..n {
                    for j in 0..=i {
                        for k in 0..=j {
                            out.push((t[i], t[j], t[k]));
                        }
                    }
                }
            }
            SRule::OriginOnly => {
                for i in 0..n {
                    for j in 0..=i {
                        out.push((t[i], t[j], 0.0));
                    }
                }
            }
        }
        out
    }
}
