//! Scenario files: a versioned JSON description of one certification run.
//! Reports echo the resolved scenario so every run is reproducible from its
//! own output.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::algebra::{CompatiblePair, OrthogonalTriple, Tolerances};
use crate::builders::{
    build_dichotomy, build_example1, build_example2, BlockRateOperator, FirstBlockVariant,
    RateExpression,
};
use crate::certificates::AnchorConvention;
use crate::error::{Error, Result};
use crate::grid::{DeltaGrid, SRule, TimeGrid};
use crate::lyapunov::{ConditionVariant, LyapunovParams};
use crate::rates::{GrowthRate, RateQuadruple};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub dimension: usize,
    pub rates: RatesDecl,
    pub triple: TripleDecl,
    pub operator: OperatorDecl,
    #[serde(default)]
    pub grid: GridDecl,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_div_threshold")]
    pub div_threshold: f64,
    /// When absent, certificate subcommands evaluate both conventions.
    #[serde(default)]
    pub anchor: Option<AnchorConvention>,
    #[serde(default)]
    pub def9_variant: ConditionVariant,
    #[serde(default)]
    pub eq1_variant: FirstBlockVariant,
    #[serde(default)]
    pub lyapunov: LyapunovParams,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_random_samples")]
    pub random_unit_samples: usize,
    #[serde(default)]
    pub output_dir: Option<String>,
}

fn default_div_threshold() -> f64 {
    crate::certificates::DEFAULT_DIVERGENCE_THRESHOLD
}

fn default_random_samples() -> usize {
    32
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesDecl {
    pub h1: GrowthRate,
    pub h2: GrowthRate,
    pub h3: GrowthRate,
    pub h4: GrowthRate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TripleDecl {
    /// Coordinate triple with consecutive blocks of the given ranks.
    Coordinate { ranks: [usize; 3] },
    /// Constant matrices, row-major.
    Constant {
        p1: Vec<Vec<f64>>,
        p2: Vec<Vec<f64>>,
        p3: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorDecl {
    /// One of: example1, example1-consistent, example1-verbatim, example2,
    /// dichotomy.
    Builtin { name: String },
    /// Generic block operator from balanced exponent tables.
    BlockRate { exponents: ExponentTables },
    /// Reserved for embedding; rejected in batch runs.
    Callback {},
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentTables {
    pub f1: [i32; 4],
    pub f2: [i32; 4],
    pub f3: [i32; 4],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDecl {
    pub t_max: f64,
    pub points_per_unit: u32,
    #[serde(default)]
    pub s_rule: SRule,
}

impl Default for GridDecl {
    fn default() -> Self {
        Self {
            t_max: 10.0,
            points_per_unit: 4,
            s_rule: SRule::AllPairs,
        }
    }
}

/// Everything a run needs, resolved from the declaration.
pub struct ResolvedScenario {
    pub pair: CompatiblePair,
    pub rates: RateQuadruple,
    pub triple: OrthogonalTriple,
    pub grid: DeltaGrid,
    pub operator_label: String,
    pub block_operator: Option<BlockRateOperator>,
}

fn matrix_from_rows(name: &str, rows: &[Vec<f64>], dim: usize) -> Result<DMatrix<f64>> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Scenario(format!(
            "triple.{name} must be a {dim}x{dim} row-major matrix"
        )));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(dim, dim, &flat))
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Scenario(format!("cannot read scenario {}: {e}", path.display()))
        })?;
        let scenario: Scenario = serde_json::from_str(&text)
            .map_err(|e| Error::Scenario(format!("cannot parse scenario: {e}")))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Scenario(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.dimension == 0 {
            return Err(Error::Scenario("dimension must be at least 1".into()));
        }
        if self.grid.t_max <= 0.0 || !self.grid.t_max.is_finite() || self.grid.points_per_unit == 0
        {
            return Err(Error::Scenario(
                "grid.t_max must be positive and grid.points_per_unit nonzero".into(),
            ));
        }
        if self.div_threshold <= 0.0 || self.div_threshold.is_nan() {
            return Err(Error::Scenario("div_threshold must be positive".into()));
        }
        let t = &self.tolerances;
        let tolerances_ok =
            t.eps_struct > 0.0 && t.eps_coc > 0.0 && t.eps_inv > 0.0 && t.eps_rank > 0.0;
        if !tolerances_ok {
            return Err(Error::Scenario("tolerances must all be positive".into()));
        }
        self.lyapunov.validate()?;
        if let TripleDecl::Coordinate { ranks } = &self.triple {
            if ranks.iter().sum::<usize>() != self.dimension {
                return Err(Error::Scenario(format!(
                    "triple.ranks {ranks:?} must sum to dimension {}",
                    self.dimension
                )));
            }
        }
        if let OperatorDecl::Builtin { name } = &self.operator {
            let known = [
                "example1",
                "example1-consistent",
                "example1-verbatim",
                "example2",
                "dichotomy",
            ];
            if !known.contains(&name.as_str()) {
                return Err(Error::Scenario(format!(
                    "operator.name '{name}' is not a builtin (known: {})",
                    known.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn resolved_rates(&self) -> RateQuadruple {
        RateQuadruple::new(
            self.rates.h1.clone(),
            self.rates.h2.clone(),
            self.rates.h3.clone(),
            self.rates.h4.clone(),
        )
    }

    pub fn resolved_triple(&self) -> Result<OrthogonalTriple> {
        match &self.triple {
            TripleDecl::Coordinate { ranks } => {
                OrthogonalTriple::coordinate(self.dimension, *ranks)
            }
            TripleDecl::Constant { p1, p2, p3 } => OrthogonalTriple::constant([
                matrix_from_rows("p1", p1, self.dimension)?,
                matrix_from_rows("p2", p2, self.dimension)?,
                matrix_from_rows("p3", p3, self.dimension)?,
            ]),
        }
    }

    pub fn resolved_grid(&self) -> Result<DeltaGrid> {
        Ok(DeltaGrid::new(
            TimeGrid::uniform(self.grid.t_max, self.grid.points_per_unit)?,
            self.grid.s_rule,
        ))
    }

    pub fn resolve(&self) -> Result<ResolvedScenario> {
        let rates = self.resolved_rates();
        let triple = self.resolved_triple()?;
        let grid = self.resolved_grid()?;
        let (op, label): (BlockRateOperator, String) = match &self.operator {
            OperatorDecl::Builtin { name } => {
                let (op, label) = match name.as_str() {
                    "example1" => {
                        let op = build_example1(&rates, &triple, self.eq1_variant)?;
                        (
                            op,
                            format!("example1-{:?}", self.eq1_variant).to_lowercase(),
                        )
                    }
                    "example1-consistent" => (
                        build_example1(&rates, &triple, FirstBlockVariant::Consistent)?,
                        "example1-consistent".to_string(),
                    ),
                    "example1-verbatim" => (
                        build_example1(&rates, &triple, FirstBlockVariant::Verbatim)?,
                        "example1-verbatim".to_string(),
                    ),
                    "example2" => (build_example2(&rates, &triple)?, "example2".to_string()),
                    "dichotomy" => {
                        let op = build_dichotomy(
                            &rates,
                            triple.p(1).clone(),
                            triple.p(2).clone(),
                            RateExpression::balanced([-1, 0, 0, 0]),
                            RateExpression::balanced([0, 1, 0, 0]),
                        )?;
                        (op, "dichotomy".to_string())
                    }
                    _ => unreachable!("validated"),
                };
                (op, label)
            }
            OperatorDecl::BlockRate { exponents } => {
                let op = BlockRateOperator::new(
                    triple.clone(),
                    [
                        RateExpression::balanced(exponents.f1),
                        RateExpression::balanced(exponents.f2),
                        RateExpression::balanced(exponents.f3),
                    ],
                    rates.clone(),
                )?;
                (op, "block-rate".to_string())
            }
            OperatorDecl::Callback {} => {
                return Err(Error::Scenario(
                    "operator.form 'callback' is not available in batch runs".into(),
                ))
            }
        };
        let pair = op.compatible_pair_with_eps(self.tolerances.eps_rank);
        Ok(ResolvedScenario {
            pair,
            rates,
            triple,
            grid,
            operator_label: label,
            block_operator: Some(op),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json() -> serde_json::Value {
        serde_json::json!({
            "schema_version": 1,
            "dimension": 3,
            "rates": {
                "h1": {"kind": "exponential", "alpha": 1.0},
                "h2": {"kind": "exponential", "alpha": 2.0},
                "h3": {"kind": "exponential", "alpha": 1.0},
                "h4": {"kind": "exponential", "alpha": 1.0}
            },
            "triple": {"kind": "coordinate", "ranks": [1, 1, 1]},
            "operator": {"form": "builtin", "name": "example1-consistent"}
        })
    }

    #[test]
    fn minimal_scenario_parses_with_defaults() {
        let s: Scenario = serde_json::from_value(minimal_json()).unwrap();
        s.validate().unwrap();
        assert_eq!(s.grid.t_max, 10.0);
        assert_eq!(s.div_threshold, 1e6);
        assert!(s.anchor.is_none());
        let resolved = s.resolve().unwrap();
        assert_eq!(resolved.pair.dimension(), 3);
        assert_eq!(resolved.operator_label, "example1-consistent");
    }

    #[test]
    fn callback_operator_is_rejected() {
        let mut v = minimal_json();
        v["operator"] = serde_json::json!({"form": "callback"});
        let s: Scenario = serde_json::from_value(v).unwrap();
        let Err(err) = s.resolve() else {
            panic!("expected rejection")
        };
        assert!(err.to_string().contains("callback"));
    }

    #[test]
    fn bad_ranks_name_the_field() {
        let mut v = minimal_json();
        v["triple"] = serde_json::json!({"kind": "coordinate", "ranks": [1, 1, 2]});
        let s: Scenario = serde_json::from_value(v).unwrap();
        let err = s.validate().unwrap_err();
        assert!(err.to_string().contains("triple.ranks"), "{err}");
    }

    #[test]
    fn unknown_builtin_is_rejected() {
        let mut v = minimal_json();
        v["operator"] = serde_json::json!({"form": "builtin", "name": "mystery"});
        let s: Scenario = serde_json::from_value(v).unwrap();
        assert!(s.validate().is_err());
    }

    #[test]
    fn constant_triple_shape_is_checked() {
        let mut v = minimal_json();
        v["triple"] = serde_json::json!({
            "kind": "constant",
            "p1": [[1.0, 0.0], [0.0, 0.0]],
            "p2": [[0.0, 0.0], [0.0, 1.0]],
            "p3": [[0.0, 0.0], [0.0, 0.0]]
        });
        let s: Scenario = serde_json::from_value(v).unwrap();
        s.validate().unwrap();
        // dimension says 3 but matrices are 2x2
        assert!(matches!(s.resolve(), Err(Error::Scenario(_))));
    }
}
