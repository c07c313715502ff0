//! Block-rate operator builders: the two built-in reference operators, the
//! two-projector dichotomy case, and seeded random instances for testing.
//!
//! A block-rate operator acts as a scalar coefficient on each range of a
//! constant orthogonal triple. Coefficients are balanced products of rate
//! quotients, so the composition law holds exactly and the restricted
//! inverses are the reciprocal coefficients by construction.

use std::ops::RangeInclusive;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    spectral_norm, CoeffFn, CompatiblePair, EvolutionFamily, OrthogonalTriple, ProjectorFamily,
    Tolerances,
};
use crate::error::{Error, Result};
use crate::rates::{GrowthRate, RateQuadruple};

/// A balanced product of rate quotients: f(t, s) = prod_i (h_i(t)/h_i(s))^p_i.
///
/// Balance (the exponent at t equals the negated exponent at s, per rate) is
/// what makes f(t, s) f(s, t0) = f(t, t0) hold exactly; unbalanced exponent
/// tables are rejected rather than checked numerically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateExpression {
    pub exponents: [i32; 4],
}

impl RateExpression {
    /// Expression from the quotient exponents directly.
    pub fn balanced(exponents: [i32; 4]) -> Self {
        Self { exponents }
    }

    /// Expression from separate exponents at t and at s; rejects tables where
    /// the s exponent is not the negated t exponent.
    pub fn from_powers(t_powers: [i32; 4], s_powers: [i32; 4]) -> Result<Self> {
        for i in 0..4 {
            if t_powers[i] != -s_powers[i] {
                return Err(Error::UnbalancedExpression(i + 1));
            }
        }
        Ok(Self {
            exponents: t_powers,
        })
    }

    /// The identically-1 coefficient.
    pub fn one() -> Self {
        Self { exponents: [0; 4] }
    }

    pub fn reciprocal(&self) -> Self {
        let mut e = self.exponents;
        for v in &mut e {
            *v = -*v;
        }
        Self { exponents: e }
    }

    /// Evaluate the coefficient; callers guarantee t, s >= 0.
    pub fn coefficient(&self, rates: &RateQuadruple, t: f64, s: f64) -> f64 {
        let mut out = 1.0;
        for (i, &p) in self.exponents.iter().enumerate() {
            if p != 0 {
                let h = rates.rate(i as u8 + 1);
                out *= (h.value(t) / h.value(s)).powi(p);
            }
        }
        out
    }

    /// Checked evaluation.
    pub fn eval(&self, rates: &RateQuadruple, t: f64, s: f64) -> Result<f64> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidTime(t));
        }
        if !s.is_finite() || s < 0.0 {
            return Err(Error::InvalidTime(s));
        }
        Ok(self.coefficient(rates, t, s))
    }
}

/// Evolution operator acting as three scalar coefficients on the ranges of a
/// constant orthogonal triple.
#[derive(Clone)]
pub struct BlockRateOperator {
    triple: OrthogonalTriple,
    matrices: Arc<[DMatrix<f64>; 3]>,
    expressions: [RateExpression; 3],
    rates: RateQuadruple,
}

impl BlockRateOperator {
    /// The triple must consist of constant projector matrices.
    pub fn new(
        triple: OrthogonalTriple,
        expressions: [RateExpression; 3],
        rates: RateQuadruple,
    ) -> Result<Self> {
        let matrices = [
            triple
                .p(1)
                .constant_matrix()
                .ok_or_else(|| Error::Scenario("block operators need a constant triple".into()))?
                .clone(),
            triple.p(2).constant_matrix().unwrap().clone(),
            triple.p(3).constant_matrix().unwrap().clone(),
        ];
        Ok(Self {
            triple,
            matrices: Arc::new(matrices),
            expressions,
            rates,
        })
    }

    pub fn dimension(&self) -> usize {
        self.triple.dimension()
    }

    pub fn triple(&self) -> &OrthogonalTriple {
        &self.triple
    }

    pub fn expressions(&self) -> &[RateExpression; 3] {
        &self.expressions
    }

    pub fn rates(&self) -> &RateQuadruple {
        &self.rates
    }

    /// The block coefficients at (t, s).
    pub fn coefficients(&self, t: f64, s: f64) -> Result<[f64; 3]> {
        Ok([
            self.expressions[0].eval(&self.rates, t, s)?,
            self.expressions[1].eval(&self.rates, t, s)?,
            self.expressions[2].eval(&self.rates, t, s)?,
        ])
    }

    fn coeff_fn(&self, block: usize) -> CoeffFn {
        let expr = self.expressions[block];
        let rates = self.rates.clone();
        Arc::new(move |t, s| expr.coefficient(&rates, t, s))
    }

    fn inverse_coeff_fn(&self, block: usize) -> CoeffFn {
        let expr = self.expressions[block].reciprocal();
        let rates = self.rates.clone();
        Arc::new(move |t, s| expr.coefficient(&rates, t, s))
    }

    pub fn evolution(&self) -> EvolutionFamily {
        EvolutionFamily::block_rate(
            (*self.matrices).clone(),
            [self.coeff_fn(0), self.coeff_fn(1), self.coeff_fn(2)],
        )
        .expect("projector matrices validated at construction")
    }

    /// Pair with exact reciprocal inverses on the unstable and central ranges.
    pub fn compatible_pair(&self) -> CompatiblePair {
        self.compatible_pair_with_eps(Tolerances::default().eps_rank)
    }

    pub fn compatible_pair_with_eps(&self, eps_rank: f64) -> CompatiblePair {
        CompatiblePair::with_closed_inverses(
            self.evolution(),
            self.triple.clone(),
            self.inverse_coeff_fn(1),
            self.inverse_coeff_fn(2),
            eps_rank,
        )
        .expect("dimensions validated at construction")
    }
}

/// Which first-block coefficient the first reference operator uses.
///
/// The squared quotient is the printed form; the plain quotient is the form
/// consistent with the operator's own uniform-growth bound. Both are kept so
/// the discrepancy stays reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FirstBlockVariant {
    #[default]
    Consistent,
    Verbatim,
}

/// First reference operator:
/// U(t,s) = f1 P1 + (h2(s)/h2(t)) P2 + (h3(t) h4(s) / (h3(s) h4(t))) P3,
/// with f1 = h1(t)/h1(s) (consistent) or h1(t)^2/h1(s)^2 (verbatim).
pub fn build_example1(
    rates: &RateQuadruple,
    triple: &OrthogonalTriple,
    variant: FirstBlockVariant,
) -> Result<BlockRateOperator> {
    let f1 = match variant {
        FirstBlockVariant::Consistent => RateExpression::balanced([1, 0, 0, 0]),
        FirstBlockVariant::Verbatim => RateExpression::balanced([2, 0, 0, 0]),
    };
    let f2 = RateExpression::balanced([0, -1, 0, 0]);
    let f3 = RateExpression::balanced([0, 0, 1, -1]);
    BlockRateOperator::new(triple.clone(), [f1, f2, f3], rates.clone())
}

/// Second reference operator:
/// U(t,s) = (h1(s)^2/h1(t)^2) P1 + (h2(s)^2/h2(t)^2) P2
///        + (h2(s)^3 h3(t) h4(s) / (h2(t)^3 h3(s) h4(t))) P3.
pub fn build_example2(
    rates: &RateQuadruple,
    triple: &OrthogonalTriple,
) -> Result<BlockRateOperator> {
    let f1 = RateExpression::balanced([-2, 0, 0, 0]);
    let f2 = RateExpression::balanced([0, -2, 0, 0]);
    let f3 = RateExpression::balanced([0, -3, 1, -1]);
    BlockRateOperator::new(triple.clone(), [f1, f2, f3], rates.clone())
}

const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Two-projector operator with an empty central direction.
pub fn build_dichotomy(
    rates: &RateQuadruple,
    p1: ProjectorFamily,
    p2: ProjectorFamily,
    f1: RateExpression,
    f2: RateExpression,
) -> Result<BlockRateOperator> {
    let (m1, m2) = match (p1.constant_matrix(), p2.constant_matrix()) {
        (Some(a), Some(b)) => (a.clone(), b.clone()),
        _ => {
            return Err(Error::Scenario(
                "dichotomy builder needs constant projectors".into(),
            ))
        }
    };
    if m1.nrows() != m2.nrows() {
        return Err(Error::DimensionMismatch(
            "projectors must share one dimension".into(),
        ));
    }
    let n = m1.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let sum_defect = spectral_norm(&(&m1 + &m2 - eye));
    if sum_defect > ORTHOGONALITY_TOL {
        return Err(Error::OrthogonalityViolation(format!(
            "P1 + P2 differs from the identity by {sum_defect:.3e}"
        )));
    }
    let cross = spectral_norm(&(&m1 * &m2)).max(spectral_norm(&(&m2 * &m1)));
    if cross > ORTHOGONALITY_TOL {
        return Err(Error::OrthogonalityViolation(format!(
            "P1 P2 differs from zero by {cross:.3e}"
        )));
    }
    let triple = OrthogonalTriple::constant([m1, m2, DMatrix::zeros(n, n)])?;
    BlockRateOperator::new(triple, [f1, f2, RateExpression::one()], rates.clone())
}

/// Knobs for the seeded random operator generator.
#[derive(Debug, Clone, Copy)]
pub struct RandomOpOptions {
    /// Bias exponents so the decay inequalities hold and the trichotomy
    /// certificate is expected to pass.
    pub trichotomy_friendly: bool,
    /// Allow zero-rank blocks (beyond what small dimensions force).
    pub allow_rank_zero: bool,
}

fn random_rate(rng: &mut impl Rng) -> GrowthRate {
    if rng.random_bool(0.5) {
        GrowthRate::exponential(rng.random_range(0.3..1.2)).unwrap()
    } else {
        GrowthRate::polynomial(rng.random_range(0.5..2.0)).unwrap()
    }
}

fn random_ranks(rng: &mut impl Rng, dim: usize, allow_rank_zero: bool) -> [usize; 3] {
    if allow_rank_zero {
        loop {
            let r1 = rng.random_range(0..=dim);
            let r2 = rng.random_range(0..=dim - r1);
            let r3 = dim - r1 - r2;
            if r1 + r2 + r3 == dim {
                return [r1, r2, r3];
            }
        }
    } else if dim >= 3 {
        let r1 = rng.random_range(1..=dim - 2);
        let r2 = rng.random_range(1..=dim - r1 - 1);
        [r1, r2, dim - r1 - r2]
    } else {
        [1, dim - 1, 0]
    }
}

/// Random balanced block-rate operator over a coordinate triple.
pub fn random_block_rate(
    rng: &mut impl Rng,
    dims: RangeInclusive<usize>,
    options: RandomOpOptions,
) -> Result<BlockRateOperator> {
    let dim = rng.random_range(dims);
    let ranks = random_ranks(rng, dim, options.allow_rank_zero);
    let triple = OrthogonalTriple::coordinate(dim, ranks)?;
    let rates = RateQuadruple::new(
        random_rate(rng),
        random_rate(rng),
        random_rate(rng),
        random_rate(rng),
    );

    let exprs = if options.trichotomy_friendly {
        // Stable block decays at least as fast as h1; extra factors only decay.
        let mut f1 = [0i32; 4];
        f1[0] = -rng.random_range(1..=2);
        if rng.random_bool(0.3) {
            let k = rng.random_range(1..4);
            f1[k] = -1;
        }
        // Unstable block: any balanced shape works for the certificate.
        let mut f2 = [0i32; 4];
        f2[1] = *[-2, -1, 1].get(rng.random_range(0..3)).unwrap();
        if rng.random_bool(0.3) {
            f2[3] = rng.random_range(-1..=1);
        }
        // Central block: bounded two-sided control.
        let mut f3 = [0i32; 4];
        f3[2] = rng.random_range(0..=1);
        f3[3] = -rng.random_range(1..=2);
        if rng.random_bool(0.4) {
            f3[1] = -rng.random_range(0..=3);
        }
        [f1, f2, f3]
    } else {
        let mut draw = || {
            let mut e = [0i32; 4];
            for v in &mut e {
                if rng.random_bool(0.6) {
                    *v = rng.random_range(-2..=2);
                }
            }
            e
        };
        [draw(), draw(), draw()]
    };

    BlockRateOperator::new(
        triple,
        [
            RateExpression::balanced(exprs[0]),
            RateExpression::balanced(exprs[1]),
            RateExpression::balanced(exprs[2]),
        ],
        rates,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn all_exp(alpha: [f64; 4]) -> RateQuadruple {
        RateQuadruple::exponential(alpha).unwrap()
    }

    fn unit_triple() -> OrthogonalTriple {
        OrthogonalTriple::coordinate(3, [1, 1, 1]).unwrap()
    }

    #[test]
    fn example1_consistent_coefficients() {
        let op = build_example1(
            &all_exp([1.0; 4]),
            &unit_triple(),
            FirstBlockVariant::Consistent,
        )
        .unwrap();
        let c = op.coefficients(1.0, 0.0).unwrap();
        assert_relative_eq!(c[0], 1.0_f64.exp(), max_relative = 1e-14);
        assert_relative_eq!(c[1], (-1.0_f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(c[2], 1.0, max_relative = 1e-14);
    }

    #[test]
    fn example1_verbatim_squares_the_first_block() {
        let op = build_example1(
            &all_exp([1.0; 4]),
            &unit_triple(),
            FirstBlockVariant::Verbatim,
        )
        .unwrap();
        let c = op.coefficients(1.0, 0.0).unwrap();
        assert_relative_eq!(c[0], 2.0_f64.exp(), max_relative = 1e-14);
        assert_relative_eq!(c[1], (-1.0_f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(c[2], 1.0, max_relative = 1e-14);
    }

    #[test]
    fn equal_times_give_the_identity() {
        let op = build_example1(
            &all_exp([1.0; 4]),
            &unit_triple(),
            FirstBlockVariant::Consistent,
        )
        .unwrap();
        let c = op.coefficients(2.5, 2.5).unwrap();
        assert_eq!(c, [1.0, 1.0, 1.0]);
        let u = op.evolution().at(2.5, 2.5).unwrap();
        assert_eq!(spectral_norm(&(u - DMatrix::<f64>::identity(3, 3))), 0.0);
    }

    #[test]
    fn example2_coefficients() {
        let op = build_example2(&all_exp([1.0; 4]), &unit_triple()).unwrap();
        let c = op.coefficients(1.0, 0.0).unwrap();
        assert_relative_eq!(c[0], (-2.0_f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(c[1], (-2.0_f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(c[2], (-3.0_f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn example2_with_faster_unstable_rate() {
        let op = build_example2(&all_exp([1.0, 2.0, 1.0, 1.0]), &unit_triple()).unwrap();
        let c = op.coefficients(2.0, 1.0).unwrap();
        assert_relative_eq!(c[1], (-4.0_f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn unbalanced_tables_are_rejected() {
        let err = RateExpression::from_powers([1, 0, 0, 0], [-1, 1, 0, 0]).unwrap_err();
        assert!(matches!(err, Error::UnbalancedExpression(2)));
    }

    #[test]
    fn balanced_tables_compose_exactly() {
        let expr = RateExpression::from_powers([2, -1, 0, 1], [-2, 1, 0, -1]).unwrap();
        let rates = all_exp([0.7, 1.3, 1.0, 0.4]);
        let whole = expr.eval(&rates, 5.0, 1.0).unwrap();
        let split = expr.eval(&rates, 5.0, 3.0).unwrap() * expr.eval(&rates, 3.0, 1.0).unwrap();
        assert_relative_eq!(whole, split, max_relative = 1e-12);
    }

    #[test]
    fn dichotomy_rejects_non_orthogonal_projectors() {
        let rates = all_exp([1.0; 4]);
        let p1 = ProjectorFamily::coordinate(2, 0, 1).unwrap();
        let bad = ProjectorFamily::coordinate(2, 0, 1).unwrap(); // same block: sum != I
        let result = build_dichotomy(
            &rates,
            p1,
            bad,
            RateExpression::balanced([-1, 0, 0, 0]),
            RateExpression::balanced([0, 1, 0, 0]),
        );
        let Err(err) = result else {
            panic!("expected orthogonality violation")
        };
        assert!(matches!(err, Error::OrthogonalityViolation(_)));
    }

    #[test]
    fn dichotomy_builder_produces_zero_central_block() {
        let rates = all_exp([1.0; 4]);
        let p1 = ProjectorFamily::coordinate(3, 0, 1).unwrap();
        let p2 = ProjectorFamily::coordinate(3, 1, 2).unwrap();
        let op = build_dichotomy(
            &rates,
            p1,
            p2,
            RateExpression::balanced([-1, 0, 0, 0]),
            RateExpression::balanced([0, 1, 0, 0]),
        )
        .unwrap();
        assert_eq!(spectral_norm(&op.triple().p(3).at(0.0)), 0.0);
    }
}
