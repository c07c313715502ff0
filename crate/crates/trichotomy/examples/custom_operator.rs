//! Build a custom block-rate operator from balanced exponent tables and run
//! the full pipeline: structure checks, certificates, round-trip.
//!
//! ```bash
//! cargo run --example custom_operator
//! ```

use trichotomy::algebra::{check_structure, Tolerances};
use trichotomy::builders::{BlockRateOperator, RateExpression};
use trichotomy::certificates::{check_h_growth, check_h_trichotomy, AnchorConvention};
use trichotomy::grid::DeltaGrid;
use trichotomy::lyapunov::{equivalence_roundtrip, ConditionVariant, LyapunovParams};
use trichotomy::rates::{GrowthRate, RateQuadruple};
use trichotomy::sampling::XSamplePolicy;
use trichotomy::OrthogonalTriple;

fn main() -> trichotomy::Result<()> {
    // mixed rate families on a four-dimensional space with a fat unstable range
    let rates = RateQuadruple::new(
        GrowthRate::exponential(0.8)?,
        GrowthRate::exponential(1.2)?,
        GrowthRate::polynomial(1.5)?,
        GrowthRate::polynomial(1.0)?,
    );
    let triple = OrthogonalTriple::coordinate(4, [1, 2, 1])?;
    // stable block decays like 1/h1, unstable grows like h2, central block is
    // controlled by the h3/h4 quotient
    let op = BlockRateOperator::new(
        triple.clone(),
        [
            RateExpression::balanced([-1, 0, 0, 0]),
            RateExpression::balanced([0, 1, 0, 0]),
            RateExpression::balanced([0, 0, 1, -1]),
        ],
        rates.clone(),
    )?;
    let pair = op.compatible_pair();
    let grid = DeltaGrid::uniform(8.0, 2)?;

    let structure = check_structure(&op.evolution(), op.triple(), &grid, &Tolerances::default())?;
    println!(
        "structure passed: {} (composition residual {:.2e})",
        structure.passed, structure.cocycle_max
    );

    for anchor in [AnchorConvention::AsPrinted, AnchorConvention::AllAtS] {
        let g = check_h_growth(&pair, &rates, &grid, anchor, 1e6)?;
        let t = check_h_trichotomy(&pair, &rates, &grid, anchor, 1e6)?;
        println!(
            "anchor {anchor}: growth {:?}, trichotomy {:?}",
            g.overall, t.overall
        );
    }

    let samples = XSamplePolicy {
        random_unit: 16,
        ..Default::default()
    }
    .build(&pair)?;
    let rt = equivalence_roundtrip(
        &pair,
        &rates,
        &grid,
        LyapunovParams::default(),
        &samples,
        ConditionVariant::ProofConsistent,
        AnchorConvention::AsPrinted,
        1e6,
        0.05,
    )?;
    println!("round-trip passed: {}", rt.passed);
    if let (Some(n), Some(s)) = (&rt.necessity, &rt.sufficiency) {
        println!(
            "  construction max ratio vs 2N: {:.4}",
            n.cond_vs_2n.iter().cloned().fold(0.0, f64::max)
        );
        println!(
            "  converse max ratio vs T^2:    {:.4}",
            s.tri_vs_t_sq.iter().cloned().fold(0.0, f64::max)
        );
    }
    Ok(())
}
