//! Run both legs of the equivalence between the trichotomy certificate and
//! the measured candidate function: construction (envelopes dominated by
//! twice the certificate hull, norm equivalence by four times the growth
//! hull) and the converse (certificate ratios dominated by the squared
//! measured envelope).
//!
//! ```bash
//! cargo run --example theorem_roundtrip
//! ```

use trichotomy::builders::build_example2;
use trichotomy::certificates::AnchorConvention;
use trichotomy::grid::DeltaGrid;
use trichotomy::lyapunov::{equivalence_roundtrip, ConditionVariant, LyapunovParams};
use trichotomy::rates::RateQuadruple;
use trichotomy::sampling::XSamplePolicy;
use trichotomy::OrthogonalTriple;

fn main() -> trichotomy::Result<()> {
    let rates = RateQuadruple::exponential([1.0; 4])?;
    let triple = OrthogonalTriple::coordinate(3, [1, 1, 1])?;
    let pair = build_example2(&rates, &triple)?.compatible_pair();
    let grid = DeltaGrid::uniform(6.0, 2)?;
    let samples = XSamplePolicy::default().build(&pair)?;

    let report = equivalence_roundtrip(
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

    println!(
        "certificates: growth {:?}, trichotomy {:?}",
        report.growth.overall, report.trichotomy.overall
    );
    match &report.necessity {
        Some(leg) => {
            println!("construction leg (slack {}):", leg.slack);
            println!("  condition envelopes vs 2N: {:?}", leg.cond_vs_2n);
            println!("  norm envelope vs 4M: {:?}", leg.l0_vs_4m);
            println!("  pass: {}", leg.pass);
        }
        None => println!("construction leg skipped: {:?}", report.notes),
    }
    if let Some(leg) = &report.sufficiency {
        println!("converse leg (slack {}):", leg.slack);
        println!("  trichotomy hulls vs T^2: {:?}", leg.tri_vs_t_sq);
        println!("  pass: {}", leg.pass);
    }
    println!("round-trip passed: {}", report.passed);
    Ok(())
}
