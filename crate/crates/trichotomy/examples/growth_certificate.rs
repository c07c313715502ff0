//! Decide the four growth inequalities for the two reference operators.
//!
//! ```bash
//! cargo run --example growth_certificate
//! ```

use trichotomy::builders::{build_example1, build_example2, FirstBlockVariant};
use trichotomy::certificates::{check_h_growth, uniformity_constant, AnchorConvention};
use trichotomy::grid::DeltaGrid;
use trichotomy::rates::RateQuadruple;
use trichotomy::OrthogonalTriple;

fn main() -> trichotomy::Result<()> {
    let triple = OrthogonalTriple::coordinate(3, [1, 1, 1])?;
    let grid = DeltaGrid::uniform(10.0, 2)?;

    let rates1 = RateQuadruple::exponential([1.0, 2.0, 1.0, 1.0])?;
    let pair1 = build_example1(&rates1, &triple, FirstBlockVariant::Consistent)?.compatible_pair();
    let rates2 = RateQuadruple::exponential([1.0; 4])?;
    let pair2 = build_example2(&rates2, &triple)?.compatible_pair();

    for (label, pair, rates) in [
        ("first operator", &pair1, &rates1),
        ("second operator", &pair2, &rates2),
    ] {
        println!("== {label} ==");
        for anchor in [AnchorConvention::AsPrinted, AnchorConvention::AllAtS] {
            let report = check_h_growth(pair, rates, &grid, anchor, 1e6)?;
            print!("  anchor {anchor}: {:?}", report.overall);
            if let Some(c) = uniformity_constant(&report) {
                print!(" with constant {c:.6}");
            }
            println!();
            for e in &report.envelopes {
                println!(
                    "    {}: {:?}, hull max {:.4e}, witness ratio {:.4e} at (t, s) = ({}, {})",
                    e.inequality.label(),
                    e.verdict,
                    e.hull_max(),
                    e.witness.ratio,
                    e.witness.t,
                    e.witness.s
                );
            }
        }
    }
    Ok(())
}
