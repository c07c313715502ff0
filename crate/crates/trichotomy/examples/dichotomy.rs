//! The two-projector special case: an empty central direction reduces the
//! trichotomy certificate to a dichotomy check, bit for bit.
//!
//! ```bash
//! cargo run --example dichotomy
//! ```

use trichotomy::algebra::ProjectorFamily;
use trichotomy::builders::{build_dichotomy, RateExpression};
use trichotomy::certificates::{check_h_dichotomy, check_h_trichotomy, AnchorConvention};
use trichotomy::grid::DeltaGrid;
use trichotomy::rates::{GrowthRate, RateQuadruple};

fn main() -> trichotomy::Result<()> {
    // polynomial rates with quotient coefficients: a uniform dichotomy
    let rates = RateQuadruple::new(
        GrowthRate::polynomial(1.5)?,
        GrowthRate::polynomial(0.8)?,
        GrowthRate::polynomial(1.0)?,
        GrowthRate::polynomial(1.0)?,
    );
    let p1 = ProjectorFamily::coordinate(3, 0, 1)?;
    let p2 = ProjectorFamily::coordinate(3, 1, 2)?;
    let op = build_dichotomy(
        &rates,
        p1,
        p2,
        RateExpression::balanced([-1, 0, 0, 0]),
        RateExpression::balanced([0, 1, 0, 0]),
    )?;
    let pair = op.compatible_pair();
    let grid = DeltaGrid::uniform(10.0, 2)?;

    let dich = check_h_dichotomy(&pair, &rates, &grid, AnchorConvention::AsPrinted, 1e6)?;
    println!("dichotomy certificate: {:?}", dich.overall);
    println!("  stable   envelope: {:?}", dich.stable.verdict);
    println!("  unstable envelope: {:?}", dich.unstable.verdict);

    let tri = check_h_trichotomy(&pair, &rates, &grid, AnchorConvention::AsPrinted, 1e6)?;
    let bitwise = tri.envelopes[0]
        .raw_values
        .iter()
        .zip(&dich.stable.raw_values)
        .all(|(a, b)| a.to_bits() == b.to_bits())
        && tri.envelopes[1]
            .raw_values
            .iter()
            .zip(&dich.unstable.raw_values)
            .all(|(a, b)| a.to_bits() == b.to_bits());
    println!("trichotomy indices 1-2 match the dichotomy check bitwise: {bitwise}");
    println!(
        "central indices are trivial: hull max {} / {}",
        tri.envelope(3).hull_max(),
        tri.envelope(4).hull_max()
    );
    Ok(())
}
