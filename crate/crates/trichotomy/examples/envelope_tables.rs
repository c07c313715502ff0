//! Export envelope tables for plotting: anchor, raw value, monotone hull.
//!
//! ```bash
//! cargo run --example envelope_tables -- /tmp/envelopes
//! ```

use std::path::PathBuf;

use trichotomy::builders::build_example2;
use trichotomy::certificates::{check_h_trichotomy, AnchorConvention};
use trichotomy::grid::DeltaGrid;
use trichotomy::rates::RateQuadruple;
use trichotomy::report::write_certificate_tables;
use trichotomy::OrthogonalTriple;

fn main() -> trichotomy::Result<()> {
    let dir: PathBuf = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| "envelope-tables".into());
    let rates = RateQuadruple::exponential([1.0; 4])?;
    let triple = OrthogonalTriple::coordinate(3, [1, 1, 1])?;
    let pair = build_example2(&rates, &triple)?.compatible_pair();
    let grid = DeltaGrid::uniform(10.0, 4)?;

    let report = check_h_trichotomy(&pair, &rates, &grid, AnchorConvention::AsPrinted, 1e6)?;
    let paths = write_certificate_tables(&dir, "example2_trichotomy", &report)?;
    println!("wrote {} tables:", paths.len());
    for p in paths {
        println!("  {}", p.display());
    }
    println!("columns: anchor, raw, hull; the unstable hull grows like exp(3t).");
    Ok(())
}
