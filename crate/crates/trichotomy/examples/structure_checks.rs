//! Verify the structural axioms of an evolution family and the properties of
//! the constructed restricted inverses.
//!
//! ```bash
//! cargo run --example structure_checks
//! ```

use trichotomy::algebra::{check_structure, verify_inverse_construction, Tolerances};
use trichotomy::builders::{build_example1, FirstBlockVariant};
use trichotomy::grid::DeltaGrid;
use trichotomy::rates::RateQuadruple;
use trichotomy::OrthogonalTriple;

fn main() -> trichotomy::Result<()> {
    let rates = RateQuadruple::exponential([1.0, 2.0, 1.0, 1.0])?;
    let triple = OrthogonalTriple::coordinate(3, [1, 1, 1])?;
    let op = build_example1(&rates, &triple, FirstBlockVariant::Consistent)?;
    let grid = DeltaGrid::uniform(10.0, 2)?;
    let tol = Tolerances::default();

    let structure = check_structure(&op.evolution(), op.triple(), &grid, &tol)?;
    println!(
        "structural axioms over {} pairs / {} chains:",
        structure.pairs_checked, structure.chains_checked
    );
    println!("  identity      (e1): {:.3e}", structure.identity_max);
    println!("  composition   (e2): {:.3e}", structure.cocycle_max);
    println!("  partition     (o1): {:.3e}", structure.partition_max);
    println!("  orthogonality (o2): {:.3e}", structure.cross_max);
    println!("  idempotency       : {:.3e}", structure.idempotency_max);
    println!("  invariance    (c1): {:.3e}", structure.invariance_max);
    println!("  projector norms   : {:?}", structure.projector_norm_max);
    println!("  passed: {}", structure.passed);

    let inverses = verify_inverse_construction(&op.evolution(), op.triple(), &grid, &tol)?;
    println!("\nconstructed inverses on the unstable and central ranges:");
    println!("  rank preserved (v1): {}", inverses.rank_preserved);
    println!("  forward inverse (v2): {:.3e}", inverses.v2_max);
    println!("  backward inverse (v3): {:.3e}", inverses.v3_max);
    println!("  composition      (v4): {:.3e}", inverses.v4_max);
    println!("  range alignment  (v5): {:.3e}", inverses.v5_max);
    println!("  identity at t=s  (v6): {:.3e}", inverses.v6_max);
    println!("  passed: {}", inverses.passed);
    Ok(())
}
