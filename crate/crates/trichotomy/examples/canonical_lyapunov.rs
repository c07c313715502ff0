//! Build the canonical candidate function for the second reference operator,
//! evaluate it, and verify its norm-equivalence and propagation conditions.
//!
//! ```bash
//! cargo run --example canonical_lyapunov
//! ```

use nalgebra::DVector;
use trichotomy::builders::build_example2;
use trichotomy::certificates::{check_h_growth, check_h_trichotomy, AnchorConvention};
use trichotomy::grid::DeltaGrid;
use trichotomy::lyapunov::{
    verify_lyapunov_conditions, CanonicalLyapunov, ConditionVariant, LyapunovParams,
};
use trichotomy::rates::RateQuadruple;
use trichotomy::sampling::XSamplePolicy;
use trichotomy::OrthogonalTriple;

fn main() -> trichotomy::Result<()> {
    let rates = RateQuadruple::exponential([1.0; 4])?;
    let triple = OrthogonalTriple::coordinate(3, [1, 1, 1])?;
    let pair = build_example2(&rates, &triple)?.compatible_pair();
    let lyap = CanonicalLyapunov::new(&pair, &rates, LyapunovParams::default())?;

    println!("pointwise evaluations:");
    for (label, x, t) in [
        (
            "stable direction, t = 1",
            DVector::from_column_slice(&[1.0, 0.0, 0.0]),
            1.0,
        ),
        (
            "unstable direction, t = 1",
            DVector::from_column_slice(&[0.0, 1.0, 0.0]),
            1.0,
        ),
        (
            "central direction, t = 1",
            DVector::from_column_slice(&[0.0, 0.0, 1.0]),
            1.0,
        ),
        (
            "mixed vector, t = 2",
            DVector::from_column_slice(&[0.5, 0.5, 0.5]),
            2.0,
        ),
    ] {
        let lv = lyap.eval(t, &x)?;
        println!(
            "  L({t}, {label}) = {:.6} (converged: {})",
            lv.value, lv.converged
        );
    }

    let grid = DeltaGrid::uniform(6.0, 2)?;
    let samples = XSamplePolicy::default().build(&pair)?;
    let growth = check_h_growth(&pair, &rates, &grid, AnchorConvention::AsPrinted, 1e6)?;
    let trichotomy = check_h_trichotomy(&pair, &rates, &grid, AnchorConvention::AsPrinted, 1e6)?;
    let report = verify_lyapunov_conditions(
        &lyap,
        &grid,
        &samples,
        ConditionVariant::ProofConsistent,
        AnchorConvention::AsPrinted,
        1e6,
        Some(&growth),
        Some(&trichotomy),
    )?;

    println!("\nnorm equivalence over {} samples:", samples.len());
    println!(
        "  exact lower bound: {} (margin {:.2e})",
        report.l0.lower_bound_ok, report.l0.lower_margin_min
    );
    println!(
        "  envelope T at the last anchor: {:.4e}",
        report.l0.t_hull.last().unwrap()
    );
    if let Some(r) = report.l0.vs_growth_max {
        println!("  max T / (4 x growth hull): {r:.4}");
    }
    println!("propagation conditions ({} variant):", report.variant);
    for c in &report.conditions {
        println!(
            "  condition {}: {:?}, hull max {:.4e}, converged {}",
            c.index,
            c.verdict,
            c.monotone_hull.last().unwrap(),
            c.all_converged
        );
    }
    if let Some(vs) = &report.vs_2n_max {
        println!("  max hull / (2 x trichotomy hull) per condition: {vs:?}");
    }
    println!("passed: {}", report.passed);
    Ok(())
}
