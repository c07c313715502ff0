//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//! Everything runs at dimension 3 (dimensions 2..=5 for the random oracle
//! instances) on the grid t, s in {0, 0.25, ..., 10}.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trichotomy::algebra::{
    check_structure, verify_inverse_construction, OrthogonalTriple, Tolerances,
};
use trichotomy::builders::{
    build_dichotomy, build_example1, build_example2, random_block_rate, BlockRateOperator,
    FirstBlockVariant, RandomOpOptions, RateExpression,
};
use trichotomy::certificates::{
    check_equivalent_forms, check_h_dichotomy, check_h_growth, check_h_trichotomy,
    inequality_ratio, uniformity_constant, AnchorConvention, Concept, Form, InequalityId,
    OverallVerdict,
};
use trichotomy::grid::DeltaGrid;
use trichotomy::lyapunov::{
    equivalence_roundtrip, CanonicalLyapunov, ConditionVariant, LyapunovParams,
    DEFAULT_ROUNDTRIP_SLACK,
};
use trichotomy::rates::RateQuadruple;
use trichotomy::sampling::{random_unit_vector, XSamplePolicy};

const DIV_THRESHOLD: f64 = 1e6;

fn acceptance_grid() -> DeltaGrid {
    DeltaGrid::uniform(10.0, 4).unwrap()
}

fn unit_triple() -> OrthogonalTriple {
    OrthogonalTriple::coordinate(3, [1, 1, 1]).unwrap()
}

fn example1_rates() -> RateQuadruple {
    RateQuadruple::exponential([1.0, 2.0, 1.0, 1.0]).unwrap()
}

fn example2_rates() -> RateQuadruple {
    RateQuadruple::exponential([1.0, 1.0, 1.0, 1.0]).unwrap()
}

fn pass(line: &str) {
    println!("criterion {line}: PASS");
}

#[test]
fn criterion_01_structure_suite() {
    let grid = acceptance_grid();
    let tol = Tolerances::default();
    let cases = [
        (
            "example1",
            build_example1(
                &example1_rates(),
                &unit_triple(),
                FirstBlockVariant::Consistent,
            )
            .unwrap(),
            example1_rates(),
        ),
        (
            "example2",
            build_example2(&example2_rates(), &unit_triple()).unwrap(),
            example2_rates(),
        ),
    ];
    for (label, op, _rates) in &cases {
        let structure = check_structure(&op.evolution(), op.triple(), &grid, &tol).unwrap();
        for (axiom, value) in [
            ("e1", structure.identity_max),
            ("e2", structure.cocycle_max),
            ("o1", structure.partition_max),
            ("o2", structure.cross_max),
            ("idempotency", structure.idempotency_max),
            ("invariance", structure.invariance_max),
        ] {
            assert!(value <= 1e-9, "{label} {axiom} residual {value:.3e} > 1e-9");
        }
        let inverses =
            verify_inverse_construction(&op.evolution(), op.triple(), &grid, &tol).unwrap();
        assert!(
            inverses.rank_preserved,
            "{label}: constructed inverse lost rank"
        );
        for (prop, value) in [
            ("v2", inverses.v2_max),
            ("v3", inverses.v3_max),
            ("v4", inverses.v4_max),
            ("v5", inverses.v5_max),
            ("v6", inverses.v6_max),
        ] {
            assert!(value <= 1e-7, "{label} {prop} residual {value:.3e} > 1e-7");
        }
    }
    pass("01 (structure suite)");
}

#[test]
fn criterion_02_growth_uniform_example1() {
    let rates = example1_rates();
    let pair = build_example1(&rates, &unit_triple(), FirstBlockVariant::Consistent)
        .unwrap()
        .compatible_pair();
    let grid = acceptance_grid();
    for anchor in [AnchorConvention::AsPrinted, AnchorConvention::AllAtS] {
        let report = check_h_growth(&pair, &rates, &grid, anchor, DIV_THRESHOLD).unwrap();
        assert_eq!(
            report.overall,
            OverallVerdict::HoldsUniformly,
            "anchor {anchor}"
        );
        let constant = uniformity_constant(&report).unwrap();
        assert!(constant <= 3.0, "constant {constant} > 3");
    }
    pass("02 (uniform growth of the first reference operator, constant <= 3)");
}

#[test]
fn criterion_03_trichotomy_example1_both_anchors_and_report_flag() {
    let rates = example1_rates();
    let pair = build_example1(&rates, &unit_triple(), FirstBlockVariant::Consistent)
        .unwrap()
        .compatible_pair();
    let grid = acceptance_grid();

    let origin = check_h_trichotomy(
        &pair,
        &rates,
        &grid,
        AnchorConvention::AllAtS,
        DIV_THRESHOLD,
    )
    .unwrap();
    assert_eq!(origin.overall, OverallVerdict::Fails);
    let e2 = origin.envelope(2);
    assert!(e2.is_diverging(), "index-2 verdict {:?}", e2.verdict);
    assert!(
        e2.witness.ratio >= 1e6,
        "witness ratio {:.3e}",
        e2.witness.ratio
    );
    assert!(
        e2.witness.t <= 20.0 + 1e-9,
        "witness beyond the doubled grid"
    );

    // As printed, the unstable envelope exists and is merely nonuniform: the
    // anchoring discrepancy the certificate must surface.
    let printed = check_h_trichotomy(
        &pair,
        &rates,
        &grid,
        AnchorConvention::AsPrinted,
        DIV_THRESHOLD,
    )
    .unwrap();
    assert_eq!(
        printed.envelope(2).verdict,
        trichotomy::certificates::EnvelopeVerdict::Nonuniform
    );

    // The emitted report must carry both outcomes and the discrepancy flag.
    let exe = env!("CARGO_BIN_EXE_trichotomy");
    let scenario = format!("{}/scenarios/example1.json", env!("CARGO_MANIFEST_DIR"));
    let out = format!("{}/criterion03", env!("CARGO_TARGET_TMPDIR"));
    let status = std::process::Command::new(exe)
        .args(["check-trichotomy", "--scenario", &scenario, "--out", &out])
        .output()
        .expect("binary runs");
    assert_eq!(status.status.code(), Some(1), "expected exit 1: {status:?}");
    let text = std::fs::read_to_string(format!("{out}/check-trichotomy.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let flags = value["discrepancy_flags"].as_array().unwrap();
    assert!(
        flags.iter().any(|f| f["id"] == "anchor-convention"),
        "missing anchor-convention flag"
    );
    let index2_verdicts: Vec<&str> = value["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| {
            c["report"]["envelopes"][1]["verdict"]["kind"]
                .as_str()
                .unwrap()
        })
        .collect();
    assert!(
        index2_verdicts.contains(&"nonuniform") && index2_verdicts.contains(&"diverging"),
        "report lacks both index-2 outcomes: {index2_verdicts:?}"
    );
    pass("03 (first operator: index-2 diverging at origin anchor, nonuniform as printed, flag in report)");
}

#[test]
fn criterion_04_example2_certificates() {
    let rates = example2_rates();
    let pair = build_example2(&rates, &unit_triple())
        .unwrap()
        .compatible_pair();
    let grid = acceptance_grid();

    let tri = check_h_trichotomy(
        &pair,
        &rates,
        &grid,
        AnchorConvention::AsPrinted,
        DIV_THRESHOLD,
    )
    .unwrap();
    assert_eq!(tri.overall, OverallVerdict::HoldsNonuniformly);
    for index in [2u8, 4] {
        let e = tri.envelope(index);
        for (a, h) in e.anchor_points.iter().zip(&e.monotone_hull) {
            let bound = 3.0 * rates.h2.eval(*a).unwrap().powi(3);
            assert!(
                *h <= 1.05 * bound,
                "index {index}: hull {h:.3e} > 1.05 x 3 h2^3 = {:.3e} at anchor {a}",
                1.05 * bound
            );
        }
    }

    let growth_printed = check_h_growth(
        &pair,
        &rates,
        &grid,
        AnchorConvention::AsPrinted,
        DIV_THRESHOLD,
    )
    .unwrap();
    assert_ne!(growth_printed.overall, OverallVerdict::HoldsUniformly);
    assert!(uniformity_constant(&growth_printed).is_none());
    let growth_origin = check_h_growth(
        &pair,
        &rates,
        &grid,
        AnchorConvention::AllAtS,
        DIV_THRESHOLD,
    )
    .unwrap();
    assert_eq!(growth_origin.overall, OverallVerdict::Fails);
    assert!(growth_origin.envelope(2).is_diverging());
    pass("04 (second operator: nonuniform trichotomy within cubic bound; growth not uniform, diverging unstable ratio)");
}

fn example2_roundtrip() -> trichotomy::lyapunov::RoundtripReport {
    let rates = example2_rates();
    let pair = build_example2(&rates, &unit_triple())
        .unwrap()
        .compatible_pair();
    let grid = acceptance_grid();
    let samples = XSamplePolicy::default().build(&pair).unwrap();
    equivalence_roundtrip(
        &pair,
        &rates,
        &grid,
        LyapunovParams::default(),
        &samples,
        ConditionVariant::ProofConsistent,
        AnchorConvention::AsPrinted,
        DIV_THRESHOLD,
        DEFAULT_ROUNDTRIP_SLACK,
    )
    .unwrap()
}

#[test]
fn criterion_05_lyapunov_necessity_example2() {
    let rt = example2_roundtrip();
    let l0 = &rt.lyapunov.l0;
    assert!(
        l0.lower_bound_ok,
        "lower margin {:.3e}",
        l0.lower_margin_min
    );
    assert!(
        l0.all_converged,
        "norm-equivalence evaluations did not converge"
    );
    assert!(
        rt.lyapunov.conditions.iter().all(|c| c.all_converged),
        "condition evaluations did not converge within horizon 40"
    );
    let necessity = rt.necessity.as_ref().expect("certificate holds, leg runs");
    let l0_vs_4m = necessity.l0_vs_4m.expect("growth hulls aligned");
    assert!(l0_vs_4m <= 1.05, "T vs 4M ratio {l0_vs_4m:.4} > 1.05");
    for (i, r) in necessity.cond_vs_2n.iter().enumerate() {
        assert!(*r <= 1.05, "condition {} vs 2N ratio {r:.4} > 1.05", i + 1);
    }
    assert!(necessity.pass);
    pass("05 (construction leg: exact lower bound, T <= 1.05 x 4M, conditions <= 1.05 x 2N, converged)");
}

fn random_passing_operators(count: usize) -> Vec<BlockRateOperator> {
    let grid = acceptance_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < count && attempts < 200 {
        attempts += 1;
        let op = random_block_rate(
            &mut rng,
            3..=3,
            RandomOpOptions {
                trichotomy_friendly: true,
                allow_rank_zero: false,
            },
        )
        .unwrap();
        let pair = op.compatible_pair();
        let tri = check_h_trichotomy(
            &pair,
            op.rates(),
            &grid,
            AnchorConvention::AsPrinted,
            DIV_THRESHOLD,
        )
        .unwrap();
        if tri.overall != OverallVerdict::Fails {
            out.push(op);
        }
    }
    assert_eq!(
        out.len(),
        count,
        "could not find {count} certificate-passing operators"
    );
    out
}

#[test]
fn criterion_06_sufficiency_example2_and_random_operators() {
    let rt = example2_roundtrip();
    let suff = rt.sufficiency.as_ref().expect("anchors aligned");
    for (i, r) in suff.tri_vs_t_sq.iter().enumerate() {
        assert!(
            *r <= 1.05,
            "example2 index {}: tri vs T^2 ratio {r:.4} > 1.05",
            i + 1
        );
    }

    let grid = acceptance_grid();
    for (k, op) in random_passing_operators(20).into_iter().enumerate() {
        let pair = op.compatible_pair();
        let samples = XSamplePolicy {
            random_unit: 8,
            seed: k as u64,
            ..Default::default()
        }
        .build(&pair)
        .unwrap();
        let rt = equivalence_roundtrip(
            &pair,
            op.rates(),
            &grid,
            LyapunovParams::default(),
            &samples,
            ConditionVariant::ProofConsistent,
            AnchorConvention::AsPrinted,
            DIV_THRESHOLD,
            DEFAULT_ROUNDTRIP_SLACK,
        )
        .unwrap();
        let suff = rt.sufficiency.as_ref().expect("anchors aligned");
        for (i, r) in suff.tri_vs_t_sq.iter().enumerate() {
            assert!(
                *r <= 1.05,
                "random op {k} index {}: tri vs T^2 ratio {r:.4} > 1.05",
                i + 1
            );
        }
    }
    pass("06 (sufficiency leg: trichotomy <= 1.05 x T^2 on the reference operator and 20 random operators)");
}

#[test]
fn criterion_07_equivalence_on_random_operators() {
    let grid = acceptance_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut violations = 0usize;
    for _ in 0..20 {
        let op = random_block_rate(
            &mut rng,
            3..=5,
            RandomOpOptions {
                trichotomy_friendly: false,
                allow_rank_zero: false,
            },
        )
        .unwrap();
        let pair = op.compatible_pair();
        for concept in [Concept::Growth, Concept::Trichotomy] {
            let eq = check_equivalent_forms(&pair, op.rates(), concept, &grid).unwrap();
            violations += eq.violations;
            assert!(
                eq.passed,
                "{concept:?}: {} violations, margins {:.3e}/{:.3e}",
                eq.violations, eq.margin_projected_le_direct, eq.margin_direct_le_transform
            );
        }
    }
    assert_eq!(violations, 0);
    pass(
        "07 (projected <= direct <= transformed projected, zero violations on 20 random operators)",
    );
}

/// Brute-force minimal constant of one inequality from forward applications
/// only: ambient samples for the stable/central indices, range-confined
/// samples mapped through the operator for the inverse indices.
fn brute_force_ratio(
    op: &BlockRateOperator,
    id: InequalityId,
    t: f64,
    s: f64,
    samples: &[DVector<f64>],
) -> f64 {
    let rates = op.rates();
    let u = op.evolution().at(t, s).unwrap();
    let h = rates.rate(id.index);
    let (h_t, h_s) = (h.eval(t).unwrap(), h.eval(s).unwrap());
    let rate_factor = match (id.concept, id.index) {
        (Concept::Growth, _) => h_s / h_t,
        (Concept::Trichotomy, 1 | 2) => h_t / h_s,
        (Concept::Trichotomy, _) => h_s / h_t,
    };
    let p_index = match id.index {
        1 => 1,
        2 => 2,
        _ => 3,
    };
    let p_s = op.triple().p(p_index).at(s);
    let mut best = 0.0_f64;
    for x in samples {
        let px = &p_s * x;
        let norm_px = px.norm();
        match (id.index, id.form) {
            (1 | 3, Form::Direct) => {
                // sup ||U P x|| / ||x||; also probe the range-aligned direction
                best = best.max((&u * &px).norm() / x.norm());
                if norm_px > 1e-12 {
                    best = best.max((&u * &px).norm() / norm_px);
                }
            }
            (1 | 3, Form::Projected) => {
                if norm_px > 1e-12 {
                    best = best.max((&u * &px).norm() / norm_px);
                }
            }
            (_, Form::Direct) | (_, Form::Projected) => {
                // inverse indices: walk the range forward, y -> U y, and
                // measure the backward gain ||y|| / ||U y||
                if norm_px > 1e-12 {
                    let y = &px / norm_px;
                    let uy = (&u * &y).norm();
                    if uy > 0.0 {
                        best = best.max(1.0 / uy);
                    }
                }
            }
        }
    }
    rate_factor * best
}

#[test]
fn criterion_08_oracle_agreement() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for instance in 0..50 {
        let op = random_block_rate(
            &mut rng,
            2..=5,
            RandomOpOptions {
                trichotomy_friendly: false,
                allow_rank_zero: true,
            },
        )
        .unwrap();
        let pair = op.compatible_pair();
        let n = op.dimension();
        let samples: Vec<DVector<f64>> =
            (0..1000).map(|_| random_unit_vector(&mut rng, n)).collect();
        for _ in 0..3 {
            let s = rng.random_range(0.0..8.0);
            let t = s + rng.random_range(0.0..4.0);
            for concept in [Concept::Growth, Concept::Trichotomy] {
                for index in 1..=4u8 {
                    for form in [Form::Direct, Form::Projected] {
                        let id = InequalityId {
                            concept,
                            index,
                            form,
                        };
                        let implemented = inequality_ratio(&pair, op.rates(), id, t, s).unwrap();
                        let brute = brute_force_ratio(&op, id, t, s, &samples);
                        if implemented <= 1e-12 && brute <= 1e-12 {
                            continue; // rank-zero block
                        }
                        let err = (implemented - brute).abs() / implemented.max(brute);
                        assert!(
                            err <= 0.01,
                            "instance {instance} {:?} at ({t:.3}, {s:.3}): \
                             implemented {implemented:.6e} vs brute {brute:.6e} ({err:.2e})",
                            id
                        );
                    }
                }
            }
        }
    }
    pass("08 (singular-value ratios agree with 1000-sample brute force within 1% on 50 instances)");
}

#[test]
fn criterion_09_dichotomy_reduction_bitwise() {
    let rates = example2_rates();
    let p1 = trichotomy::algebra::ProjectorFamily::coordinate(3, 0, 1).unwrap();
    let p2 = trichotomy::algebra::ProjectorFamily::coordinate(3, 1, 2).unwrap();
    let op = build_dichotomy(
        &rates,
        p1,
        p2,
        RateExpression::balanced([-1, 0, 0, 0]),
        RateExpression::balanced([0, 1, 0, 0]),
    )
    .unwrap();
    let pair = op.compatible_pair();
    let grid = acceptance_grid();
    let tri = check_h_trichotomy(
        &pair,
        &rates,
        &grid,
        AnchorConvention::AsPrinted,
        DIV_THRESHOLD,
    )
    .unwrap();
    let dich = check_h_dichotomy(
        &pair,
        &rates,
        &grid,
        AnchorConvention::AsPrinted,
        DIV_THRESHOLD,
    )
    .unwrap();
    for (tri_env, dich_env) in [
        (&tri.envelopes[0], &dich.stable),
        (&tri.envelopes[1], &dich.unstable),
    ] {
        assert_eq!(tri_env.anchor_points, dich_env.anchor_points);
        for (a, b) in tri_env.raw_values.iter().zip(&dich_env.raw_values) {
            assert_eq!(a.to_bits(), b.to_bits(), "raw values differ");
        }
        for (a, b) in tri_env.monotone_hull.iter().zip(&dich_env.monotone_hull) {
            assert_eq!(a.to_bits(), b.to_bits(), "hulls differ");
        }
        assert_eq!(tri_env.witness.t.to_bits(), dich_env.witness.t.to_bits());
        assert_eq!(tri_env.witness.s.to_bits(), dich_env.witness.s.to_bits());
        assert_eq!(
            tri_env.witness.ratio.to_bits(),
            dich_env.witness.ratio.to_bits()
        );
        assert_eq!(tri_env.verdict, dich_env.verdict);
    }
    for index in [3u8, 4] {
        let e = tri.envelope(index);
        assert!(
            e.monotone_hull.iter().all(|&h| h == 1.0),
            "central envelope not trivial"
        );
        assert!(
            e.raw_values.iter().all(|&r| r == 0.0),
            "rank-zero raw values not empty"
        );
    }
    pass("09 (two-projector reduction bitwise, central indices trivial)");
}

#[test]
fn criterion_10_homogeneity_and_subadditivity() {
    let rates = example2_rates();
    let pair = build_example2(&rates, &unit_triple())
        .unwrap()
        .compatible_pair();
    let lyap = CanonicalLyapunov::new(&pair, &rates, LyapunovParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    // 200 seeded samples. The first half keeps L at order one, where the
    // literal 1e-12 subadditivity slack is representable; the second half
    // spans the whole grid, where L reaches ~1e7 and one f64 rounding step
    // exceeds 1e-12, so only the unavoidable summation ulps are added.
    for k in 0..200 {
        let strict = k < 100;
        let t = if strict {
            rng.random_range(0.0..2.5)
        } else {
            rng.random_range(0.0..10.0)
        };
        let x = random_unit_vector(&mut rng, 3) * rng.random_range(0.1..3.0);
        let y = random_unit_vector(&mut rng, 3) * rng.random_range(0.1..3.0);
        let c: f64 = rng.random_range(-4.0..4.0);
        let lx = lyap.eval(t, &x).unwrap().value;
        let ly = lyap.eval(t, &y).unwrap().value;
        let lcx = lyap.eval(t, &(&x * c)).unwrap().value;
        assert!(
            (lcx - c.abs() * lx).abs() <= 1e-12 * c.abs() * lx,
            "homogeneity violated: |{lcx:.15e} - |{c}| x {lx:.15e}|"
        );
        let lxy = lyap.eval(t, &(&x + &y)).unwrap().value;
        let slack = if strict {
            1e-12
        } else {
            1e-12 + 8.0 * f64::EPSILON * (lx + ly)
        };
        assert!(
            lxy <= lx + ly + slack,
            "subadditivity violated: {lxy:.17e} > {lx:.17e} + {ly:.17e}"
        );
    }
    pass("10 (homogeneity to 1e-12 relative and subadditivity on 200 samples)");
}
