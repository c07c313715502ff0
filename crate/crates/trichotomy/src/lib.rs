//! Numerical certification of growth and trichotomy properties of evolution
//! operators on finite-dimensional spaces.
//!
//! A certification run takes an evolution family U(t, s), an orthogonal
//! triple of projector families splitting the space into stable, unstable
//! and central directions, and four growth rates. The toolkit
//!
//! - verifies the structural axioms (identity, composition law, partition,
//!   orthogonality, invariance) and constructs the restricted inverses on
//!   the unstable and central ranges ([`algebra`]);
//! - estimates, per anchor time, the minimal nondecreasing envelope of each
//!   propagation inequality and classifies it as uniform, nonuniform, or
//!   diverging ([`certificates`]);
//! - builds the canonical candidate function from truncated suprema,
//!   verifies its norm-equivalence and propagation conditions, and runs the
//!   quantitative equivalence round-trip against the certificate
//!   ([`lyapunov`]);
//! - ships reference block operators and seeded random instances
//!   ([`builders`]), scenario files and reports ([`scenario`], [`report`]),
//!   and a batch driver ([`driver`]).
//!
//! Start with the runnable examples:
//!
//! ```bash
//! cargo run --example growth_certificate
//! cargo run --example theorem_roundtrip
//! ```

pub mod algebra;
pub mod builders;
pub mod certificates;
pub mod driver;
pub mod error;
pub mod grid;
pub mod lyapunov;
pub mod rates;
pub mod report;
pub mod sampling;
pub mod scenario;

pub use algebra::{
    build_inverses, check_structure, range_basis, restricted_norms, verify_inverse_construction,
    CompatiblePair, EvolutionFamily, OrthogonalTriple, ProjectorFamily, RestrictedNorms,
    Tolerances,
};
pub use builders::{
    build_dichotomy, build_example1, build_example2, random_block_rate, BlockRateOperator,
    FirstBlockVariant, RandomOpOptions, RateExpression,
};
pub use certificates::{
    check_equivalent_forms, check_h_dichotomy, check_h_growth, check_h_trichotomy,
    estimate_envelope, inequality_ratio, uniformity_constant, AnchorConvention, CertificateReport,
    Concept, EnvelopeEstimate, EnvelopeVerdict, Form, InequalityId, OverallVerdict,
};
pub use error::{Error, Result};
pub use grid::{DeltaGrid, SRule, TimeGrid};
pub use lyapunov::{
    equivalence_roundtrip, uniform_roundtrip, verify_l0, verify_lyapunov_conditions,
    CanonicalLyapunov, ConditionVariant, LyapunovParams, LyapunovReport, RoundtripReport,
};
pub use rates::{eval_rate, validate_rate, GrowthRate, RateQuadruple, RateValidation};
pub use sampling::{XSample, XSamplePolicy};
pub use scenario::Scenario;
