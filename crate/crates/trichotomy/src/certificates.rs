//! Growth and trichotomy certificates.
//!
//! Each concept is a conjunction of four inequalities indexed 1..=4: forward
//! propagation on the stable range, inverse propagation on the unstable
//! range, and two-sided control on the central range. For a fixed (t, s) the
//! smallest admissible constant of each inequality is a rate quotient times
//! an operator norm; the certificate estimates, per anchor time, the minimal
//! nondecreasing envelope of those constants over the grid and classifies it
//! as uniform, nonuniform, or diverging.
//!
//! Divergence is a heuristic: the time span is doubled once and an envelope
//! is declared diverging when the required bound at some fixed anchor both
//! exceeds the configured threshold and grew by at least 10x under the probe.
//! Anchors whose raw values are unaffected by the horizon (envelopes anchored
//! at the larger time) can never probe-diverge; they are classified by the
//! plateau test instead.

use serde::{Deserialize, Serialize};

use crate::algebra::{restricted_norms, spectral_norm, CompatiblePair};
use crate::error::{Error, Result};
use crate::grid::{DeltaGrid, SRule, TimeGrid};
use crate::rates::RateQuadruple;

/// Default threshold above which a probed envelope value counts as diverging.
pub const DEFAULT_DIVERGENCE_THRESHOLD: f64 = 1e6;
/// Required growth factor of a per-anchor value under the doubling probe.
pub const DIVERGENCE_GROWTH_FACTOR: f64 = 10.0;
/// Relative plateau width of the uniformity test.
pub const UNIFORMITY_PLATEAU_REL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Concept {
    Growth,
    Trichotomy,
}

/// Direct form bounds by the full vector norm; projected form bounds by the
/// norm of the projected vector (the two sides of the equivalence).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Form {
    Direct,
    Projected,
}

/// Which time variable the envelope function is evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AnchorConvention {
    /// Indices 1 and 3 anchor at s, indices 2 and 4 anchor at t.
    #[default]
    AsPrinted,
    /// Every index anchors at s.
    AllAtS,
}

impl AnchorConvention {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "as-printed" => Ok(Self::AsPrinted),
            "all-at-s" => Ok(Self::AllAtS),
            other => Err(Error::Scenario(format!(
                "unknown anchor convention '{other}' (expected 'as-printed' or 'all-at-s')"
            ))),
        }
    }
}

impl std::fmt::Display for AnchorConvention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::AsPrinted => write!(f, "as-printed"),
            Self::AllAtS => write!(f, "all-at-s"),
        }
    }
}

/// One of the eight inequalities, in direct or projected form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InequalityId {
    pub concept: Concept,
    pub index: u8,
    pub form: Form,
}

impl InequalityId {
    pub fn growth(index: u8) -> Self {
        assert!((1..=4).contains(&index), "inequality index must be 1..=4");
        Self {
            concept: Concept::Growth,
            index,
            form: Form::Direct,
        }
    }

    pub fn trichotomy(index: u8) -> Self {
        assert!((1..=4).contains(&index), "inequality index must be 1..=4");
        Self {
            concept: Concept::Trichotomy,
            index,
            form: Form::Direct,
        }
    }

    pub fn with_form(mut self, form: Form) -> Self {
        self.form = form;
        self
    }

    pub fn label(&self) -> String {
        let c = match self.concept {
            Concept::Growth => "g",
            Concept::Trichotomy => "t",
        };
        let f = match self.form {
            Form::Direct => "",
            Form::Projected => "-projected",
        };
        format!("{c}{}{f}", self.index)
    }

    /// True when the envelope anchors at the smaller time s.
    pub fn anchored_at_s(&self, convention: AnchorConvention) -> bool {
        match convention {
            AnchorConvention::AllAtS => true,
            AnchorConvention::AsPrinted => self.index == 1 || self.index == 3,
        }
    }
}

/// Smallest constant making the chosen inequality hold for all x at (t, s).
pub fn inequality_ratio(
    pair: &CompatiblePair,
    rates: &RateQuadruple,
    id: InequalityId,
    t: f64,
    s: f64,
) -> Result<f64> {
    let norm = match (id.form, id.index) {
        (Form::Direct, 1) => spectral_norm(&(pair.u_at(t, s)? * pair.p_at(1, s))),
        (Form::Direct, 3) => spectral_norm(&(pair.u_at(t, s)? * pair.p_at(3, s))),
        (Form::Direct, 2) => spectral_norm(&(pair.v_at(2, t, s)? * pair.p_at(2, t))),
        (Form::Direct, 4) => spectral_norm(&(pair.v_at(3, t, s)? * pair.p_at(3, t))),
        (Form::Projected, i @ (1 | 3)) => {
            restricted_norms(
                pair.evolution(),
                pair.triple().p(i as usize),
                t,
                s,
                pair.eps_rank(),
            )?
            .sup_norm
        }
        (Form::Projected, i @ (2 | 4)) => {
            let p_index = if i == 2 { 2 } else { 3 };
            let gain = restricted_norms(
                pair.evolution(),
                pair.triple().p(p_index),
                t,
                s,
                pair.eps_rank(),
            )?
            .min_gain;
            if gain.is_infinite() {
                0.0
            } else if gain == 0.0 {
                f64::INFINITY
            } else {
                1.0 / gain
            }
        }
        _ => unreachable!("index validated at construction"),
    };
    let h = rates.rate(id.index);
    let (h_t, h_s) = (h.eval(t)?, h.eval(s)?);
    Ok(match (id.concept, id.index) {
        (Concept::Growth, _) => h_s * norm / h_t,
        (Concept::Trichotomy, 1 | 2) => h_t * norm / h_s,
        (Concept::Trichotomy, _) => h_s * norm / h_t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EnvelopeVerdict {
    Uniform { constant: f64 },
    Nonuniform,
    Diverging,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub t: f64,
    pub s: f64,
    pub ratio: f64,
}

/// Sampled minimal nondecreasing envelope of one inequality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvelopeEstimate {
    pub inequality: InequalityId,
    pub anchor: AnchorConvention,
    pub anchor_points: Vec<f64>,
    /// Pointwise minimal bound at each anchor (sup of the ratio over the
    /// complementary variable on the grid).
    pub raw_values: Vec<f64>,
    /// Running maximum of the raw values, clamped below at 1: the least
    /// nondecreasing bound with the required codomain.
    pub monotone_hull: Vec<f64>,
    pub verdict: EnvelopeVerdict,
    pub witness: Witness,
}

impl EnvelopeEstimate {
    pub fn hull_max(&self) -> f64 {
        self.monotone_hull.last().copied().unwrap_or(1.0)
    }

    pub fn is_diverging(&self) -> bool {
        matches!(self.verdict, EnvelopeVerdict::Diverging)
    }
}

/// Running maximum clamped below at 1.
pub(crate) fn monotone_hull_clamped(raw: &[f64]) -> Vec<f64> {
    let mut hull = Vec::with_capacity(raw.len());
    let mut acc = 1.0_f64;
    for &v in raw {
        acc = acc.max(v);
        hull.push(acc);
    }
    hull
}

/// Plateau test: the hull counts as a constant when every point past the
/// first quartile sits within 1% of the maximum. Returns the constant.
pub(crate) fn plateau_constant(hull: &[f64]) -> Option<f64> {
    if hull.is_empty() {
        return None;
    }
    let m = *hull.last().unwrap();
    let q = hull.len() / 4;
    if hull[q..]
        .iter()
        .all(|&v| v >= m * (1.0 - UNIFORMITY_PLATEAU_REL))
    {
        Some(m)
    } else {
        None
    }
}

struct ProbeOutcome {
    diverging: bool,
    best: Option<Witness>,
}

/// Estimate the minimal nondecreasing envelope of one inequality on a grid.
pub fn estimate_envelope(
    pair: &CompatiblePair,
    rates: &RateQuadruple,
    id: InequalityId,
    anchor: AnchorConvention,
    grid: &DeltaGrid,
    div_threshold: f64,
) -> Result<EnvelopeEstimate> {
    let times = grid.times.times();
    let index_pairs = grid.index_pairs();
    if index_pairs.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let anchored_at_s = id.anchored_at_s(anchor);

    let mut raw: Vec<Option<f64>> = vec![None; times.len()];
    let mut best: Option<Witness> = None;
    let mut s_indices_present = vec![false; times.len()];
    for &(it, is) in &index_pairs {
        let (t, s) = (times[it], times[is]);
        let ratio = inequality_ratio(pair, rates, id, t, s)?;
        let a = if anchored_at_s { is } else { it };
        let slot = &mut raw[a];
        *slot = Some(slot.map_or(ratio, |prev| prev.max(ratio)));
        s_indices_present[is] = true;
        if best.as_ref().is_none_or(|w| ratio > w.ratio) {
            best = Some(Witness { t, s, ratio });
        }
    }
    let best = best.expect("at least one pair");

    let probe = if anchored_at_s {
        probe_divergence(
            pair,
            rates,
            id,
            &grid.times,
            &s_indices_present,
            &raw,
            div_threshold,
        )?
    } else {
        // Anchored at the larger time: raw values are sups over a compact
        // window unaffected by extending the horizon.
        ProbeOutcome {
            diverging: false,
            best: None,
        }
    };

    let mut anchor_points = Vec::new();
    let mut raw_values = Vec::new();
    for (i, slot) in raw.iter().enumerate() {
        if let Some(v) = slot {
            anchor_points.push(times[i]);
            raw_values.push(*v);
        }
    }
    let monotone_hull = monotone_hull_clamped(&raw_values);

    let (verdict, witness) = if probe.diverging {
        let witness = if best.ratio > div_threshold {
            best
        } else {
            probe.best.expect("diverging probe records a witness")
        };
        (EnvelopeVerdict::Diverging, witness)
    } else {
        let verdict = match plateau_constant(&monotone_hull) {
            Some(constant) => EnvelopeVerdict::Uniform { constant },
            None => EnvelopeVerdict::Nonuniform,
        };
        (verdict, best)
    };

    Ok(EnvelopeEstimate {
        inequality: id,
        anchor,
        anchor_points,
        raw_values,
        monotone_hull,
        verdict,
        witness,
    })
}

fn probe_divergence(
    pair: &CompatiblePair,
    rates: &RateQuadruple,
    id: InequalityId,
    times: &TimeGrid,
    s_present: &[bool],
    base_raw: &[Option<f64>],
    div_threshold: f64,
) -> Result<ProbeOutcome> {
    let extended = times.extended_doubled();
    let base = times.times();
    let ext = &extended.times()[base.len()..];
    let mut diverging = false;
    let mut best: Option<Witness> = None;
    for (is, &present) in s_present.iter().enumerate() {
        if !present {
            continue;
        }
        let s = base[is];
        let base_value = base_raw[is].unwrap_or(0.0);
        let mut probed = base_value;
        for &t in ext {
            let ratio = inequality_ratio(pair, rates, id, t, s)?;
            if ratio > probed {
                probed = ratio;
            }
            if best.as_ref().is_none_or(|w| ratio > w.ratio) {
                best = Some(Witness { t, s, ratio });
            }
        }
        if probed > div_threshold
            && base_value > 0.0
            && probed >= DIVERGENCE_GROWTH_FACTOR * base_value
        {
            diverging = true;
        }
    }
    Ok(ProbeOutcome { diverging, best })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverallVerdict {
    HoldsUniformly,
    HoldsNonuniformly,
    Fails,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridEcho {
    pub t_max: f64,
    pub points: usize,
    pub s_rule: SRule,
}

impl GridEcho {
    pub fn of(grid: &DeltaGrid) -> Self {
        Self {
            t_max: grid.times.max_t(),
            points: grid.times.len(),
            s_rule: grid.s_rule,
        }
    }
}

/// Envelope estimates for the four inequalities of one concept.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateReport {
    pub concept: Concept,
    pub anchor: AnchorConvention,
    pub div_threshold: f64,
    pub grid: GridEcho,
    pub envelopes: Vec<EnvelopeEstimate>,
    pub overall: OverallVerdict,
}

impl CertificateReport {
    pub fn envelope(&self, index: u8) -> &EnvelopeEstimate {
        &self.envelopes[(index - 1) as usize]
    }

    /// Pointwise maximum of the four hulls: the minimal single envelope
    /// satisfying all four inequalities on the grid. Requires the four
    /// estimates to share one anchor-point set.
    pub fn combined_hull(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let first = &self.envelopes[0].anchor_points;
        if self.envelopes.iter().any(|e| &e.anchor_points != first) {
            return None;
        }
        let mut hull = vec![1.0_f64; first.len()];
        for e in &self.envelopes {
            for (h, &v) in hull.iter_mut().zip(&e.monotone_hull) {
                *h = h.max(v);
            }
        }
        Some((first.clone(), hull))
    }
}

fn overall_of(envelopes: &[EnvelopeEstimate]) -> OverallVerdict {
    if envelopes
        .iter()
        .any(|e| matches!(e.verdict, EnvelopeVerdict::Diverging))
    {
        OverallVerdict::Fails
    } else if envelopes
        .iter()
        .any(|e| matches!(e.verdict, EnvelopeVerdict::Nonuniform))
    {
        OverallVerdict::HoldsNonuniformly
    } else {
        OverallVerdict::HoldsUniformly
    }
}

/// Assemble a certificate from independently estimated envelopes (indices
/// 1..=4 in order). Lets a driver distribute the four estimations and still
/// produce the canonical report.
pub fn report_from_envelopes(
    concept: Concept,
    anchor: AnchorConvention,
    div_threshold: f64,
    grid: &DeltaGrid,
    envelopes: Vec<EnvelopeEstimate>,
) -> CertificateReport {
    assert_eq!(
        envelopes.len(),
        4,
        "a certificate needs exactly four envelopes"
    );
    let overall = overall_of(&envelopes);
    CertificateReport {
        concept,
        anchor,
        div_threshold,
        grid: GridEcho::of(grid),
        envelopes,
        overall,
    }
}

fn check_concept(
    pair: &CompatiblePair,
    rates: &RateQuadruple,
    concept: Concept,
    grid: &DeltaGrid,
    anchor: AnchorConvention,
    div_threshold: f64,
) -> Result<CertificateReport> {
    let mut envelopes = Vec::with_capacity(4);
    for index in 1..=4 {
        let id = InequalityId {
            concept,
            index,
            form: Form::Direct,
        };
        envelopes.push(estimate_envelope(
            pair,
            rates,
            id,
            anchor,
            grid,
            div_threshold,
        )?);
    }
    let overall = overall_of(&envelopes);
    Ok(CertificateReport {
        concept,
        anchor,
        div_threshold,
        grid: GridEcho::of(grid),
        envelopes,
        overall,
    })
}

/// Decide the four growth inequalities on a grid.
pub fn check_h_growth(
    pair: &CompatiblePair,
    rates: &RateQuadruple,
    grid: &DeltaGrid,
    anchor: AnchorConvention,
    div_threshold: f64,
) -> Result<CertificateReport> {
    check_concept(pair, rates, Concept::Growth, grid, anchor, div_threshold)
}

/// Decide the four trichotomy inequalities on a grid.
pub fn check_h_trichotomy(
    pair: &CompatiblePair,
    rates: &RateQuadruple,
    grid: &DeltaGrid,
    anchor: AnchorConvention,
    div_threshold: f64,
) -> Result<CertificateReport> {
    check_concept(
        pair,
        rates,
        Concept::Trichotomy,
        grid,
        anchor,
        div_threshold,
    )
}

/// Two-projector dichotomy report: the trichotomy inequalities for the stable
/// and unstable ranges, with an empty central direction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub anchor: AnchorConvention,
    pub div_threshold: f64,
    pub grid: GridEcho,
    pub stable: EnvelopeEstimate,
    pub unstable: EnvelopeEstimate,
    pub overall: OverallVerdict,
}

/// Direct two-projector dichotomy check. Requires a rank-zero central
/// projector; indices 1 and 2 are computed exactly as the trichotomy
/// certificate computes them, so the reduction is bit-for-bit.
pub fn check_h_dichotomy(
    pair: &CompatiblePair,
    rates: &RateQuadruple,
    grid: &DeltaGrid,
    anchor: AnchorConvention,
    div_threshold: f64,
) -> Result<DichotomyReport> {
    let p3_norm = grid
        .times
        .times()
        .iter()
        .map(|&t| spectral_norm(&pair.p_at(3, t)))
        .fold(0.0_f64, f64::max);
    if p3_norm > 1e-12 {
        return Err(Error::Scenario(format!(
            "dichotomy check requires P3 = 0; found norm {p3_norm:.3e}"
        )));
    }
    let stable = estimate_envelope(
        pair,
        rates,
        InequalityId::trichotomy(1),
        anchor,
        grid,
        div_threshold,
    )?;
    let unstable = estimate_envelope(
        pair,
        rates,
        InequalityId::trichotomy(2),
        anchor,
        grid,
        div_threshold,
    )?;
    let overall = overall_of(&[stable.clone(), unstable.clone()]);
    Ok(DichotomyReport {
        anchor,
        div_threshold,
        grid: GridEcho::of(grid),
        stable,
        unstable,
        overall,
    })
}

/// Constant certifying the uniform variant: present when all four envelopes
/// pass the plateau test.
pub fn uniformity_constant(report: &CertificateReport) -> Option<f64> {
    let mut worst = 1.0_f64;
    for e in &report.envelopes {
        match e.verdict {
            EnvelopeVerdict::Uniform { constant } => worst = worst.max(constant),
            _ => return None,
        }
    }
    Some(worst)
}

/// Relative slack for the on-grid equivalence comparisons.
const EQUIVALENCE_REL_TOL: f64 = 1e-9;

/// On-grid check of the equivalence between direct-form and projected-form
/// envelopes: the projected bound is never harder, and the direct bound is
/// dominated by the running maximum of (projected hull x sum of projector
/// norms).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub concept: Concept,
    pub anchors: Vec<f64>,
    pub direct_hulls: Vec<Vec<f64>>,
    pub projected_hulls: Vec<Vec<f64>>,
    pub projector_norm_sum: Vec<f64>,
    pub transform_hull: Vec<f64>,
    pub margin_projected_le_direct: f64,
    pub margin_direct_le_transform: f64,
    pub violations: usize,
    pub passed: bool,
}

pub fn check_equivalent_forms(
    pair: &CompatiblePair,
    rates: &RateQuadruple,
    concept: Concept,
    grid: &DeltaGrid,
) -> Result<EquivalenceReport> {
    let anchor = AnchorConvention::AsPrinted;
    let div = DEFAULT_DIVERGENCE_THRESHOLD;
    let mut direct = Vec::with_capacity(4);
    let mut projected = Vec::with_capacity(4);
    for index in 1..=4 {
        let id = InequalityId {
            concept,
            index,
            form: Form::Direct,
        };
        direct.push(estimate_envelope(pair, rates, id, anchor, grid, div)?);
        let id = id.with_form(Form::Projected);
        projected.push(estimate_envelope(pair, rates, id, anchor, grid, div)?);
    }
    let anchors = direct[0].anchor_points.clone();
    if direct
        .iter()
        .chain(&projected)
        .any(|e| e.anchor_points != anchors)
    {
        return Err(Error::Scenario(
            "equivalence check needs a grid on which all eight envelopes share anchors".into(),
        ));
    }

    let norm_sum: Vec<f64> = anchors
        .iter()
        .map(|&a| (1..=3).map(|i| spectral_norm(&pair.p_at(i, a))).sum())
        .collect();

    // Combined projected envelope and its transform.
    let mut transform_hull = Vec::with_capacity(anchors.len());
    let mut acc = 0.0_f64;
    for (k, &ns) in norm_sum.iter().enumerate() {
        let m = projected
            .iter()
            .map(|e| e.monotone_hull[k])
            .fold(1.0_f64, f64::max);
        acc = acc.max(m * ns);
        transform_hull.push(acc);
    }

    let mut margin_a = f64::INFINITY;
    let mut margin_b = f64::INFINITY;
    let mut violations = 0usize;
    for (d_env, p_env) in direct.iter().zip(&projected) {
        let rows = d_env
            .monotone_hull
            .iter()
            .zip(&p_env.monotone_hull)
            .zip(&transform_hull);
        for ((&d, &p), &m1) in rows {
            margin_a = margin_a.min(d - p);
            if p > d * (1.0 + EQUIVALENCE_REL_TOL) {
                violations += 1;
            }
            margin_b = margin_b.min(m1 - d);
            if d > m1 * (1.0 + EQUIVALENCE_REL_TOL) {
                violations += 1;
            }
        }
    }

    Ok(EquivalenceReport {
        concept,
        anchors,
        direct_hulls: direct.iter().map(|e| e.monotone_hull.clone()).collect(),
        projected_hulls: projected.iter().map(|e| e.monotone_hull.clone()).collect(),
        projector_norm_sum: norm_sum,
        transform_hull,
        margin_projected_le_direct: margin_a,
        margin_direct_le_transform: margin_b,
        violations,
        passed: violations == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::OrthogonalTriple;
    use crate::builders::{
        build_dichotomy, build_example1, build_example2, FirstBlockVariant, RateExpression,
    };
    use crate::grid::TimeGrid;
    use crate::rates::{GrowthRate, RateQuadruple};
    use approx::assert_relative_eq;

    fn all_exp(alpha: [f64; 4]) -> RateQuadruple {
        RateQuadruple::exponential(alpha).unwrap()
    }

    fn unit_triple() -> OrthogonalTriple {
        OrthogonalTriple::coordinate(3, [1, 1, 1]).unwrap()
    }

    fn integer_grid(t_max: f64) -> DeltaGrid {
        DeltaGrid::uniform(t_max, 1).unwrap()
    }

    #[test]
    fn ratio_at_equal_times_is_projector_norm() {
        let rates = all_exp([1.0; 4]);
        let pair = build_example1(&rates, &unit_triple(), FirstBlockVariant::Consistent)
            .unwrap()
            .compatible_pair();
        for index in 1..=4 {
            for concept in [Concept::Growth, Concept::Trichotomy] {
                let id = InequalityId {
                    concept,
                    index,
                    form: Form::Direct,
                };
                let r = inequality_ratio(&pair, &rates, id, 2.0, 2.0).unwrap();
                assert_relative_eq!(r, 1.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn example1_growth_3_ratio() {
        let rates = all_exp([1.0; 4]);
        let pair = build_example1(&rates, &unit_triple(), FirstBlockVariant::Consistent)
            .unwrap()
            .compatible_pair();
        let r = inequality_ratio(&pair, &rates, InequalityId::growth(3), 2.0, 0.0).unwrap();
        assert_relative_eq!(r, (-2.0_f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn example1_trichotomy_2_ratio() {
        let rates = all_exp([1.0, 2.0, 1.0, 1.0]);
        let pair = build_example1(&rates, &unit_triple(), FirstBlockVariant::Consistent)
            .unwrap()
            .compatible_pair();
        let r = inequality_ratio(&pair, &rates, InequalityId::trichotomy(2), 3.0, 1.0).unwrap();
        assert_relative_eq!(r, 8.0_f64.exp(), max_relative = 1e-10);
    }

    #[test]
    fn trichotomy_vs_growth_antisymmetry() {
        // index-1 ratios differ exactly by the squared rate quotient
        let rates = all_exp([0.7, 1.0, 1.0, 1.0]);
        let pair = build_example2(&rates, &unit_triple())
            .unwrap()
            .compatible_pair();
        for &(t, s) in &[(1.0, 0.0), (3.0, 1.5), (5.0, 5.0)] {
            let g = inequality_ratio(&pair, &rates, InequalityId::growth(1), t, s).unwrap();
            let tr = inequality_ratio(&pair, &rates, InequalityId::trichotomy(1), t, s).unwrap();
            let q = rates.h1.eval(t).unwrap() / rates.h1.eval(s).unwrap();
            assert_relative_eq!(tr, g * q * q, max_relative = 1e-12);
        }
    }

    #[test]
    fn scaling_a_rate_by_a_power_of_two_leaves_ratios_bitwise_equal() {
        let points: Vec<f64> = (0..=8).map(f64::from).collect();
        let rates = all_exp([1.0, 2.0, 1.0, 1.0]);
        let scaled = RateQuadruple::new(
            rates.h1.clone(),
            GrowthRate::tabulated(
                points
                    .iter()
                    .map(|&t| (t, 2.0 * rates.h2.eval(t).unwrap()))
                    .collect(),
            )
            .unwrap(),
            rates.h3.clone(),
            rates.h4.clone(),
        );
        let pair = build_example1(&rates, &unit_triple(), FirstBlockVariant::Consistent)
            .unwrap()
            .compatible_pair();
        let pair_scaled = build_example1(&scaled, &unit_triple(), FirstBlockVariant::Consistent)
            .unwrap()
            .compatible_pair();
        for &(t, s) in &[(3.0, 1.0), (8.0, 0.0), (5.0, 5.0)] {
            let a = inequality_ratio(&pair, &rates, InequalityId::trichotomy(2), t, s).unwrap();
            let b =
                inequality_ratio(&pair_scaled, &scaled, InequalityId::trichotomy(2), t, s).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn example1_unstable_envelope_diverges_when_anchored_at_s() {
        let rates = all_exp([1.0, 2.0, 1.0, 1.0]);
        let pair = build_example1(&rates, &unit_triple(), FirstBlockVariant::Consistent)
            .unwrap()
            .compatible_pair();
        let est = estimate_envelope(
            &pair,
            &rates,
            InequalityId::trichotomy(2),
            AnchorConvention::AllAtS,
            &integer_grid(10.0),
            1e6,
        )
        .unwrap();
        assert!(est.is_diverging(), "{:?}", est.verdict);
        assert_eq!((est.witness.t, est.witness.s), (10.0, 0.0));
        assert_relative_eq!(est.witness.ratio, 40.0_f64.exp(), max_relative = 1e-9);
    }

    #[test]
    fn example1_unstable_envelope_is_nonuniform_as_printed() {
        let rates = all_exp([1.0, 2.0, 1.0, 1.0]);
        let pair = build_example1(&rates, &unit_triple(), FirstBlockVariant::Consistent)
            .unwrap()
            .compatible_pair();
        let est = estimate_envelope(
            &pair,
            &rates,
            InequalityId::trichotomy(2),
            AnchorConvention::AsPrinted,
            &integer_grid(10.0),
            1e6,
        )
        .unwrap();
        assert_eq!(est.verdict, EnvelopeVerdict::Nonuniform);
        // raw value at anchor a is exp(4a)
        for (a, v) in est.anchor_points.iter().zip(&est.raw_values) {
            assert_relative_eq!(*v, (4.0 * a).exp(), max_relative = 1e-9);
        }
    }

    #[test]
    fn contraction_yields_uniform_constant_one() {
        // identity evolution on the unstable range alone
        let rates = all_exp([1.0; 4]);
        let triple = OrthogonalTriple::coordinate(2, [0, 2, 0]).unwrap();
        let op = crate::builders::BlockRateOperator::new(
            triple,
            [
                RateExpression::one(),
                RateExpression::one(),
                RateExpression::one(),
            ],
            rates.clone(),
        )
        .unwrap();
        let pair = op.compatible_pair();
        let est = estimate_envelope(
            &pair,
            &rates,
            InequalityId::growth(2),
            AnchorConvention::AsPrinted,
            &integer_grid(6.0),
            1e6,
        )
        .unwrap();
        assert_eq!(est.verdict, EnvelopeVerdict::Uniform { constant: 1.0 });
    }

    #[test]
    fn example1_growth_is_uniform_with_small_constant() {
        let rates = all_exp([1.0, 2.0, 1.0, 1.0]);
        let pair = build_example1(&rates, &unit_triple(), FirstBlockVariant::Consistent)
            .unwrap()
            .compatible_pair();
        for anchor in [AnchorConvention::AsPrinted, AnchorConvention::AllAtS] {
            let report = check_h_growth(&pair, &rates, &integer_grid(10.0), anchor, 1e6).unwrap();
            assert_eq!(report.overall, OverallVerdict::HoldsUniformly);
            let c = uniformity_constant(&report).unwrap();
            assert!(c <= 3.0, "constant {c}");
        }
    }

    #[test]
    fn example2_growth_fails_uniformity_with_diverging_unstable_ratio() {
        let rates = all_exp([1.0; 4]);
        let pair = build_example2(&rates, &unit_triple())
            .unwrap()
            .compatible_pair();
        let origin = check_h_growth(
            &pair,
            &rates,
            &integer_grid(10.0),
            AnchorConvention::AllAtS,
            1e6,
        )
        .unwrap();
        assert_eq!(origin.overall, OverallVerdict::Fails);
        assert!(origin.envelope(2).is_diverging());
        let printed = check_h_growth(
            &pair,
            &rates,
            &integer_grid(10.0),
            AnchorConvention::AsPrinted,
            1e6,
        )
        .unwrap();
        assert_eq!(printed.overall, OverallVerdict::HoldsNonuniformly);
        assert!(uniformity_constant(&printed).is_none());
    }

    #[test]
    fn example2_trichotomy_is_nonuniform_with_cubic_envelope() {
        let rates = all_exp([1.0; 4]);
        let pair = build_example2(&rates, &unit_triple())
            .unwrap()
            .compatible_pair();
        let report = check_h_trichotomy(
            &pair,
            &rates,
            &integer_grid(10.0),
            AnchorConvention::AsPrinted,
            1e6,
        )
        .unwrap();
        assert_eq!(report.overall, OverallVerdict::HoldsNonuniformly);
        for index in [2u8, 4] {
            let e = report.envelope(index);
            for (a, h) in e.anchor_points.iter().zip(&e.monotone_hull) {
                let bound = 3.0 * rates.h2.eval(*a).unwrap().powi(3);
                assert!(
                    *h <= 1.05 * bound,
                    "index {index} hull {h} > bound {bound} at {a}"
                );
            }
        }
    }

    #[test]
    fn example1_trichotomy_fails_at_origin_anchor() {
        let rates = all_exp([1.0, 2.0, 1.0, 1.0]);
        let pair = build_example1(&rates, &unit_triple(), FirstBlockVariant::Consistent)
            .unwrap()
            .compatible_pair();
        let report = check_h_trichotomy(
            &pair,
            &rates,
            &integer_grid(10.0),
            AnchorConvention::AllAtS,
            1e6,
        )
        .unwrap();
        assert_eq!(report.overall, OverallVerdict::Fails);
    }

    #[test]
    fn dichotomy_reduction_is_bitwise() {
        let rates = all_exp([1.0; 4]);
        let p1 = crate::algebra::ProjectorFamily::coordinate(3, 0, 1).unwrap();
        let p2 = crate::algebra::ProjectorFamily::coordinate(3, 1, 2).unwrap();
        let op = build_dichotomy(
            &rates,
            p1,
            p2,
            RateExpression::balanced([-1, 0, 0, 0]),
            RateExpression::balanced([0, 1, 0, 0]),
        )
        .unwrap();
        let pair = op.compatible_pair();
        let grid = integer_grid(8.0);
        let tri =
            check_h_trichotomy(&pair, &rates, &grid, AnchorConvention::AsPrinted, 1e6).unwrap();
        let dich =
            check_h_dichotomy(&pair, &rates, &grid, AnchorConvention::AsPrinted, 1e6).unwrap();
        assert_eq!(
            serde_json::to_string(&tri.envelopes[0]).unwrap(),
            serde_json::to_string(&dich.stable).unwrap()
        );
        assert_eq!(
            serde_json::to_string(&tri.envelopes[1]).unwrap(),
            serde_json::to_string(&dich.unstable).unwrap()
        );
        // central indices are trivial
        for index in [3u8, 4] {
            assert_eq!(
                tri.envelope(index)
                    .monotone_hull
                    .iter()
                    .cloned()
                    .fold(0.0, f64::max),
                1.0
            );
            assert_eq!(
                tri.envelope(index).verdict,
                EnvelopeVerdict::Uniform { constant: 1.0 }
            );
        }
        // the canonical quotient dichotomy is uniform with constant 1
        assert_eq!(dich.overall, OverallVerdict::HoldsUniformly);
        for e in [&dich.stable, &dich.unstable] {
            match e.verdict {
                EnvelopeVerdict::Uniform { constant } => {
                    assert!((constant - 1.0).abs() <= 1e-12)
                }
                other => panic!("expected uniform verdict, got {other:?}"),
            }
        }
    }

    #[test]
    fn pure_stable_case_has_trivial_unstable_and_central_envelopes() {
        // P2 = 0 on top of P3 = 0: only the stable inequality is active.
        let rates = all_exp([1.0; 4]);
        let p1 = crate::algebra::ProjectorFamily::coordinate(2, 0, 2).unwrap();
        let p2 = crate::algebra::ProjectorFamily::zero(2);
        let op = build_dichotomy(
            &rates,
            p1,
            p2,
            RateExpression::balanced([-1, 0, 0, 0]),
            RateExpression::balanced([0, 1, 0, 0]),
        )
        .unwrap();
        let pair = op.compatible_pair();
        let report = check_h_trichotomy(
            &pair,
            &rates,
            &integer_grid(6.0),
            AnchorConvention::AsPrinted,
            1e6,
        )
        .unwrap();
        assert_eq!(report.overall, OverallVerdict::HoldsUniformly);
        for index in [2u8, 3, 4] {
            assert!(report
                .envelope(index)
                .monotone_hull
                .iter()
                .all(|&h| h == 1.0));
        }
    }

    #[test]
    fn polynomial_quotient_dichotomy_is_uniform() {
        let rates = RateQuadruple::new(
            GrowthRate::polynomial(1.5).unwrap(),
            GrowthRate::polynomial(0.8).unwrap(),
            GrowthRate::polynomial(1.0).unwrap(),
            GrowthRate::polynomial(1.0).unwrap(),
        );
        let p1 = crate::algebra::ProjectorFamily::coordinate(2, 0, 1).unwrap();
        let p2 = crate::algebra::ProjectorFamily::coordinate(2, 1, 1).unwrap();
        let op = build_dichotomy(
            &rates,
            p1,
            p2,
            RateExpression::balanced([-1, 0, 0, 0]),
            RateExpression::balanced([0, 1, 0, 0]),
        )
        .unwrap();
        let dich = check_h_dichotomy(
            &op.compatible_pair(),
            &rates,
            &integer_grid(8.0),
            AnchorConvention::AsPrinted,
            1e6,
        )
        .unwrap();
        assert_eq!(dich.overall, OverallVerdict::HoldsUniformly);
    }

    #[test]
    fn refining_the_grid_never_lowers_the_hull() {
        let rates = all_exp([1.0; 4]);
        let pair = build_example2(&rates, &unit_triple())
            .unwrap()
            .compatible_pair();
        let coarse = DeltaGrid::uniform(6.0, 1).unwrap();
        let fine = DeltaGrid::uniform(6.0, 2).unwrap();
        for index in 1..=4 {
            let id = InequalityId::trichotomy(index);
            let ec =
                estimate_envelope(&pair, &rates, id, AnchorConvention::AsPrinted, &coarse, 1e6)
                    .unwrap();
            let ef = estimate_envelope(&pair, &rates, id, AnchorConvention::AsPrinted, &fine, 1e6)
                .unwrap();
            for (a, hc) in ec.anchor_points.iter().zip(&ec.monotone_hull) {
                let k = ef.anchor_points.iter().position(|x| x == a).unwrap();
                assert!(ef.monotone_hull[k] >= *hc - 1e-12);
            }
        }
    }

    #[test]
    fn equivalence_holds_on_reference_operator() {
        let rates = all_exp([1.0; 4]);
        let pair = build_example2(&rates, &unit_triple())
            .unwrap()
            .compatible_pair();
        for concept in [Concept::Growth, Concept::Trichotomy] {
            let eq = check_equivalent_forms(&pair, &rates, concept, &integer_grid(6.0)).unwrap();
            assert!(eq.passed, "{concept:?}: {} violations", eq.violations);
            assert!(eq.margin_projected_le_direct >= -1e-9);
            assert!(eq.margin_direct_le_transform >= -1e-9);
        }
    }

    #[test]
    fn equivalence_is_trivial_on_rank_zero_central_blocks() {
        let rates = all_exp([1.0; 4]);
        let p1 = crate::algebra::ProjectorFamily::coordinate(2, 0, 1).unwrap();
        let p2 = crate::algebra::ProjectorFamily::coordinate(2, 1, 1).unwrap();
        let op = build_dichotomy(
            &rates,
            p1,
            p2,
            RateExpression::balanced([-1, 0, 0, 0]),
            RateExpression::balanced([0, 1, 0, 0]),
        )
        .unwrap();
        let eq = check_equivalent_forms(
            &op.compatible_pair(),
            &rates,
            Concept::Trichotomy,
            &integer_grid(5.0),
        )
        .unwrap();
        assert!(eq.passed);
        for i in [2usize, 3] {
            assert!(eq.direct_hulls[i].iter().all(|&h| h == 1.0));
            assert!(eq.projected_hulls[i].iter().all(|&h| h == 1.0));
        }
    }

    #[test]
    fn inverse_indices_propagate_strong_invariance_failures() {
        use crate::algebra::{CompatiblePair, EvolutionFamily};
        use nalgebra::{DMatrix, DVector};
        let u = EvolutionFamily::from_fn(2, |t, s| {
            let f = if t > s { 0.0 } else { 1.0 };
            DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, f]))
        });
        let triple = OrthogonalTriple::coordinate(2, [1, 1, 0]).unwrap();
        let pair = CompatiblePair::new(u, triple, 1e-8).unwrap();
        let rates = all_exp([1.0; 4]);
        let err = inequality_ratio(&pair, &rates, InequalityId::trichotomy(2), 1.0, 0.0);
        assert!(matches!(
            err,
            Err(crate::error::Error::NotStronglyInvariant { family: 2, .. })
        ));
    }

    #[test]
    fn origin_only_grids_estimate_a_single_anchor() {
        let rates = all_exp([1.0; 4]);
        let pair = build_example2(&rates, &unit_triple())
            .unwrap()
            .compatible_pair();
        let grid = DeltaGrid::new(TimeGrid::uniform(5.0, 1).unwrap(), SRule::OriginOnly);
        let est = estimate_envelope(
            &pair,
            &rates,
            InequalityId::trichotomy(2),
            AnchorConvention::AllAtS,
            &grid,
            1e6,
        )
        .unwrap();
        assert_eq!(est.anchor_points, vec![0.0]);
    }
}
