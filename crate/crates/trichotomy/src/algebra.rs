//! Finite-dimensional projector triples and evolution families, verification
//! of their structural axioms, and construction of the inverses that realize
//! strong invariance on the unstable and central ranges.
//!
//! Matrices are real with the Euclidean vector norm; every operator norm is
//! the spectral norm, so each "for all x" inequality reduces to a singular
//! value computation.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::DeltaGrid;

/// Shared closure type for scalar block coefficients of (t, s).
pub type CoeffFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Spectral norm; zero for empty matrices.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0_f64, |acc, &s| acc.max(s))
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidTime(t));
    }
    Ok(())
}

fn check_pair(t: f64, s: f64) -> Result<()> {
    check_time(t)?;
    check_time(s)?;
    if t < s {
        return Err(Error::OutsideDomain { t, s });
    }
    Ok(())
}

/// A family of projectors t -> P(t).
#[derive(Clone)]
pub struct ProjectorFamily {
    dim: usize,
    form: ProjectorForm,
}

#[derive(Clone)]
enum ProjectorForm {
    Constant(DMatrix<f64>),
    Map(Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>),
}

impl ProjectorFamily {
    pub fn constant(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "projector must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            dim: matrix.nrows(),
            form: ProjectorForm::Constant(matrix),
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            form: ProjectorForm::Constant(DMatrix::zeros(dim, dim)),
        }
    }

    /// Coordinate projector onto components offset..offset+rank.
    pub fn coordinate(dim: usize, offset: usize, rank: usize) -> Result<Self> {
        if offset + rank > dim {
            return Err(Error::DimensionMismatch(format!(
                "coordinate block {offset}..{} exceeds dimension {dim}",
                offset + rank
            )));
        }
        let mut m = DMatrix::zeros(dim, dim);
        for k in offset..offset + rank {
            m[(k, k)] = 1.0;
        }
        Self::constant(m)
    }

    pub fn from_fn<F>(dim: usize, f: F) -> Self
    where
        F: Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            form: ProjectorForm::Map(Arc::new(f)),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn at(&self, t: f64) -> DMatrix<f64> {
        match &self.form {
            ProjectorForm::Constant(m) => m.clone(),
            ProjectorForm::Map(f) => f(t),
        }
    }

    pub fn constant_matrix(&self) -> Option<&DMatrix<f64>> {
        match &self.form {
            ProjectorForm::Constant(m) => Some(m),
            ProjectorForm::Map(_) => None,
        }
    }
}

/// Three projector families meant to partition the space into stable,
/// unstable and central directions.
#[derive(Clone)]
pub struct OrthogonalTriple {
    dim: usize,
    p: [ProjectorFamily; 3],
}

impl OrthogonalTriple {
    pub fn new(p: [ProjectorFamily; 3]) -> Result<Self> {
        let dim = p[0].dimension();
        if p.iter().any(|f| f.dimension() != dim) {
            return Err(Error::DimensionMismatch(
                "projector families must share one dimension".into(),
            ));
        }
        Ok(Self { dim, p })
    }

    /// Coordinate triple with consecutive blocks of the given ranks.
    pub fn coordinate(dim: usize, ranks: [usize; 3]) -> Result<Self> {
        if ranks.iter().sum::<usize>() != dim {
            return Err(Error::DimensionMismatch(format!(
                "ranks {ranks:?} must sum to the dimension {dim}"
            )));
        }
        Self::new([
            ProjectorFamily::coordinate(dim, 0, ranks[0])?,
            ProjectorFamily::coordinate(dim, ranks[0], ranks[1])?,
            ProjectorFamily::coordinate(dim, ranks[0] + ranks[1], ranks[2])?,
        ])
    }

    pub fn constant(ms: [DMatrix<f64>; 3]) -> Result<Self> {
        let [a, b, c] = ms;
        Self::new([
            ProjectorFamily::constant(a)?,
            ProjectorFamily::constant(b)?,
            ProjectorFamily::constant(c)?,
        ])
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// Family by index 1..=3.
    pub fn p(&self, i: usize) -> &ProjectorFamily {
        &self.p[i - 1]
    }

    pub fn at(&self, t: f64) -> [DMatrix<f64>; 3] {
        [self.p[0].at(t), self.p[1].at(t), self.p[2].at(t)]
    }
}

/// A two-parameter operator family on t >= s >= 0.
#[derive(Clone)]
pub struct EvolutionFamily {
    dim: usize,
    form: EvolutionForm,
}

#[derive(Clone)]
enum EvolutionForm {
    /// U(t, s) = f1(t,s) P1 + f2(t,s) P2 + f3(t,s) P3 with a fixed triple.
    BlockRate {
        projectors: Arc<[DMatrix<f64>; 3]>,
        coefficients: [CoeffFn; 3],
    },
    Map(Arc<dyn Fn(f64, f64) -> DMatrix<f64> + Send + Sync>),
}

impl EvolutionFamily {
    pub fn block_rate(projectors: [DMatrix<f64>; 3], coefficients: [CoeffFn; 3]) -> Result<Self> {
        let dim = projectors[0].nrows();
        if projectors
            .iter()
            .any(|p| p.nrows() != dim || p.ncols() != dim)
        {
            return Err(Error::DimensionMismatch(
                "block projectors must be square with one shared dimension".into(),
            ));
        }
        Ok(Self {
            dim,
            form: EvolutionForm::BlockRate {
                projectors: Arc::new(projectors),
                coefficients,
            },
        })
    }

    pub fn from_fn<F>(dim: usize, f: F) -> Self
    where
        F: Fn(f64, f64) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            form: EvolutionForm::Map(Arc::new(f)),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, move |_, _| DMatrix::identity(dim, dim))
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn at(&self, t: f64, s: f64) -> Result<DMatrix<f64>> {
        check_pair(t, s)?;
        Ok(match &self.form {
            EvolutionForm::BlockRate {
                projectors,
                coefficients,
            } => {
                let mut m = DMatrix::zeros(self.dim, self.dim);
                for (p, c) in projectors.iter().zip(coefficients) {
                    m += p * c(t, s);
                }
                m
            }
            EvolutionForm::Map(f) => f(t, s),
        })
    }
}

/// Application of an evolution family to one fixed vector, preassembled so
/// repeated evaluation over many time pairs avoids matrix construction.
/// Block forms skip identically-zero block components.
pub struct PreparedApply {
    inner: PreparedApplyInner,
}

enum PreparedApplyInner {
    Block {
        components: Vec<(CoeffFn, DVector<f64>, f64)>,
    },
    Generic {
        family: EvolutionFamily,
        v: DVector<f64>,
    },
}

impl EvolutionFamily {
    /// Prepare repeated evaluation of t, s -> ||U(t, s) v||.
    pub fn prepare_apply(&self, v: &DVector<f64>) -> PreparedApply {
        match &self.form {
            EvolutionForm::BlockRate {
                projectors,
                coefficients,
            } => {
                let mut components = Vec::new();
                for (p, c) in projectors.iter().zip(coefficients) {
                    let w = p * v;
                    let n = w.norm();
                    if n > 0.0 {
                        components.push((c.clone(), w, n));
                    }
                }
                PreparedApply {
                    inner: PreparedApplyInner::Block { components },
                }
            }
            EvolutionForm::Map(_) => PreparedApply {
                inner: PreparedApplyInner::Generic {
                    family: self.clone(),
                    v: v.clone(),
                },
            },
        }
    }
}

impl PreparedApply {
    pub fn image_norm(&self, t: f64, s: f64) -> Result<f64> {
        check_pair(t, s)?;
        match &self.inner {
            PreparedApplyInner::Block { components } => match components.as_slice() {
                [] => Ok(0.0),
                [(c, _, n)] => Ok(c(t, s).abs() * n),
                comps => {
                    let mut acc: DVector<f64> = DVector::zeros(comps[0].1.len());
                    for (c, w, _) in comps {
                        acc.axpy(c(t, s), w, 1.0);
                    }
                    Ok(acc.norm())
                }
            },
            PreparedApplyInner::Generic { family, v } => Ok((family.at(t, s)? * v).norm()),
        }
    }
}

/// Analogous prepared application of an inverse family to one fixed vector.
pub struct PreparedInverseApply {
    inner: PreparedInverseInner,
}

enum PreparedInverseInner {
    Closed {
        coeff: CoeffFn,
        norm: f64,
    },
    Generic {
        u: EvolutionFamily,
        p: ProjectorFamily,
        family_index: usize,
        eps_rank: f64,
        v: DVector<f64>,
    },
}

impl PreparedInverseApply {
    pub fn image_norm(&self, t: f64, s: f64) -> Result<f64> {
        match &self.inner {
            PreparedInverseInner::Closed { coeff, norm } => {
                check_pair(t, s)?;
                Ok(coeff(t, s).abs() * norm)
            }
            PreparedInverseInner::Generic {
                u,
                p,
                family_index,
                eps_rank,
                v,
            } => Ok((build_inverse_single(u, p, *family_index, t, s, *eps_rank)? * v).norm()),
        }
    }
}

/// Structure and inverse tolerances; all overridable from scenario files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub eps_struct: f64,
    pub eps_coc: f64,
    pub eps_inv: f64,
    pub eps_rank: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eps_struct: 1e-8,
            eps_coc: 1e-8,
            eps_inv: 1e-7,
            eps_rank: 1e-8,
        }
    }
}

/// Orthonormal basis of Range P(t), selected by singular values above
/// `eps_rank`. A singular value inside [eps_rank/10, 10 eps_rank] leaves the
/// rank ambiguous and is reported as an error.
pub fn range_basis(p: &ProjectorFamily, t: f64, eps_rank: f64) -> Result<DMatrix<f64>> {
    check_time(t)?;
    let m = p.at(t);
    let n = m.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let svd = m.svd(true, false);
    let sv = &svd.singular_values;
    for &s in sv.iter() {
        if s >= eps_rank / 10.0 && s <= eps_rank * 10.0 {
            return Err(Error::IllConditionedProjector {
                time: t,
                value: s,
                threshold: eps_rank,
            });
        }
    }
    let u = svd.u.expect("svd requested u");
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].partial_cmp(&sv[a]).unwrap());
    let keep: Vec<usize> = order.into_iter().filter(|&i| sv[i] > eps_rank).collect();
    let mut basis = DMatrix::zeros(n, keep.len());
    for (col, &i) in keep.iter().enumerate() {
        basis.set_column(col, &u.column(i));
    }
    Ok(basis)
}

/// Largest and smallest singular value of U(t, s) restricted to Range P(s).
///
/// `sup_norm` is the best constant in ||U(t,s) x|| <= c ||x|| over x in the
/// range; `1/min_gain` is the best constant in ||x|| <= c ||U(t,s) x||.
/// A rank-zero range yields the sentinel (0, +inf).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestrictedNorms {
    pub sup_norm: f64,
    pub min_gain: f64,
}

pub fn restricted_norms(
    u: &EvolutionFamily,
    p: &ProjectorFamily,
    t: f64,
    s: f64,
    eps_rank: f64,
) -> Result<RestrictedNorms> {
    check_pair(t, s)?;
    let basis = range_basis(p, s, eps_rank)?;
    if basis.ncols() == 0 {
        return Ok(RestrictedNorms {
            sup_norm: 0.0,
            min_gain: f64::INFINITY,
        });
    }
    let m = u.at(t, s)? * basis;
    let sv = m.singular_values();
    let sup = sv.iter().fold(0.0_f64, |acc, &x| acc.max(x));
    let min = sv.iter().fold(f64::INFINITY, |acc, &x| acc.min(x));
    Ok(RestrictedNorms {
        sup_norm: sup,
        min_gain: min,
    })
}

/// Relative numerical rank of a rectangular matrix.
fn relative_rank(m: &DMatrix<f64>, eps_rank: f64) -> (usize, f64) {
    if m.nrows() == 0 || m.ncols() == 0 {
        return (0, 0.0);
    }
    let sv = m.clone().singular_values();
    let smax = sv.iter().fold(0.0_f64, |acc, &x| acc.max(x));
    if smax == 0.0 {
        return (0, 0.0);
    }
    let rank = sv.iter().filter(|&&x| x > eps_rank * smax).count();
    (rank, smax)
}

/// Moore-Penrose pseudoinverse with a cutoff relative to the top singular value.
fn pseudo_inverse(m: &DMatrix<f64>, eps_rank: f64) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let sv = &svd.singular_values;
    let smax = sv.iter().fold(0.0_f64, |acc, &x| acc.max(x));
    let cutoff = eps_rank * smax;
    let k = sv.len();
    let mut sigma_inv = DMatrix::zeros(k, k);
    for i in 0..k {
        if sv[i] > cutoff && sv[i] > 0.0 {
            sigma_inv[(i, i)] = 1.0 / sv[i];
        }
    }
    v_t.transpose() * sigma_inv * u.transpose()
}

/// Construct the inverse of U(t, s) restricted to Range P(s), extended by zero
/// off Range P(t). Errors if the restriction is rank deficient.
fn build_inverse_single(
    u: &EvolutionFamily,
    p: &ProjectorFamily,
    family_index: usize,
    t: f64,
    s: f64,
    eps_rank: f64,
) -> Result<DMatrix<f64>> {
    check_pair(t, s)?;
    let n = p.dimension();
    let basis_s = range_basis(p, s, eps_rank)?;
    let basis_t = range_basis(p, t, eps_rank)?;
    if basis_s.ncols() != basis_t.ncols() {
        return Err(Error::NotStronglyInvariant {
            family: family_index,
            t,
            s,
            reason: format!(
                "range ranks differ: {} at s, {} at t",
                basis_s.ncols(),
                basis_t.ncols()
            ),
        });
    }
    if basis_s.ncols() == 0 {
        return Ok(DMatrix::zeros(n, n));
    }
    let a = u.at(t, s)? * &basis_s;
    let (rank, _) = relative_rank(&a, eps_rank);
    if rank < basis_s.ncols() {
        return Err(Error::NotStronglyInvariant {
            family: family_index,
            t,
            s,
            reason: format!(
                "U(t,s) restricted to the range has rank {rank} < {}",
                basis_s.ncols()
            ),
        });
    }
    Ok(basis_s * pseudo_inverse(&a, eps_rank) * p.at(t))
}

/// Construct both restricted inverses V2(t, s), V3(t, s) for a triple.
pub fn build_inverses(
    u: &EvolutionFamily,
    triple: &OrthogonalTriple,
    t: f64,
    s: f64,
    eps_rank: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let v2 = build_inverse_single(u, triple.p(2), 2, t, s, eps_rank)?;
    let v3 = build_inverse_single(u, triple.p(3), 3, t, s, eps_rank)?;
    Ok((v2, v3))
}

/// Per-axiom maximum residuals over a grid. Residuals are absolute spectral
/// norms of the defect matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureReport {
    /// Defect of U(t, t) = I.
    pub identity_max: f64,
    /// Defect of the composition law U(t, t0) = U(t, s) U(s, t0).
    pub cocycle_max: f64,
    /// Defect of P1 + P2 + P3 = I.
    pub partition_max: f64,
    /// Defect of Pi Pj = 0 for i != j.
    pub cross_max: f64,
    /// Defect of P^2 = P.
    pub idempotency_max: f64,
    /// Defect of U(t, s) P(s) = P(t) U(t, s) for all three families.
    pub invariance_max: f64,
    /// Largest sampled operator norm of each projector family. Recorded for
    /// inspection; no bound is imposed.
    pub projector_norm_max: [f64; 3],
    pub times_checked: usize,
    pub pairs_checked: usize,
    pub chains_checked: usize,
    pub tolerances: Tolerances,
    pub passed: bool,
}

/// Evaluate every structural axiom on the grid and report maximum residuals.
pub fn check_structure(
    u: &EvolutionFamily,
    triple: &OrthogonalTriple,
    grid: &DeltaGrid,
    tolerances: &Tolerances,
) -> Result<StructureReport> {
    if u.dimension() != triple.dimension() {
        return Err(Error::DimensionMismatch(format!(
            "evolution family dimension {} != triple dimension {}",
            u.dimension(),
            triple.dimension()
        )));
    }
    let n = u.dimension();
    let eye = DMatrix::<f64>::identity(n, n);
    let times = grid.times.times();

    let mut identity_max = 0.0_f64;
    let mut partition_max = 0.0_f64;
    let mut cross_max = 0.0_f64;
    let mut idempotency_max = 0.0_f64;
    let mut projector_norm_max = [0.0_f64; 3];
    let projs: Vec<[DMatrix<f64>; 3]> = times.iter().map(|&t| triple.at(t)).collect();
    for (&t, ps) in times.iter().zip(&projs) {
        identity_max = identity_max.max(spectral_norm(&(u.at(t, t)? - &eye)));
        let sum = &ps[0] + &ps[1] + &ps[2];
        partition_max = partition_max.max(spectral_norm(&(sum - &eye)));
        for (i, p) in ps.iter().enumerate() {
            idempotency_max = idempotency_max.max(spectral_norm(&(p * p - p)));
            projector_norm_max[i] = projector_norm_max[i].max(spectral_norm(p));
            for (j, q) in ps.iter().enumerate() {
                if i != j {
                    cross_max = cross_max.max(spectral_norm(&(p * q)));
                }
            }
        }
    }

    let mut u_cache: HashMap<(usize, usize), DMatrix<f64>> = HashMap::new();
    let mut u_at = |it: usize, is: usize| -> Result<DMatrix<f64>> {
        if let Some(m) = u_cache.get(&(it, is)) {
            return Ok(m.clone());
        }
        let m = u.at(times[it], times[is])?;
        u_cache.insert((it, is), m.clone());
        Ok(m)
    };

    let mut invariance_max = 0.0_f64;
    let index_pairs = grid.index_pairs();
    for &(it, is) in &index_pairs {
        let ut = u_at(it, is)?;
        for (p_s, p_t) in projs[is].iter().zip(&projs[it]) {
            let d = &ut * p_s - p_t * &ut;
            invariance_max = invariance_max.max(spectral_norm(&d));
        }
    }

    let mut cocycle_max = 0.0_f64;
    let mut chains_checked = 0usize;
    let nt = times.len();
    for i in 0..nt {
        for j in 0..=i {
            for k in 0..=j {
                let whole = u_at(i, k)?;
                let split = u_at(i, j)? * u_at(j, k)?;
                cocycle_max = cocycle_max.max(spectral_norm(&(whole - split)));
                chains_checked += 1;
            }
        }
    }

    let passed = identity_max <= tolerances.eps_struct
        && cocycle_max <= tolerances.eps_coc
        && partition_max <= tolerances.eps_struct
        && cross_max <= tolerances.eps_struct
        && idempotency_max <= tolerances.eps_struct
        && invariance_max <= tolerances.eps_struct;

    Ok(StructureReport {
        identity_max,
        cocycle_max,
        partition_max,
        cross_max,
        idempotency_max,
        invariance_max,
        projector_norm_max,
        times_checked: times.len(),
        pairs_checked: index_pairs.len(),
        chains_checked,
        tolerances: *tolerances,
        passed,
    })
}

/// Residual maxima for the six properties of the constructed inverses.
///
/// Each residual is normalized by 1 + the magnitude of the quantities
/// compared, so a chain whose operators reach 1e17 is judged by relative
/// accuracy rather than by an absolute defect no double can express.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InverseReport {
    /// Rank of V(t,s) restricted to Range P(t) equals rank P(s) everywhere.
    pub rank_preserved: bool,
    /// U(t,s) V(t,s) P(t) = P(t).
    pub v2_max: f64,
    /// V(t,s) U(t,s) P(s) = P(s).
    pub v3_max: f64,
    /// V(t,t0) P(t) = V(s,t0) V(t,s) P(t).
    pub v4_max: f64,
    /// V(t,s) P(t) = P(s) V(t,s) P(t).
    pub v5_max: f64,
    /// V(t,t) P(t) = P(t).
    pub v6_max: f64,
    pub pairs_checked: usize,
    pub chains_checked: usize,
    pub eps_inv: f64,
    pub passed: bool,
}

fn scaled_defect(lhs: &DMatrix<f64>, rhs: &DMatrix<f64>) -> f64 {
    let defect = spectral_norm(&(lhs - rhs));
    defect / (1.0 + spectral_norm(lhs).max(spectral_norm(rhs)))
}

/// Build the inverses over a grid and verify their defining properties.
pub fn verify_inverse_construction(
    u: &EvolutionFamily,
    triple: &OrthogonalTriple,
    grid: &DeltaGrid,
    tolerances: &Tolerances,
) -> Result<InverseReport> {
    let times = grid.times.times();
    let eps_rank = tolerances.eps_rank;
    let mut rank_preserved = true;
    let mut v2_max = 0.0_f64;
    let mut v3_max = 0.0_f64;
    let mut v4_max = 0.0_f64;
    let mut v5_max = 0.0_f64;
    let mut v6_max = 0.0_f64;

    let index_pairs = grid.index_pairs();
    let mut pairs_checked = 0usize;
    let mut chains_checked = 0usize;

    for (family_index, p) in [(2usize, triple.p(2)), (3usize, triple.p(3))] {
        let mut v_cache: HashMap<(usize, usize), DMatrix<f64>> = HashMap::new();
        let mut v_at = |it: usize, is: usize| -> Result<DMatrix<f64>> {
            if let Some(m) = v_cache.get(&(it, is)) {
                return Ok(m.clone());
            }
            let m = build_inverse_single(u, p, family_index, times[it], times[is], eps_rank)?;
            v_cache.insert((it, is), m.clone());
            Ok(m)
        };

        let rank_s: Vec<usize> = times
            .iter()
            .map(|&t| range_basis(p, t, eps_rank).map(|b| b.ncols()))
            .collect::<Result<_>>()?;
        let bases_t: Vec<DMatrix<f64>> = times
            .iter()
            .map(|&t| range_basis(p, t, eps_rank))
            .collect::<Result<_>>()?;
        let projs: Vec<DMatrix<f64>> = times.iter().map(|&t| p.at(t)).collect();

        for &(it, is) in &index_pairs {
            let (t, s) = (times[it], times[is]);
            let v = v_at(it, is)?;
            let u_ts = u.at(t, s)?;
            let vp_t = &v * &projs[it];

            let lhs_v2 = &u_ts * &vp_t;
            v2_max = v2_max.max(scaled_defect(&lhs_v2, &projs[it]));

            let lhs_v3 = &v * (&u_ts * &projs[is]);
            v3_max = v3_max.max(scaled_defect(&lhs_v3, &projs[is]));

            let rhs_v5 = &projs[is] * &vp_t;
            v5_max = v5_max.max(scaled_defect(&vp_t, &rhs_v5));

            if rank_s[is] > 0 {
                let (r, _) = relative_rank(&(&v * &bases_t[it]), eps_rank);
                if r != rank_s[is] {
                    rank_preserved = false;
                }
            }
            pairs_checked += 1;
        }

        for (it, &t) in times.iter().enumerate() {
            let v = v_at(it, it)?;
            let _ = t;
            v6_max = v6_max.max(scaled_defect(&(&v * &projs[it]), &projs[it]));
        }

        let nt = times.len();
        #[allow(clippy::needless_range_loop)] // triangular chain indices feed v_at too
        for i in 0..nt {
            for j in 0..=i {
                for k in 0..=j {
                    let whole = v_at(i, k)? * &projs[i];
                    let split = v_at(j, k)? * (v_at(i, j)? * &projs[i]);
                    v4_max = v4_max.max(scaled_defect(&whole, &split));
                    chains_checked += 1;
                }
            }
        }
    }

    let eps = tolerances.eps_inv;
    let passed = rank_preserved
        && v2_max <= eps
        && v3_max <= eps
        && v4_max <= eps
        && v5_max <= eps
        && v6_max <= eps;

    Ok(InverseReport {
        rank_preserved,
        v2_max,
        v3_max,
        v4_max,
        v5_max,
        v6_max,
        pairs_checked,
        chains_checked,
        eps_inv: eps,
        passed,
    })
}

/// Verification outcome stored on a pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairVerification {
    pub structure: StructureReport,
    pub inverses: InverseReport,
}

impl PairVerification {
    pub fn passed(&self) -> bool {
        self.structure.passed && self.inverses.passed
    }
}

#[derive(Clone)]
enum InverseEvaluator {
    /// V_j(t, s) = coeff_j(t, s) P_j for block operators with a constant
    /// triple; exact by construction.
    Closed { coeff2: CoeffFn, coeff3: CoeffFn },
    /// Least-squares construction on demand.
    Constructed,
}

/// An evolution family together with a compatible triple and evaluators for
/// the restricted inverses on the unstable and central ranges.
///
/// All evaluators are pure functions of their time arguments; a pair can be
/// shared freely across threads.
#[derive(Clone)]
pub struct CompatiblePair {
    u: EvolutionFamily,
    triple: OrthogonalTriple,
    inverses: InverseEvaluator,
    eps_rank: f64,
    pub metadata: Option<PairVerification>,
}

impl CompatiblePair {
    /// Pair whose inverses are constructed numerically on demand.
    pub fn new(u: EvolutionFamily, triple: OrthogonalTriple, eps_rank: f64) -> Result<Self> {
        if u.dimension() != triple.dimension() {
            return Err(Error::DimensionMismatch(format!(
                "evolution family dimension {} != triple dimension {}",
                u.dimension(),
                triple.dimension()
            )));
        }
        Ok(Self {
            u,
            triple,
            inverses: InverseEvaluator::Constructed,
            eps_rank,
            metadata: None,
        })
    }

    /// Pair with closed-form inverse coefficients (block operators).
    pub fn with_closed_inverses(
        u: EvolutionFamily,
        triple: OrthogonalTriple,
        coeff2: CoeffFn,
        coeff3: CoeffFn,
        eps_rank: f64,
    ) -> Result<Self> {
        let mut pair = Self::new(u, triple, eps_rank)?;
        pair.inverses = InverseEvaluator::Closed { coeff2, coeff3 };
        Ok(pair)
    }

    /// Verify structure and inverse properties on a grid, storing the reports.
    pub fn verified(
        u: EvolutionFamily,
        triple: OrthogonalTriple,
        grid: &DeltaGrid,
        tolerances: &Tolerances,
    ) -> Result<(Self, PairVerification)> {
        let structure = check_structure(&u, &triple, grid, tolerances)?;
        let inverses = verify_inverse_construction(&u, &triple, grid, tolerances)?;
        let verification = PairVerification {
            structure,
            inverses,
        };
        let mut pair = Self::new(u, triple, tolerances.eps_rank)?;
        pair.metadata = Some(verification.clone());
        Ok((pair, verification))
    }

    pub fn dimension(&self) -> usize {
        self.u.dimension()
    }

    pub fn evolution(&self) -> &EvolutionFamily {
        &self.u
    }

    pub fn triple(&self) -> &OrthogonalTriple {
        &self.triple
    }

    pub fn eps_rank(&self) -> f64 {
        self.eps_rank
    }

    pub fn u_at(&self, t: f64, s: f64) -> Result<DMatrix<f64>> {
        self.u.at(t, s)
    }

    pub fn p_at(&self, i: usize, t: f64) -> DMatrix<f64> {
        self.triple.p(i).at(t)
    }

    /// Inverse family by index, j in {2, 3}.
    pub fn v_at(&self, j: usize, t: f64, s: f64) -> Result<DMatrix<f64>> {
        assert!(j == 2 || j == 3, "inverse family index must be 2 or 3");
        check_pair(t, s)?;
        match &self.inverses {
            InverseEvaluator::Closed { coeff2, coeff3 } => {
                let c = if j == 2 { coeff2(t, s) } else { coeff3(t, s) };
                Ok(self.triple.p(j).at(s) * c)
            }
            InverseEvaluator::Constructed => {
                build_inverse_single(&self.u, self.triple.p(j), j, t, s, self.eps_rank)
            }
        }
    }

    /// Apply U(t, s) to a vector.
    pub fn apply_u(&self, t: f64, s: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.u.at(t, s)? * x)
    }

    pub fn apply_v(&self, j: usize, t: f64, s: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.v_at(j, t, s)? * x)
    }

    /// Prepare repeated evaluation of t, s -> ||V_j(t, s) v||.
    pub fn prepare_inverse_apply(&self, j: usize, v: &DVector<f64>) -> PreparedInverseApply {
        assert!(j == 2 || j == 3, "inverse family index must be 2 or 3");
        match (&self.inverses, self.triple.p(j).constant_matrix()) {
            (InverseEvaluator::Closed { coeff2, coeff3 }, Some(p)) => {
                let coeff = if j == 2 {
                    coeff2.clone()
                } else {
                    coeff3.clone()
                };
                let norm = (p * v).norm();
                PreparedInverseApply {
                    inner: PreparedInverseInner::Closed { coeff, norm },
                }
            }
            _ => PreparedInverseApply {
                inner: PreparedInverseInner::Generic {
                    u: self.u.clone(),
                    p: self.triple.p(j).clone(),
                    family_index: j,
                    eps_rank: self.eps_rank,
                    v: v.clone(),
                },
            },
        }
    }
}
