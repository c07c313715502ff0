//! Deterministic sample sets: seeded unit vectors and the documented x-sample
//! policy used when measuring envelopes of the canonical function.

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{range_basis, CompatiblePair};
use crate::error::Result;

/// Isotropic unit vector via normalized Gaussian coordinates (Box-Muller).
pub fn random_unit_vector(rng: &mut impl Rng, dim: usize) -> DVector<f64> {
    loop {
        let mut v = DVector::zeros(dim);
        let mut i = 0;
        while i < dim {
            let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.random_range(0.0..1.0);
            let radius = (-2.0 * u1.ln()).sqrt();
            let angle = std::f64::consts::TAU * u2;
            v[i] = radius * angle.cos();
            i += 1;
            if i < dim {
                v[i] = radius * angle.sin();
                i += 1;
            }
        }
        let norm = v.norm();
        if norm > 1e-9 {
            return v / norm;
        }
    }
}

/// A named sample vector; names key the exported tables.
#[derive(Debug, Clone)]
pub struct XSample {
    pub id: String,
    pub x: DVector<f64>,
}

/// Sample policy: all ambient basis vectors, all per-range basis vectors, and
/// a fixed count of seeded random unit vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct XSamplePolicy {
    pub include_basis: bool,
    pub include_range_basis: bool,
    pub random_unit: usize,
    pub seed: u64,
}

impl Default for XSamplePolicy {
    fn default() -> Self {
        Self {
            include_basis: true,
            include_range_basis: true,
            random_unit: 32,
            seed: 0,
        }
    }
}

impl XSamplePolicy {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    /// Build the sample set for a pair. Range bases are taken at t = 0.
    pub fn build(&self, pair: &CompatiblePair) -> Result<Vec<XSample>> {
        let n = pair.dimension();
        let mut out = Vec::new();
        if self.include_basis {
            for k in 0..n {
                let mut x = DVector::zeros(n);
                x[k] = 1.0;
                out.push(XSample {
                    id: format!("e{k}"),
                    x,
                });
            }
        }
        if self.include_range_basis {
            for i in 1..=3 {
                let basis = range_basis(pair.triple().p(i), 0.0, pair.eps_rank())?;
                for c in 0..basis.ncols() {
                    out.push(XSample {
                        id: format!("p{i}-b{c}"),
                        x: basis.column(c).into_owned(),
                    });
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for k in 0..self.random_unit {
            out.push(XSample {
                id: format!("rand{k:02}"),
                x: random_unit_vector(&mut rng, n),
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::OrthogonalTriple;
    use crate::builders::build_example2;
    use crate::rates::RateQuadruple;

    #[test]
    fn unit_vectors_are_unit_and_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_unit_vector(&mut rng, 7);
        assert!((a.norm() - 1.0).abs() < 1e-12);
        let mut rng2 = ChaCha8Rng::seed_from_u64(5);
        let b = random_unit_vector(&mut rng2, 7);
        assert_eq!(a, b);
    }

    #[test]
    fn policy_produces_basis_range_and_random_samples() {
        let rates = RateQuadruple::exponential([1.0; 4]).unwrap();
        let triple = OrthogonalTriple::coordinate(3, [1, 1, 1]).unwrap();
        let pair = build_example2(&rates, &triple).unwrap().compatible_pair();
        let samples = XSamplePolicy::default().build(&pair).unwrap();
        // 3 basis + 3 range basis + 32 random
        assert_eq!(samples.len(), 38);
        assert!(samples.iter().all(|s| (s.x.norm() - 1.0).abs() < 1e-9));
    }
}
