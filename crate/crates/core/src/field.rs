//! Scalar fields sampled on a periodic grid.
//!
//! A [`ScalarField`] is the common currency of the crate: matter fields `u`,
//! potentials `φ`, coefficient fields `α`, `β` and conformal factors `ψ` are
//! all real arrays in x-fastest row-major node order, tagged with the id of
//! the manifold they live on. Fields are immutable values; every operation
//! returns a new field.

use std::ops::{Add, Mul, Sub};
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;

use crate::error::{CoreError, Result};

/// Identity of a grid; fields combine arithmetically only when their ids match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct ManifoldId(pub(crate) u64);

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

impl ManifoldId {
    pub(crate) fn fresh() -> Self {
        ManifoldId(NEXT_ID.fetch_add(1, Ordering::Relaxed))
    }

    pub fn raw(self) -> u64 {
        self.0
    }
}

/// Real-valued function sampled at the grid nodes, x-fastest row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
    manifold_id: ManifoldId,
}

impl ScalarField {
    pub(crate) fn from_values(manifold_id: ManifoldId, values: Vec<f64>) -> Self {
        ScalarField {
            values,
            manifold_id,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn manifold_id(&self) -> ManifoldId {
        self.manifold_id
    }

    /// Checks every entry is finite.
    pub fn ensure_finite(&self, what: &'static str) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(CoreError::NonFinite { what })
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Pointwise map into a new field on the same grid.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            values: self.values.iter().map(|&v| f(v)).collect(),
            manifold_id: self.manifold_id,
        }
    }

    /// Pointwise combination of two fields on the same grid.
    ///
    /// Panics if the fields live on different manifolds; use the checked
    /// operations on [`Manifold`](crate::Manifold) at API boundaries.
    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        assert_eq!(
            self.manifold_id, other.manifold_id,
            "fields bound to different manifolds"
        );
        ScalarField {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            manifold_id: self.manifold_id,
        }
    }

    /// `a·self + b·other`.
    pub fn lin_comb(&self, a: f64, other: &ScalarField, b: f64) -> ScalarField {
        self.zip_map(other, |x, y| a * x + b * y)
    }

    pub fn scale(&self, a: f64) -> ScalarField {
        self.map(|v| a * v)
    }

    /// Content hash of the raw bit pattern; used for solver-session caches.
    pub fn content_hash(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.manifold_id.0.hash(&mut h);
        for v in &self.values {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }

    /// I.i.d. uniform entries in `[-amplitude, amplitude]`.
    pub fn random_uniform<R: Rng>(
        manifold_id: ManifoldId,
        len: usize,
        amplitude: f64,
        rng: &mut R,
    ) -> ScalarField {
        ScalarField {
            values: (0..len)
                .map(|_| rng.gen_range(-amplitude..=amplitude))
                .collect(),
            manifold_id,
        }
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: f64) -> ScalarField {
        self.scale(rhs)
    }
}
