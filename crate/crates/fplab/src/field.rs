//! Grid functions with the exterior-zero Dirichlet encoding baked in.

use crate::error::{Error, Result};
use crate::geometry::GridDomain;
use std::sync::Arc;

/// Nodal values of a function on a grid. Exterior nodes are frozen at zero;
/// constructors reject anything else, so constants are not representable
/// (they do not belong to the discrete zero-trace space).
#[derive(Debug, Clone)]
pub struct Field {
    domain: Arc<GridDomain>,
    values: Vec<f64>,
    nonnegative: bool,
}

impl Field {
    pub fn zeros(domain: &Arc<GridDomain>) -> Self {
        Self {
            domain: Arc::clone(domain),
            values: vec![0.0; domain.node_count()],
            nonnegative: true,
        }
    }

    /// Build from raw nodal values, enforcing the exterior-zero invariant.
    pub fn from_values(domain: &Arc<GridDomain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.node_count() {
            return Err(Error::Field(format!(
                "value count {} does not match node count {}",
                values.len(),
                domain.node_count()
            )));
        }
        let mut nonnegative = true;
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Field(format!("non-finite value at node {i}")));
            }
            if !domain.is_interior(i) && v != 0.0 {
                return Err(Error::Field(format!(
                    "exterior node {i} carries value {v}; the exterior must be exactly zero"
                )));
            }
            if v < 0.0 {
                nonnegative = false;
            }
        }
        Ok(Self {
            domain: Arc::clone(domain),
            values,
            nonnegative,
        })
    }

    /// Evaluate `f` at interior nodes, zero elsewhere.
    pub fn from_fn(domain: &Arc<GridDomain>, mut f: impl FnMut([f64; 2]) -> f64) -> Result<Self> {
        let values: Vec<f64> = (0..domain.node_count())
            .map(|i| {
                if domain.is_interior(i) {
                    f(domain.position(i))
                } else {
                    0.0
                }
            })
            .collect();
        Self::from_values(domain, values)
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
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

    /// True when no node carries a negative value.
    pub fn is_nonnegative(&self) -> bool {
        self.nonnegative
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

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min_over(&self, indices: &[usize]) -> f64 {
        indices
            .iter()
            .map(|&i| self.values[i])
            .fold(f64::INFINITY, f64::min)
    }

    /// Max over all nodes of `|self - other|`.
    pub fn sup_distance(&self, other: &Field) -> Result<f64> {
        self.check_same_domain(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Min over all nodes of `self - other` (negative = ordering violation).
    pub fn min_increment_from(&self, other: &Field) -> Result<f64> {
        self.check_same_domain(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(f64::INFINITY, |m, (a, b)| m.min(a - b)))
    }

    /// Apply `f` nodally at interior nodes; `f` must fix zero so the
    /// exterior stays admissible.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        let values: Vec<f64> = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if self.domain.is_interior(i) {
                    f(v)
                } else {
                    0.0
                }
            })
            .collect();
        Field::from_values(&self.domain, values)
    }

    /// Nodal power `max(u, 0)^q` (clamps solver-level negative roundoff).
    pub fn pow_clamped(&self, q: f64) -> Result<Field> {
        self.map(|v| if v <= 0.0 { 0.0 } else { v.powf(q) })
    }

    /// Nodal positive-part shift `(u - eps)^+`.
    pub fn shifted_positive_part(&self, eps: f64) -> Result<Field> {
        self.map(|v| (v - eps).max(0.0))
    }

    pub fn scale(&self, alpha: f64) -> Result<Field> {
        self.map(|v| alpha * v)
    }

    /// Convex blend `(1 - theta) self + theta other`.
    pub fn blend(&self, other: &Field, theta: f64) -> Result<Field> {
        self.check_same_domain(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (1.0 - theta) * a + theta * b)
            .collect();
        Field::from_values(&self.domain, values)
    }

    /// Reorder values by a node permutation (for reflection comparisons).
    pub fn permuted(&self, perm: &[usize]) -> Result<Field> {
        if perm.len() != self.values.len() {
            return Err(Error::Field("permutation length mismatch".into()));
        }
        let values = (0..self.values.len())
            .map(|i| self.values[perm[i]])
            .collect();
        Field::from_values(&self.domain, values)
    }

    pub fn check_same_domain(&self, other: &Field) -> Result<()> {
        if !Arc::ptr_eq(&self.domain, &other.domain) {
            return Err(Error::DomainMismatch);
        }
        Ok(())
    }

    pub fn check_bound_to(&self, domain: &Arc<GridDomain>) -> Result<()> {
        if !Arc::ptr_eq(&self.domain, domain) {
            return Err(Error::DomainMismatch);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_interval;

    #[test]
    fn exterior_zero_enforced() {
        let d = build_interval(-1.0, 1.0, 5, 0.0).unwrap();
        // constant shift violates the exterior encoding
        let shifted = vec![1.0; d.node_count()];
        assert!(Field::from_values(&d, shifted).is_err());
        let ok = Field::from_fn(&d, |_| 1.0).unwrap();
        assert_eq!(ok.values()[0], 0.0);
        assert_eq!(ok.values()[4], 0.0);
        assert!(ok.is_nonnegative());
    }

    #[test]
    fn domain_mismatch_detected() {
        let d1 = build_interval(-1.0, 1.0, 5, 0.0).unwrap();
        let d2 = build_interval(-1.0, 1.0, 5, 0.0).unwrap();
        let u = Field::zeros(&d1);
        let v = Field::zeros(&d2);
        assert!(u.sup_distance(&v).is_err());
    }

    #[test]
    fn nonnegativity_flag_tracks_values() {
        let d = build_interval(-1.0, 1.0, 5, 0.0).unwrap();
        let u = Field::from_fn(&d, |p| p[0]).unwrap();
        assert!(!u.is_nonnegative());
        assert!(u.pow_clamped(1.5).unwrap().is_nonnegative());
    }
}
