//! Projection operators onto simple closed convex sets, and the firm
//! quasi-nonexpansiveness sampler.

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::math::{self, check_dim};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum OperatorSpec {
    /// `{x : <normal, x> <= offset}`
    HalfspaceProj {
        normal: Vec<f64>,
        offset: f64,
    },
    /// `{x : <normal, x> = offset}`
    HyperplaneProj {
        normal: Vec<f64>,
        offset: f64,
    },
    BallProj {
        center: Vec<f64>,
        radius: f64,
    },
    BoxProj {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
}

impl OperatorSpec {
    /// Checks that the set is well defined and nonempty.
    pub fn validate(&self) -> Result<()> {
        match self {
            OperatorSpec::HalfspaceProj { normal, offset } | OperatorSpec::HyperplaneProj { normal, offset } => {
                if normal.is_empty() || !(math::norm_sq(normal) > 0.0) {
                    return Err(invalid("normal", "must be a nonzero vector"));
                }
                if !offset.is_finite() {
                    return Err(invalid("offset", "must be finite"));
                }
            }
            OperatorSpec::BallProj { center, radius } => {
                if center.is_empty() {
                    return Err(invalid("center", "must be nonempty"));
                }
                if !(*radius >= 0.0 && radius.is_finite()) {
                    return Err(invalid("radius", "must be non-negative and finite"));
                }
            }
            OperatorSpec::BoxProj { lower, upper } => {
                check_dim(lower.len(), upper.len())?;
                if lower.is_empty() {
                    return Err(invalid("lower", "must be nonempty"));
                }
                if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
                    return Err(invalid("upper", "box is empty"));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            OperatorSpec::HalfspaceProj { normal, .. } | OperatorSpec::HyperplaneProj { normal, .. } => normal.len(),
            OperatorSpec::BallProj { center, .. } => center.len(),
            OperatorSpec::BoxProj { lower, .. } => lower.len(),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(self.project(x))
    }

    pub(crate) fn project(&self, x: &[f64]) -> Vec<f64> {
        match self {
            OperatorSpec::HalfspaceProj { normal, offset } => {
                let excess = math::dot(normal, x) - offset;
                if excess <= 0.0 {
                    return x.to_vec();
                }
                let s = excess / math::norm_sq(normal);
                x.iter().zip(normal).map(|(xi, ni)| xi - s * ni).collect()
            }
            OperatorSpec::HyperplaneProj { normal, offset } => {
                let s = (math::dot(normal, x) - offset) / math::norm_sq(normal);
                x.iter().zip(normal).map(|(xi, ni)| xi - s * ni).collect()
            }
            OperatorSpec::BallProj { center, radius } => {
                let d = math::dist(x, center);
                if d <= *radius {
                    return x.to_vec();
                }
                let s = radius / d;
                x.iter().zip(center).map(|(xi, ci)| ci + s * (xi - ci)).collect()
            }
            OperatorSpec::BoxProj { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(xi, (l, u))| xi.clamp(*l, *u))
                .collect(),
        }
    }

    /// `|P x - x|^2`.
    pub(crate) fn residual_sq(&self, x: &[f64]) -> f64 {
        match self {
            OperatorSpec::HalfspaceProj { normal, offset } => {
                let excess = (math::dot(normal, x) - offset).max(0.0);
                excess * excess / math::norm_sq(normal)
            }
            OperatorSpec::HyperplaneProj { normal, offset } => {
                let e = math::dot(normal, x) - offset;
                e * e / math::norm_sq(normal)
            }
            OperatorSpec::BallProj { center, radius } => {
                let e = (math::dist(x, center) - radius).max(0.0);
                e * e
            }
            OperatorSpec::BoxProj { .. } => math::dist_sq(&self.project(x), x),
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.residual_sq(x) <= tol * tol
    }

    /// A point of the set.
    pub fn witness(&self) -> Vec<f64> {
        let origin = alloc::vec![0.0; self.dim()];
        self.project(&origin)
    }
}

/// A map with a computable fixed-point set, as needed by [`fqne_check`].
pub trait FixedPointOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    /// Some fixed point, ideally close to `z`.
    fn fixed_point_near(&self, z: &[f64]) -> Vec<f64>;
}

impl FixedPointOperator for OperatorSpec {
    fn dim(&self) -> usize {
        OperatorSpec::dim(self)
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.project(x)
    }
    fn fixed_point_near(&self, z: &[f64]) -> Vec<f64> {
        self.project(z)
    }
}

/// `x + factor (P x - x)`: firmly quasi-nonexpansive only for `factor <= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Relaxed<P> {
    pub inner: P,
    pub factor: f64,
}

impl<P: FixedPointOperator> FixedPointOperator for Relaxed<P> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let px = self.inner.apply(x);
        x.iter().zip(&px).map(|(xi, pi)| xi + self.factor * (pi - xi)).collect()
    }
    fn fixed_point_near(&self, z: &[f64]) -> Vec<f64> {
        self.inner.fixed_point_near(z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Identity {
    pub dim: usize,
}

impl FixedPointOperator for Identity {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn fixed_point_near(&self, z: &[f64]) -> Vec<f64> {
        z.to_vec()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FqneReport {
    pub samples: usize,
    /// Largest `|Tx - y|^2 + |Tx - x|^2 - |x - y|^2` seen.
    pub max_violation: f64,
    pub worst_sample: usize,
    pub passed: bool,
}

pub const FQNE_TOL: f64 = 1e-9;

/// Samples `x` uniformly in a ball of `region_radius` around a fixed point
/// and pairs it with fixed points `y` obtained from independent samples.
pub fn fqne_check<T: FixedPointOperator + ?Sized>(
    op: &T,
    samples: usize,
    region_radius: f64,
    rng_seed: u64,
) -> FqneReport {
    let d = op.dim();
    let zero = alloc::vec![0.0; d];
    let center = op.fixed_point_near(&zero);
    let mut r = rng::stream(rng_seed, 0);
    let draw = |r: &mut rng::LabRng| -> Vec<f64> {
        let dir = rng::unit_direction(r, d);
        let u: f64 = rand::Rng::gen(r);
        let rad = region_radius * math::powf(u, 1.0 / d as f64);
        center.iter().zip(&dir).map(|(c, v)| c + rad * v).collect()
    };
    let mut max_violation = f64::NEG_INFINITY;
    let mut worst_sample = 0;
    for s in 0..samples {
        let x = draw(&mut r);
        let y = match s % 3 {
            0 => op.fixed_point_near(&x),
            1 => center.clone(),
            _ => {
                let z = draw(&mut r);
                op.fixed_point_near(&z)
            }
        };
        let tx = op.apply(&x);
        let v = math::dist_sq(&tx, &y) + math::dist_sq(&tx, &x) - math::dist_sq(&x, &y);
        if v > max_violation {
            max_violation = v;
            worst_sample = s;
        }
    }
    if samples == 0 {
        max_violation = 0.0;
    }
    FqneReport {
        samples,
        max_violation,
        worst_sample,
        passed: max_violation <= FQNE_TOL,
    }
}
