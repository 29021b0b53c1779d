use alloc::vec::Vec;

use crate::error::Result;
use crate::math;
use crate::rate_kernel::DescentConstants;
use crate::zoo::{smooth_constants, FeasibilityInstance, SmoothInstance};

/// How the reference point for iterate distances was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LimitKind {
    /// Projection of the final iterate onto the solution set.
    Projection,
    /// The unique minimizer of the objective.
    Argmin,
    FinalIterate,
    /// Scalar processes have no iterates.
    NotApplicable,
}

/// A randomized method `x+ = step(x, i, alpha)` with `i` drawn from
/// `index_weights`, together with its gap `h - h*` and residual `g`.
pub trait DescentMethod {
    fn name(&self) -> &str;
    fn x0(&self) -> &[f64];
    fn index_weights(&self) -> &[f64];
    fn constants(&self) -> DescentConstants;
    fn gap(&self, x: &[f64]) -> Result<f64>;
    fn residual(&self, x: &[f64]) -> f64;
    fn step(&self, x: &[f64], index: usize, alpha: f64) -> Vec<f64>;
    fn limit_estimate(&self, x_final: &[f64]) -> Result<(Vec<f64>, LimitKind)>;
}

/// Random Krasnoselskii–Mann iteration `x+ = x + beta (T_i x - x)` over the
/// projections of a feasibility instance.
#[derive(Debug, Clone, Copy)]
pub struct Rkmm<'a> {
    inst: &'a FeasibilityInstance,
}

impl<'a> Rkmm<'a> {
    pub fn new(inst: &'a FeasibilityInstance) -> Self {
        Rkmm { inst }
    }

    pub fn instance(&self) -> &FeasibilityInstance {
        self.inst
    }
}

impl DescentMethod for Rkmm<'_> {
    fn name(&self) -> &str {
        self.inst.name()
    }

    fn x0(&self) -> &[f64] {
        self.inst.x0()
    }

    fn index_weights(&self) -> &[f64] {
        self.inst.weights()
    }

    fn constants(&self) -> DescentConstants {
        DescentConstants {
            c1: 1.0,
            c2: self.inst.rho(),
            c3: 1.0,
        }
    }

    fn gap(&self, x: &[f64]) -> Result<f64> {
        Ok(self.inst.dist_to_f(x)?.dist_sq)
    }

    fn residual(&self, x: &[f64]) -> f64 {
        self.inst.residual_unchecked(x)
    }

    fn step(&self, x: &[f64], index: usize, alpha: f64) -> Vec<f64> {
        let px = self.inst.operators()[index].project(x);
        x.iter().zip(&px).map(|(xi, pi)| xi + alpha * (pi - xi)).collect()
    }

    fn limit_estimate(&self, x_final: &[f64]) -> Result<(Vec<f64>, LimitKind)> {
        Ok((self.inst.dist_to_f(x_final)?.projection, LimitKind::Projection))
    }
}

/// Randomized subspace descent `x+ = x - (beta / L_i) I_i B_i^-1 grad_i f(x)`.
#[derive(Debug, Clone)]
pub struct Rsd<'a> {
    inst: &'a SmoothInstance,
    constants: DescentConstants,
}

impl<'a> Rsd<'a> {
    pub fn new(inst: &'a SmoothInstance) -> Self {
        Rsd {
            inst,
            constants: smooth_constants(inst),
        }
    }

    pub fn instance(&self) -> &SmoothInstance {
        self.inst
    }
}

impl DescentMethod for Rsd<'_> {
    fn name(&self) -> &str {
        self.inst.name()
    }

    fn x0(&self) -> &[f64] {
        self.inst.x0()
    }

    fn index_weights(&self) -> &[f64] {
        self.inst.weights()
    }

    fn constants(&self) -> DescentConstants {
        self.constants
    }

    fn gap(&self, x: &[f64]) -> Result<f64> {
        Ok((self.inst.value(x)? - self.inst.f_star()).max(0.0))
    }

    fn residual(&self, x: &[f64]) -> f64 {
        math::norm_sq(&self.inst.spec().objective.grad(x))
    }

    fn step(&self, x: &[f64], index: usize, alpha: f64) -> Vec<f64> {
        let grad = self.inst.spec().objective.grad(x);
        let dir = self.inst.restrict(index, &grad);
        let s = alpha / self.inst.block_constants().lipschitz[index];
        let mut out = x.to_vec();
        for (&j, d) in self.inst.decomposition().blocks()[index].iter().zip(&dir) {
            out[j] -= s * d;
        }
        out
    }

    fn limit_estimate(&self, _x_final: &[f64]) -> Result<(Vec<f64>, LimitKind)> {
        Ok((self.inst.argmin().to_vec(), LimitKind::Argmin))
    }
}

/// Exact `E[|x+ - x|^2]` over the index law.
pub fn expected_step_sq<M: DescentMethod + ?Sized>(m: &M, x: &[f64], alpha: f64) -> f64 {
    m.index_weights()
        .iter()
        .enumerate()
        .map(|(i, w)| w * math::dist_sq(&m.step(x, i, alpha), x))
        .sum()
}

/// Cumulative weights for inverse-CDF index draws.
pub(crate) fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

pub(crate) fn draw_index<R: rand::Rng + ?Sized>(rng: &mut R, cum: &[f64]) -> usize {
    let u: f64 = rng.gen::<f64>() * cum[cum.len() - 1];
    cum.iter().position(|c| u < *c).unwrap_or(cum.len() - 1)
}
