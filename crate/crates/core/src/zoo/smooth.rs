//! Smooth objectives with a coordinate-block decomposition and per-block SPD
//! preconditioners, plus the KL-exponent sampler.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math::{self, check_dim, Cholesky, Matrix};
use crate::rate_kernel::PhiSpec;
use crate::rng;
use crate::stats::{self, LineFit};

/// Caller-supplied objective; not serializable.
#[derive(Debug, Clone, Copy)]
pub struct CustomObjective {
    pub dim: usize,
    pub f: fn(&[f64]) -> f64,
    pub grad: fn(&[f64]) -> Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Objective {
    /// `f(x) = x^T A x / 2 - b^T x`.
    Quadratic { a: Matrix, b: Vec<f64> },
    /// `f(x) = sum_i x_i^(2p)`.
    EvenPowerSum { p: u32, dim: usize },
    #[cfg_attr(feature = "serde", serde(skip))]
    Custom(CustomObjective),
}

impl PartialEq for CustomObjective {
    /// Custom objectives are never considered equal; function pointers have
    /// no stable identity.
    fn eq(&self, _: &Self) -> bool {
        false
    }
}

impl Objective {
    pub fn dim(&self) -> usize {
        match self {
            Objective::Quadratic { a, .. } => a.dim(),
            Objective::EvenPowerSum { dim, .. } => *dim,
            Objective::Custom(c) => c.dim,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Objective::Quadratic { a, b } => 0.5 * math::dot(x, &a.mul_vec(x)) - math::dot(b, x),
            Objective::EvenPowerSum { p, .. } => x.iter().map(|v| int_pow(*v, 2 * p)).sum(),
            Objective::Custom(c) => (c.f)(x),
        }
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Objective::Quadratic { a, b } => a.mul_vec(x).iter().zip(b).map(|(ax, bi)| ax - bi).collect(),
            Objective::EvenPowerSum { p, .. } => {
                let k = 2.0 * *p as f64;
                x.iter().map(|v| k * int_pow(*v, 2 * p - 1)).collect()
            }
            Objective::Custom(c) => (c.grad)(x),
        }
    }
}

fn int_pow(x: f64, n: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..n {
        acc *= x;
    }
    acc
}

/// Coordinate-block partition with a preconditioner per block.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceDecomposition {
    blocks: Vec<Vec<usize>>,
    preconditioners: Vec<Matrix>,
    factors: Vec<Cholesky>,
    gamma: Vec<f64>,
    big_gamma: Vec<f64>,
}

impl SubspaceDecomposition {
    /// `preconditioners = None` means identity on every block.
    pub fn new(dim: usize, blocks: Vec<Vec<usize>>, preconditioners: Option<Vec<Matrix>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(invalid("blocks", "need at least one block"));
        }
        let mut seen = vec![false; dim];
        for b in &blocks {
            if b.is_empty() {
                return Err(invalid("blocks", "blocks must be nonempty"));
            }
            for &i in b {
                if i >= dim {
                    return Err(Error::IndexOutOfRange { index: i, count: dim });
                }
                if seen[i] {
                    return Err(invalid("blocks", "blocks must be disjoint"));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(invalid("blocks", "blocks must cover every coordinate"));
        }
        let preconditioners = match preconditioners {
            Some(p) => {
                check_dim(blocks.len(), p.len())?;
                for (b, m) in blocks.iter().zip(&p) {
                    check_dim(b.len(), m.dim())?;
                }
                p
            }
            None => blocks.iter().map(|b| Matrix::identity(b.len())).collect(),
        };
        let mut factors = Vec::with_capacity(blocks.len());
        let mut gamma = Vec::with_capacity(blocks.len());
        let mut big_gamma = Vec::with_capacity(blocks.len());
        for m in &preconditioners {
            factors.push(Cholesky::factor(m)?);
            let ev = m.symmetric_eigenvalues();
            gamma.push(ev[0]);
            big_gamma.push(ev[ev.len() - 1]);
        }
        Ok(SubspaceDecomposition {
            blocks,
            preconditioners,
            factors,
            gamma,
            big_gamma,
        })
    }

    pub fn singletons(dim: usize) -> Self {
        Self::new(dim, (0..dim).map(|i| vec![i]).collect(), None).expect("singleton partition is valid")
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn preconditioners(&self) -> &[Matrix] {
        &self.preconditioners
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// `Lambda = min_i lambda_max(B_i)^-2`.
    pub fn lambda(&self) -> f64 {
        self.big_gamma
            .iter()
            .map(|g| 1.0 / (g * g))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Serializable description of a smooth instance.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SmoothSpec {
    pub name: String,
    pub objective: Objective,
    pub blocks: Vec<Vec<usize>>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub preconditioners: Option<Vec<Matrix>>,
    pub x0: Vec<f64>,
    pub certified_kappa: f64,
    pub certified_cbar: f64,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub weights: Option<Vec<f64>>,
    /// Required for custom objectives, computed otherwise.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub lipschitz: Option<Vec<f64>>,
    /// Required for custom objectives, computed otherwise.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub argmin: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlockConstants {
    pub gamma: Vec<f64>,
    pub big_gamma: Vec<f64>,
    pub lambda: f64,
    pub lipschitz: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothInstance {
    spec: SmoothSpec,
    decomposition: SubspaceDecomposition,
    argmin: Vec<f64>,
    f_star: f64,
    constants: BlockConstants,
    weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KlFit {
    pub kappa_hat: f64,
    pub cbar_hat: f64,
    /// Largest relative shortfall of `|grad f|` against the certified bound.
    pub certificate_violation: f64,
    pub line: LineFit,
}

impl SmoothInstance {
    pub fn new(spec: SmoothSpec) -> Result<Self> {
        let d = spec.objective.dim();
        if d == 0 {
            return Err(invalid("objective", "dimension must be positive"));
        }
        check_dim(d, spec.x0.len())?;
        if !(spec.certified_kappa >= 0.5 && spec.certified_kappa < 1.0) {
            return Err(invalid(
                "certified_kappa",
                "KL exponent must lie in [1/2, 1); smaller exponents are impossible for smooth functions",
            ));
        }
        if !(spec.certified_cbar > 0.0) {
            return Err(invalid("certified_cbar", "must be positive"));
        }
        let decomposition = SubspaceDecomposition::new(d, spec.blocks.clone(), spec.preconditioners.clone())?;
        let m = decomposition.len();
        let weights = match &spec.weights {
            Some(w) => {
                check_dim(m, w.len())?;
                let total: f64 = w.iter().sum();
                if w.iter().any(|v| !(*v > 0.0)) || (total - 1.0).abs() > 1e-12 {
                    return Err(invalid("weights", "must be positive and sum to 1"));
                }
                w.clone()
            }
            None => vec![1.0 / m as f64; m],
        };
        let argmin = match (&spec.objective, &spec.argmin) {
            (_, Some(w)) => {
                check_dim(d, w.len())?;
                w.clone()
            }
            (Objective::Quadratic { a, b }, None) => {
                check_dim(d, b.len())?;
                if b.iter().all(|v| *v == 0.0) {
                    vec![0.0; d]
                } else {
                    Cholesky::factor(a)?.solve(b)
                }
            }
            (Objective::EvenPowerSum { .. }, None) => vec![0.0; d],
            (Objective::Custom(_), None) => {
                return Err(invalid("argmin", "custom objectives must declare a minimizer"))
            }
        };
        if let Objective::EvenPowerSum { p, .. } = spec.objective {
            if p == 0 {
                return Err(invalid("p", "power must be at least 1"));
            }
        }
        let grad_star = spec.objective.grad(&argmin);
        if math::norm(&grad_star) > 1e-10 {
            return Err(invalid("argmin", "gradient does not vanish at the declared minimizer"));
        }
        let f_star = spec.objective.value(&argmin);
        let lipschitz = match (&spec.objective, &spec.lipschitz) {
            (_, Some(l)) => {
                check_dim(m, l.len())?;
                if l.iter().any(|v| !(*v > 0.0)) {
                    return Err(invalid("lipschitz", "must be positive"));
                }
                l.clone()
            }
            (Objective::Custom(_), None) => return Err(Error::MissingLipschitz),
            (Objective::Quadratic { a, .. }, None) => decomposition
                .blocks
                .iter()
                .zip(&decomposition.factors)
                .map(|(b, fac)| {
                    let ev = fac.whiten(&a.submatrix(b)).symmetric_eigenvalues();
                    ev[ev.len() - 1]
                })
                .collect(),
            (Objective::EvenPowerSum { p, .. }, None) => {
                // On {f <= f(x0)} every |x_i| <= f0^(1/2p), so the diagonal
                // Hessian entries are bounded by 2p(2p-1) f0^((p-1)/p).
                let f0 = spec.objective.value(&spec.x0);
                let pf = *p as f64;
                let bound = 2.0 * pf * (2.0 * pf - 1.0) * math::powf(f0, (pf - 1.0) / pf);
                decomposition.gamma.iter().map(|g| bound / g).collect()
            }
        };
        if lipschitz.iter().any(|v| !(*v > 0.0)) {
            return Err(invalid(
                "lipschitz",
                "block Lipschitz constants must be positive; is x0 the minimizer?",
            ));
        }
        let constants = BlockConstants {
            gamma: decomposition.gamma.clone(),
            big_gamma: decomposition.big_gamma.clone(),
            lambda: decomposition.lambda(),
            lipschitz,
        };
        Ok(SmoothInstance {
            spec,
            decomposition,
            argmin,
            f_star,
            constants,
            weights,
        })
    }

    pub fn spec(&self) -> &SmoothSpec {
        &self.spec
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn dim(&self) -> usize {
        self.spec.x0.len()
    }

    pub fn x0(&self) -> &[f64] {
        &self.spec.x0
    }

    pub fn argmin(&self) -> &[f64] {
        &self.argmin
    }

    pub fn f_star(&self) -> f64 {
        self.f_star
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rho(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn decomposition(&self) -> &SubspaceDecomposition {
        &self.decomposition
    }

    pub fn block_constants(&self) -> &BlockConstants {
        &self.constants
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.spec.objective.value(x))
    }

    pub fn smooth_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(self.spec.objective.grad(x))
    }

    /// `B_i^-1` applied to the block-`i` part of `grad`.
    pub(crate) fn restrict(&self, block: usize, grad: &[f64]) -> Vec<f64> {
        let idx = &self.decomposition.blocks[block];
        let part: Vec<f64> = idx.iter().map(|&j| grad[j]).collect();
        self.decomposition.factors[block].solve(&part)
    }

    pub fn restricted_grad(&self, block: usize, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        let m = self.decomposition.len();
        if block >= m {
            return Err(Error::IndexOutOfRange { index: block, count: m });
        }
        Ok(self.restrict(block, &self.spec.objective.grad(x)))
    }

    /// `phi(t) = t^(2 kappa) / (cbar (1 - kappa))^2` on `[0, tau)`.
    pub fn phi(&self, tau: f64) -> Result<PhiSpec> {
        PhiSpec::kl(self.spec.certified_kappa, self.spec.certified_cbar, tau)
    }

    fn sample_radius_hi(&self) -> f64 {
        math::dist(&self.spec.x0, &self.argmin).max(1e-3)
    }

    /// Regresses `ln |grad f|` on `ln (f - f*)` over points at log-uniform
    /// radii around the minimizer and checks the certified KL inequality.
    pub fn kl_fit(&self, samples: usize, rng_seed: u64) -> Result<KlFit> {
        let d = self.dim();
        let kappa = self.spec.certified_kappa;
        let cbar = self.spec.certified_cbar;
        let hi = self.sample_radius_hi();
        let mut r = rng::stream(rng_seed, 3);
        let mut xs = Vec::with_capacity(samples);
        let mut ys = Vec::with_capacity(samples);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..samples {
            let radius = rng::log_uniform(&mut r, 1e-6 * hi, hi);
            let dir = rng::unit_direction(&mut r, d);
            let x: Vec<f64> = self.argmin.iter().zip(&dir).map(|(a, u)| a + radius * u).collect();
            let gap = self.spec.objective.value(&x) - self.f_star;
            let gn = math::norm(&self.spec.objective.grad(&x));
            if !(gap > 0.0 && gn > 0.0) {
                continue;
            }
            let bound = math::powf(gap, kappa) / (cbar * (1.0 - kappa));
            let v = (bound - gn) / bound.max(gn);
            worst = worst.max(v);
            xs.push(math::ln(gap));
            ys.push(math::ln(gn));
        }
        if xs.len() < 2 {
            return Err(Error::DegenerateSamples("no non-stationary samples".into()));
        }
        let line = stats::linear_fit(&xs, &ys)?;
        let kappa_hat = line.slope;
        Ok(KlFit {
            kappa_hat,
            cbar_hat: math::exp(-line.intercept) / (1.0 - kappa_hat),
            certificate_violation: worst,
            line,
        })
    }

    /// Samples the norm-equivalence and open-map inequalities of the block
    /// constants; returns the worst slack (negative means violated).
    pub fn block_constants_check(&self, samples: usize, rng_seed: u64) -> f64 {
        let d = self.dim();
        let hi = self.sample_radius_hi();
        let mut r = rng::stream(rng_seed, 4);
        let mut worst = f64::INFINITY;
        let c = &self.constants;
        for _ in 0..samples {
            for (i, b) in self.decomposition.blocks.iter().enumerate() {
                let h: Vec<f64> = (0..b.len()).map(|_| rng::normal(&mut r)).collect();
                let bh = self.decomposition.preconditioners[i].mul_vec(&h);
                let q = math::dot(&h, &bh);
                let n2 = math::norm_sq(&h);
                let scale = q.max(1.0);
                worst = worst.min((q - c.gamma[i] * n2) / scale);
                worst = worst.min((c.big_gamma[i] * n2 - q) / scale);
            }
            let dir = rng::unit_direction(&mut r, d);
            let radius = rng::log_uniform(&mut r, 1e-6 * hi, hi);
            let x: Vec<f64> = self.argmin.iter().zip(&dir).map(|(a, u)| a + radius * u).collect();
            let grad = self.spec.objective.grad(&x);
            let total: f64 = (0..self.decomposition.len())
                .map(|i| math::norm_sq(&self.restrict(i, &grad)))
                .sum();
            let g2 = math::norm_sq(&grad);
            worst = worst.min((total - c.lambda * g2) / g2.max(f64::MIN_POSITIVE));
        }
        worst
    }
}
