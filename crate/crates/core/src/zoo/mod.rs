//! Certified problem instances: projection families with known Hölderian
//! error bounds, smooth objectives with known KL exponents, and abstract
//! scalar processes driven directly by a modulus.

pub mod feasibility;
pub mod operators;
pub mod smooth;

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::math::{self, Matrix};
use crate::rate_kernel::{DescentConstants, PhiSpec};

pub use feasibility::{Distance, DistanceMethod, FeasibilityInstance, FeasibilitySpec, HolderFit};
pub use operators::{fqne_check, FixedPointOperator, FqneReport, Identity, OperatorSpec, Relaxed};
pub use smooth::{BlockConstants, KlFit, Objective, SmoothInstance, SmoothSpec, SubspaceDecomposition};

/// A scalar gap process `h_{k+1} = h_k - (c1 c2 / 2) alpha_k z_k phi(h_k)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SyntheticSpec {
    pub name: String,
    pub phi: PhiSpec,
    pub constants: DescentConstants,
    pub h0_gap: f64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        DescentConstants::new(self.constants.c1, self.constants.c2, self.constants.c3)?;
        if !(self.h0_gap >= 0.0 && self.h0_gap < self.phi.tau()) {
            return Err(invalid("h0_gap", "initial gap must lie in [0, tau)"));
        }
        Ok(())
    }
}

/// Serializable instance description, as stored in configs and the catalog.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum InstanceSpec {
    Feasibility(FeasibilitySpec),
    Smooth(SmoothSpec),
    Synthetic(SyntheticSpec),
}

/// A validated instance ready to run.
#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Feasibility(FeasibilityInstance),
    Smooth(SmoothInstance),
    Synthetic(SyntheticSpec),
}

/// Certified regularity metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Certificate {
    Holder { theta: f64, r: f64 },
    Kl { kappa: f64, cbar: f64 },
    Modulus,
}

impl InstanceSpec {
    pub fn name(&self) -> &str {
        match self {
            InstanceSpec::Feasibility(s) => &s.name,
            InstanceSpec::Smooth(s) => &s.name,
            InstanceSpec::Synthetic(s) => &s.name,
        }
    }

    pub fn build(&self) -> Result<Instance> {
        Ok(match self {
            InstanceSpec::Feasibility(s) => Instance::Feasibility(FeasibilityInstance::new(s.clone())?),
            InstanceSpec::Smooth(s) => Instance::Smooth(SmoothInstance::new(s.clone())?),
            InstanceSpec::Synthetic(s) => {
                s.validate()?;
                Instance::Synthetic(s.clone())
            }
        })
    }
}

impl Instance {
    pub fn name(&self) -> &str {
        match self {
            Instance::Feasibility(i) => i.name(),
            Instance::Smooth(i) => i.name(),
            Instance::Synthetic(s) => &s.name,
        }
    }

    /// `(c1, c2, c3)` of the descent inequalities this instance satisfies.
    pub fn constants(&self) -> DescentConstants {
        match self {
            Instance::Feasibility(i) => DescentConstants {
                c1: 1.0,
                c2: i.rho(),
                c3: 1.0,
            },
            Instance::Smooth(i) => smooth_constants(i),
            Instance::Synthetic(s) => s.constants,
        }
    }

    pub fn certificate(&self) -> Certificate {
        match self {
            Instance::Feasibility(i) => Certificate::Holder {
                theta: i.spec().certified_theta,
                r: i.spec().certified_r,
            },
            Instance::Smooth(i) => Certificate::Kl {
                kappa: i.spec().certified_kappa,
                cbar: i.spec().certified_cbar,
            },
            Instance::Synthetic(_) => Certificate::Modulus,
        }
    }

    /// Initial gap `h(x0) - h*`.
    pub fn h0_gap(&self) -> f64 {
        match self {
            Instance::Feasibility(i) => i.dist_to_f(i.x0()).map(|d| d.dist_sq).unwrap_or(f64::NAN),
            Instance::Smooth(i) => i.value(i.x0()).map(|v| v - i.f_star()).unwrap_or(f64::NAN),
            Instance::Synthetic(s) => s.h0_gap,
        }
    }

    /// Modulus `phi` of the global error bound `g >= phi(h)` on the region the
    /// iterates stay in.
    pub fn phi(&self) -> Result<PhiSpec> {
        match self {
            Instance::Feasibility(i) => i.phi(),
            Instance::Smooth(i) => {
                // The KL inequality squared gives g >= phi(h); monotone descent
                // keeps h below h0, so any tau above h0 is admissible.
                let h0 = self.h0_gap();
                i.phi(2.0 * h0.max(f64::MIN_POSITIVE))
            }
            Instance::Synthetic(s) => Ok(s.phi.clone()),
        }
    }

    /// Short description of the rate regime the certificate predicts.
    pub fn regime(&self) -> String {
        match self.certificate() {
            Certificate::Holder { theta, .. } if theta >= 1.0 => "linear: gap decays like exp(-C A_k)".to_string(),
            Certificate::Holder { theta, .. } => {
                alloc::format!("sublinear: gap decays like A_k^-{}", fmt_exp(theta / (1.0 - theta)))
            }
            Certificate::Kl { kappa, .. } if kappa <= 0.5 => "linear: gap decays like exp(-C A_k)".to_string(),
            Certificate::Kl { kappa, .. } => alloc::format!(
                "sublinear: gap decays like A_k^-{}, iterates like A_k^-{}",
                fmt_exp(1.0 / (2.0 * kappa - 1.0)),
                fmt_exp((1.0 - kappa) / (2.0 * kappa - 1.0))
            ),
            Certificate::Modulus => match self.phi() {
                Ok(phi) => match phi.classify_integrability() {
                    Ok(c) if c.recip_phi => "finite termination: gap reaches 0 after finitely many steps".to_string(),
                    _ => "rate given by the inverse smoothing function of phi".to_string(),
                },
                Err(_) => "unknown".to_string(),
            },
        }
    }
}

fn fmt_exp(v: f64) -> String {
    if (v - libm::round(v)).abs() < 1e-12 {
        alloc::format!("{}", libm::round(v) as i64)
    } else {
        alloc::format!("{v:.4}")
    }
}

/// `c1 = min_i gamma_i L_i / 2`, `c2 = rho Lambda / max_i L_i^2`,
/// `c3 = 1 / min_i (L_i gamma_i)^2`.
pub fn smooth_constants(inst: &SmoothInstance) -> DescentConstants {
    let c = inst.block_constants();
    let min_gl = c
        .gamma
        .iter()
        .zip(&c.lipschitz)
        .map(|(g, l)| g * l)
        .fold(f64::INFINITY, f64::min);
    let max_l = c.lipschitz.iter().copied().fold(0.0, f64::max);
    DescentConstants {
        c1: min_gl / 2.0,
        c2: inst.rho() * c.lambda / (max_l * max_l),
        c3: 1.0 / (min_gl * min_gl),
    }
}

/// One bundled instance with its metadata.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CatalogEntry {
    pub name: String,
    pub regime: String,
    pub certificate: Certificate,
    pub constants: DescentConstants,
    pub p: f64,
    pub instance: InstanceSpec,
}

pub const BUNDLED: [&str; 5] = [
    "rkmm_theta1",
    "rkmm_theta_half",
    "rcd_quadratic",
    "rcd_quartic",
    "synthetic_sqrt",
];

pub fn bundled_spec(name: &str) -> Option<InstanceSpec> {
    let spec = match name {
        // Wedge {y >= 3|x|}: the iterates zigzag into the apex from below.
        "rkmm_theta1" => InstanceSpec::Feasibility(FeasibilitySpec {
            name: name.to_string(),
            operators: vec![
                OperatorSpec::HalfspaceProj {
                    normal: vec![3.0, -1.0],
                    offset: 0.0,
                },
                OperatorSpec::HalfspaceProj {
                    normal: vec![-3.0, -1.0],
                    offset: 0.0,
                },
            ],
            x0: vec![0.3, -1.0],
            certified_theta: 1.0,
            certified_r: math::sqrt(10.0),
            valid_radius: 10.0,
            weights: None,
            witness: Some(vec![0.0, 0.0]),
        }),
        // Unit ball touching {x1 >= 1} at the single point (1, 0).
        "rkmm_theta_half" => InstanceSpec::Feasibility(FeasibilitySpec {
            name: name.to_string(),
            operators: vec![
                OperatorSpec::BallProj {
                    center: vec![0.0, 0.0],
                    radius: 1.0,
                },
                OperatorSpec::HalfspaceProj {
                    normal: vec![-1.0, 0.0],
                    offset: -1.0,
                },
            ],
            x0: vec![0.0, 1.5],
            certified_theta: 0.5,
            certified_r: math::sqrt(5.0),
            valid_radius: 2.0,
            weights: None,
            witness: Some(vec![1.0, 0.0]),
        }),
        "rcd_quadratic" => InstanceSpec::Smooth(SmoothSpec {
            name: name.to_string(),
            objective: Objective::Quadratic {
                a: Matrix::diagonal(&[1.0, 4.0]),
                b: vec![0.0, 0.0],
            },
            blocks: vec![vec![0], vec![1]],
            preconditioners: None,
            x0: vec![1.0, 1.0],
            certified_kappa: 0.5,
            certified_cbar: math::sqrt(2.0),
            weights: None,
            lipschitz: None,
            argmin: None,
        }),
        "rcd_quartic" => InstanceSpec::Smooth(SmoothSpec {
            name: name.to_string(),
            objective: Objective::EvenPowerSum { p: 2, dim: 4 },
            blocks: vec![vec![0], vec![1], vec![2], vec![3]],
            preconditioners: None,
            x0: vec![1.0, -0.8, 0.6, -0.4],
            certified_kappa: 0.75,
            certified_cbar: math::sqrt(2.0),
            weights: None,
            lipschitz: None,
            argmin: None,
        }),
        "synthetic_sqrt" => InstanceSpec::Synthetic(SyntheticSpec {
            name: name.to_string(),
            phi: PhiSpec::power(1.0, 0.5, 4.0).ok()?,
            constants: DescentConstants {
                c1: 1.0,
                c2: 1.0,
                c3: 1.5,
            },
            h0_gap: 1.0,
        }),
        _ => return None,
    };
    Some(spec)
}

pub fn bundled(name: &str) -> Option<Instance> {
    bundled_spec(name)?.build().ok()
}

pub fn catalog() -> Vec<CatalogEntry> {
    BUNDLED
        .iter()
        .filter_map(|name| {
            let spec = bundled_spec(name)?;
            let inst = spec.build().ok()?;
            let constants = inst.constants();
            Some(CatalogEntry {
                name: name.to_string(),
                regime: inst.regime(),
                certificate: inst.certificate(),
                p: constants.p(),
                constants,
                instance: spec,
            })
        })
        .collect()
}
