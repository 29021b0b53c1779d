use alloc::string::String;

use crate::error::{invalid, Result};
use crate::rate_kernel::{EnvelopeParams, PhiSpec};
use crate::zoo::SyntheticSpec;

/// Abstract gap process `h+ = h - (c1 c2 / 2) alpha z phi(h)` with
/// `z ~ Bernoulli(z_prob)`, clipped at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticProcess {
    pub name: String,
    pub phi: PhiSpec,
    pub params: EnvelopeParams,
    /// Defaults to `p`; forcing 0 gives a frozen control process.
    pub z_prob: f64,
}

impl SyntheticProcess {
    pub fn new(name: impl Into<String>, phi: PhiSpec, params: EnvelopeParams) -> Result<Self> {
        if !(params.h0_gap >= 0.0 && params.h0_gap < phi.tau()) {
            return Err(invalid("h0_gap", "initial gap must lie in [0, tau)"));
        }
        Ok(SyntheticProcess {
            name: name.into(),
            phi,
            z_prob: params.p(),
            params,
        })
    }

    pub fn from_spec(spec: &SyntheticSpec, alpha_bar: f64) -> Result<Self> {
        spec.validate()?;
        let params = EnvelopeParams::from_constants(spec.constants, alpha_bar, spec.h0_gap)?;
        Self::new(spec.name.clone(), spec.phi.clone(), params)
    }

    pub fn with_z_prob(mut self, z_prob: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&z_prob) {
            return Err(invalid("z_prob", "must lie in [0, 1]"));
        }
        self.z_prob = z_prob;
        Ok(self)
    }

    /// `(c1 c2 / 2) alpha`.
    pub(crate) fn rate(&self, alpha: f64) -> f64 {
        0.5 * self.params.c1 * self.params.c2 * alpha
    }
}
