//! Theoretical envelopes for the function-value gap and the iterates, as
//! functions of the cumulative stepsize `A_k = sum_{j<k} alpha_j`.

use super::{Extended, RateProfile};
use crate::error::{invalid, Error, Result};
use crate::math;

/// Constants of the sufficient-descent and step-variance inequalities.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DescentConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl DescentConstants {
    pub fn new(c1: f64, c2: f64, c3: f64) -> Result<Self> {
        for (name, v) in [("c1", c1), ("c2", c2), ("c3", c3)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be positive and finite"));
            }
        }
        if c3 < c2 {
            return Err(invalid("c3", "must be at least c2"));
        }
        Ok(DescentConstants { c1, c2, c3 })
    }

    pub fn p(&self) -> f64 {
        p_from(self.c2, self.c3)
    }
}

/// Descent constants `c1, c2, c3`, stepsize bound `alpha_bar` and initial gap.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnvelopeParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub alpha_bar: f64,
    pub h0_gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum IterateMode {
    Expectation,
    AlmostSure,
}

impl EnvelopeParams {
    pub fn new(c1: f64, c2: f64, c3: f64, alpha_bar: f64, h0_gap: f64) -> Result<Self> {
        for (name, v) in [("c1", c1), ("c2", c2), ("c3", c3), ("alpha_bar", alpha_bar)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be positive and finite"));
            }
        }
        if c3 < c2 {
            return Err(invalid("c3", "must be at least c2"));
        }
        if !(h0_gap >= 0.0 && h0_gap.is_finite()) {
            return Err(invalid("h0_gap", "must be non-negative and finite"));
        }
        Ok(EnvelopeParams {
            c1,
            c2,
            c3,
            alpha_bar,
            h0_gap,
        })
    }

    pub fn from_constants(c: DescentConstants, alpha_bar: f64, h0_gap: f64) -> Result<Self> {
        Self::new(c.c1, c.c2, c.c3, alpha_bar, h0_gap)
    }

    pub fn constants(&self) -> DescentConstants {
        DescentConstants {
            c1: self.c1,
            c2: self.c2,
            c3: self.c3,
        }
    }

    /// Lower bound on the per-step success probability, `c2 / (2 c3 - c2)`.
    pub fn p(&self) -> f64 {
        p_from(self.c2, self.c3)
    }
}

pub fn p_from(c2: f64, c3: f64) -> f64 {
    c2 / (2.0 * c3 - c2)
}

fn check_a(a_k: f64) -> Result<()> {
    if !(a_k >= 0.0) || a_k.is_nan() {
        return Err(invalid("A_k", "cumulative stepsize must be non-negative"));
    }
    Ok(())
}

fn require_non_integrable(profile: &RateProfile) -> Result<()> {
    if profile.integrability().recip_phi {
        Err(Error::IntegrableModulus)
    } else {
        Ok(())
    }
}

fn psi_finite(profile: &RateProfile, t: f64) -> Result<f64> {
    match profile.psi(t)? {
        Extended::Finite(v) => Ok(v),
        Extended::Infinite => Err(Error::OutsideDomain {
            value: t,
            tau: profile.tau(),
        }),
    }
}

/// Bound on `E[h_k]` for a general (possibly nonconvex) modulus:
/// `exp(-p^2 A / (2 alpha_bar)) h0 + Psi^-1(Psi(h0) + c1 c2 p A / 4)`.
pub fn expectation_h(profile: &RateProfile, params: &EnvelopeParams, a_k: f64) -> Result<f64> {
    require_non_integrable(profile)?;
    check_a(a_k)?;
    let h0 = params.h0_gap;
    if h0 == 0.0 {
        return Ok(0.0);
    }
    let p = params.p();
    let decay = math::exp(-p * p * a_k / (2.0 * params.alpha_bar)) * h0;
    let y = psi_finite(profile, h0)? + params.c1 * params.c2 * p * a_k / 4.0;
    Ok(decay + profile.psi_inverse(y)?)
}

/// Tighter bound on `E[h_k]` when `phi` is convex:
/// `Psi^-1(Psi(h0) + c1 c2 A)`.
pub fn expectation_h_convex(profile: &RateProfile, params: &EnvelopeParams, a_k: f64) -> Result<f64> {
    require_non_integrable(profile)?;
    if !profile.phi().is_convex() {
        return Err(invalid("phi", "convex envelope requires a convex modulus"));
    }
    check_a(a_k)?;
    let h0 = params.h0_gap;
    if h0 == 0.0 {
        return Ok(0.0);
    }
    let y = psi_finite(profile, h0)? + params.c1 * params.c2 * a_k;
    profile.psi_inverse(y)
}

/// Almost-sure eventual bound `Psi^-1(c1 c2 p A / 3)`.
pub fn almost_sure_h(profile: &RateProfile, params: &EnvelopeParams, a_k: f64) -> Result<f64> {
    require_non_integrable(profile)?;
    check_a(a_k)?;
    profile.psi_inverse(params.c1 * params.c2 * params.p() * a_k / 3.0)
}

/// Bound on the distance of the iterates to their limit.
///
/// Expectation mode uses `sqrt(c3)/(c1 c2) Phi(min(E-envelope, h0))`;
/// almost-sure mode `4/(c1 sqrt(c2 p)) Phi(Psi^-1(c1 c2 p A / 4))`.
pub fn iterates(profile: &RateProfile, params: &EnvelopeParams, a_k: f64, mode: IterateMode) -> Result<f64> {
    require_non_integrable(profile)?;
    if !profile.integrability().recip_sqrt_phi {
        return Err(Error::DesingularizationUndefined);
    }
    check_a(a_k)?;
    let (c1, c2, c3) = (params.c1, params.c2, params.c3);
    match mode {
        IterateMode::Expectation => {
            let h = expectation_h(profile, params, a_k)?.min(params.h0_gap);
            Ok(math::sqrt(c3) / (c1 * c2) * profile.phi_desing(h)?)
        }
        IterateMode::AlmostSure => {
            let p = params.p();
            let t = profile.psi_inverse(c1 * c2 * p * a_k / 4.0)?;
            Ok(4.0 / (c1 * math::sqrt(c2 * p)) * profile.phi_desing(t)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rate_kernel::PhiSpec;

    fn profile(a: f64, q: f64, t0: f64) -> RateProfile {
        RateProfile::new(PhiSpec::power(a, q, 10.0).unwrap(), t0).unwrap()
    }

    #[test]
    fn p_examples() {
        assert!((p_from(0.5, 1.0) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(p_from(1.0, 1.0), 1.0);
    }

    #[test]
    fn params_validation() {
        assert!(EnvelopeParams::new(1.0, 2.0, 1.0, 1.0, 1.0).is_err());
        assert!(EnvelopeParams::new(0.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(EnvelopeParams::new(1.0, 1.0, 1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn expectation_envelope_at_zero_is_at_least_h0() {
        let pr = profile(1.0, 1.0, 1.0);
        let params = EnvelopeParams::new(1.0, 0.5, 1.0, 1.0, 1.0).unwrap();
        let v = expectation_h(&pr, &params, 0.0).unwrap();
        assert!((v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn linear_regime_envelope_shape() {
        // phi = t / r^2: the envelope is a sum of two exponentials in A,
        // bounded by 2 h0 exp(-min rate * A).
        let r2 = 10.0;
        let pr = RateProfile::new(PhiSpec::holder(1.0, math::sqrt(r2), 100.0).unwrap(), 1.0).unwrap();
        let params = EnvelopeParams::new(1.0, 0.5, 1.0, 1.0, 1.0).unwrap();
        let p = params.p();
        let rate = (p * p / 2.0).min(0.5 * p / (4.0 * r2));
        for &a in &[0.0, 1.0, 10.0, 100.0, 1000.0] {
            let v = expectation_h(&pr, &params, a).unwrap();
            let exact = math::exp(-p * p * a / 2.0) + math::exp(-0.5 * p * a / (4.0 * r2));
            assert!((v - exact).abs() <= 1e-12 * exact);
            assert!(v <= 2.0 * math::exp(-rate * a) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn integrable_modulus_is_rejected() {
        let pr = profile(1.0, 0.5, 1.0);
        let params = EnvelopeParams::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(expectation_h(&pr, &params, 1.0), Err(Error::IntegrableModulus));
        assert_eq!(almost_sure_h(&pr, &params, 1.0), Err(Error::IntegrableModulus));
    }

    #[test]
    fn convex_envelope_requires_convexity() {
        let pr = profile(1.0, 1.0, 1.0);
        let params = EnvelopeParams::new(1.0, 1.0, 1.0, 1.0, 0.5).unwrap();
        // Psi(0.5) = ln 2, + A = ln 2 => Psi^-1(2 ln 2) = 0.25
        let v = expectation_h_convex(&pr, &params, core::f64::consts::LN_2).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn almost_sure_iterate_example() {
        // phi = t, all constants 1, A chosen so that Psi^-1(A/4) = 0.25:
        // 4 * Phi(0.25) = 4.
        let pr = profile(1.0, 1.0, 1.0);
        let params = EnvelopeParams::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let a = 4.0 * math::ln(4.0);
        let v = iterates(&pr, &params, a, IterateMode::AlmostSure).unwrap();
        assert!((v - 4.0).abs() < 1e-14);
    }

    #[test]
    fn almost_sure_iterate_linear_regime() {
        let r: f64 = 3.0;
        let rho = 0.5;
        let pr = RateProfile::new(PhiSpec::holder(1.0, r, 100.0).unwrap(), 1.0).unwrap();
        let params = EnvelopeParams::new(1.0, rho, 1.0, 1.0, 1.0).unwrap();
        let p = params.p();
        for &a in &[0.0, 5.0, 50.0] {
            let v = iterates(&pr, &params, a, IterateMode::AlmostSure).unwrap();
            let exact = 4.0 / math::sqrt(rho * p) * 2.0 * r * math::exp(-rho * p * a / (8.0 * r * r));
            assert!((v - exact).abs() <= 1e-12 * exact);
        }
    }

    #[test]
    fn expectation_iterates_need_integrable_sqrt() {
        let pr = profile(1.0, 2.0, 1.0);
        let params = EnvelopeParams::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(
            iterates(&pr, &params, 1.0, IterateMode::Expectation),
            Err(Error::DesingularizationUndefined)
        );
    }
}
