//! Error-bound moduli `phi` and the calculus built on them: the inverse
//! smoothing function `Psi(t) = ∫_t^{t0} ds / phi(s)`, its inverse, and the
//! desingularization integral `Phi(t) = ∫_0^t ds / sqrt(phi(s))`.
//!
//! Power families use closed forms. Everything else (and the independent
//! numeric route for Power families) goes through adaptive quadrature and
//! log-space bisection, see [`quadrature`].

pub mod envelope;
pub mod quadrature;

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math;

pub use envelope::{DescentConstants, EnvelopeParams, IterateMode};

/// Relative bracket width at which the numeric inverse of `Psi` stops.
pub const INVERSE_REL_TOL: f64 = 1e-14;

/// Depth of the cached dyadic ladder `t0 / 2^j` used by non-Power families.
const LADDER_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case"))]
pub enum PhiFamily {
    /// `phi(t) = a t^q`.
    Power { a: f64, q: f64 },
    /// `phi(t) = a t^2 (ln t)^4`, defined on `[0, e^-2]`.
    LogPower { a: f64 },
    /// Monotone piecewise-linear interpolation through `(t, phi(t))` knots,
    /// the first of which must be `(0, 0)`.
    Tabulated { points: Vec<(f64, f64)> },
}

/// A parametric error-bound modulus on `[0, tau)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "PhiRepr", into = "PhiRepr"))]
pub struct PhiSpec {
    family: PhiFamily,
    tau: f64,
}

/// Unvalidated wire form of [`PhiSpec`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhiRepr {
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub family: PhiFamily,
    pub tau: f64,
}

impl TryFrom<PhiRepr> for PhiSpec {
    type Error = Error;
    fn try_from(r: PhiRepr) -> Result<Self> {
        PhiSpec::from_parts(r.family, r.tau)
    }
}

impl From<PhiSpec> for PhiRepr {
    fn from(s: PhiSpec) -> Self {
        PhiRepr {
            family: s.family,
            tau: s.tau,
        }
    }
}

/// Whether `1/phi` and `1/sqrt(phi)` are integrable near 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Integrability {
    pub recip_phi: bool,
    pub recip_sqrt_phi: bool,
}

/// A value of `Psi`, which is `+inf` at 0 when `1/phi` is not integrable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Extended::Infinite)
    }
}

impl PhiSpec {
    pub fn power(a: f64, q: f64, tau: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(invalid("a", "scale must be positive and finite"));
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(invalid("q", "exponent must be positive and finite"));
        }
        if !(tau > 0.0) || tau.is_nan() {
            return Err(invalid("tau", "domain bound must be positive"));
        }
        Ok(PhiSpec {
            family: PhiFamily::Power { a, q },
            tau,
        })
    }

    /// Hölderian error bound `dist(x,F) <= r max_i |T_i x - x|^theta`, i.e.
    /// `phi(t) = (t / r^2)^(1/theta)`.
    pub fn holder(theta: f64, r: f64, tau: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(invalid("theta", "Hölder exponent must lie in (0, 1]"));
        }
        if !(r > 0.0) {
            return Err(invalid("r", "must be positive"));
        }
        Self::power(math::powf(r, -2.0 / theta), 1.0 / theta, tau)
    }

    /// KL property with exponent `kappa` and desingularization scale `cbar`,
    /// i.e. `phi(t) = t^(2 kappa) / (cbar (1 - kappa))^2`.
    pub fn kl(kappa: f64, cbar: f64, tau: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&kappa) || kappa <= 0.0 {
            return Err(invalid("kappa", "KL exponent must lie in (0, 1)"));
        }
        if !(cbar > 0.0) {
            return Err(invalid("cbar", "must be positive"));
        }
        let s = cbar * (1.0 - kappa);
        Self::power(1.0 / (s * s), 2.0 * kappa, tau)
    }

    pub fn log_power(a: f64, tau: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(invalid("a", "scale must be positive and finite"));
        }
        if !(tau > 0.0 && tau <= math::exp(-2.0)) {
            return Err(invalid("tau", "log-power modulus requires 0 < tau <= e^-2"));
        }
        Ok(PhiSpec {
            family: PhiFamily::LogPower { a },
            tau,
        })
    }

    pub fn tabulated(points: Vec<(f64, f64)>, tau: f64) -> Result<Self> {
        if points.len() < 2 {
            return Err(invalid("points", "need at least two knots"));
        }
        if points[0] != (0.0, 0.0) {
            return Err(invalid("points", "first knot must be (0, 0)"));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(invalid("points", "knot abscissae must be strictly increasing"));
            }
            if !(w[1].1 >= w[0].1) {
                return Err(invalid("points", "phi must be non-decreasing"));
            }
        }
        if !(points[1].1 > 0.0) {
            return Err(invalid("points", "phi must be positive away from 0"));
        }
        let last = points[points.len() - 1].0;
        if !(tau > 0.0 && tau <= last) {
            return Err(invalid("tau", "tabulated grid must cover [0, tau]"));
        }
        Ok(PhiSpec {
            family: PhiFamily::Tabulated { points },
            tau,
        })
    }

    pub fn from_parts(family: PhiFamily, tau: f64) -> Result<Self> {
        match family {
            PhiFamily::Power { a, q } => Self::power(a, q, tau),
            PhiFamily::LogPower { a } => Self::log_power(a, tau),
            PhiFamily::Tabulated { points } => Self::tabulated(points, tau),
        }
    }

    pub fn family(&self) -> &PhiFamily {
        &self.family
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `phi(t)`; rejects `t` outside `[0, tau)`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0 && t < self.tau) {
            return Err(Error::OutsideDomain {
                value: t,
                tau: self.tau,
            });
        }
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match &self.family {
            PhiFamily::Power { a, q } => a * math::powf(t, *q),
            PhiFamily::LogPower { a } => {
                let l = math::ln(t);
                let l2 = l * l;
                a * t * t * l2 * l2
            }
            PhiFamily::Tabulated { points } => {
                let i = points.partition_point(|&(x, _)| x <= t);
                if i >= points.len() {
                    return points[points.len() - 1].1;
                }
                let (x0, y0) = points[i - 1];
                let (x1, y1) = points[i];
                y0 + (y1 - y0) * (t - x0) / (x1 - x0)
            }
        }
    }

    /// Analytic classification by family. Tabulated moduli have no analytic
    /// tail, so callers must supply flags via [`RateProfile::with_flags`].
    pub fn classify_integrability(&self) -> Result<Integrability> {
        match &self.family {
            PhiFamily::Power { q, .. } => Ok(Integrability {
                recip_phi: *q < 1.0,
                recip_sqrt_phi: *q < 2.0,
            }),
            // 1/sqrt(phi) = 1/(sqrt(a) t (ln t)^2) has antiderivative 1/(sqrt(a)|ln t|),
            // which is finite at 0; 1/phi behaves like t^-2 up to logs.
            PhiFamily::LogPower { .. } => Ok(Integrability {
                recip_phi: false,
                recip_sqrt_phi: true,
            }),
            PhiFamily::Tabulated { .. } => Err(Error::ClassificationUnavailable),
        }
    }

    /// Whether `phi` is convex on its whole domain, as declared by family.
    pub fn is_convex(&self) -> bool {
        match &self.family {
            PhiFamily::Power { q, .. } => *q >= 1.0,
            PhiFamily::LogPower { .. } => false,
            PhiFamily::Tabulated { points } => points.windows(3).all(|w| {
                let s0 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                let s1 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
                s1 >= s0
            }),
        }
    }

    /// Samples `phi` on a dense grid of `[0, tau)` and checks `phi(0) = 0`,
    /// monotonicity and positivity.
    pub fn check_invariants(&self, samples: usize) -> Result<()> {
        if self.eval_unchecked(0.0) != 0.0 {
            return Err(invalid("phi", "phi(0) must be 0"));
        }
        let hi = if self.tau.is_finite() { self.tau } else { 1e6 };
        let mut prev = 0.0;
        for i in 1..samples.max(2) {
            let t = hi * (i as f64) / (samples.max(2) as f64);
            let v = self.eval_unchecked(t);
            if !(v > 0.0) {
                return Err(invalid("phi", "phi must be positive on (0, tau)"));
            }
            if v < prev {
                return Err(invalid("phi", "phi must be non-decreasing"));
            }
            prev = v;
        }
        Ok(())
    }
}

/// `Psi`, `Psi^-1` and `Phi` evaluators for one modulus and reference point.
/// Immutable after construction; non-Power families carry an eagerly built
/// cache of `Psi` on the dyadic ladder `t0 / 2^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateProfile {
    phi: PhiSpec,
    t0: f64,
    integrability: Integrability,
    /// `Psi(t0 / 2^j)` for `j = 0..=LADDER_DEPTH`, empty for Power families.
    ladder: Vec<f64>,
    psi_inf: f64,
    psi_sup: Extended,
}

impl RateProfile {
    pub fn new(phi: PhiSpec, t0: f64) -> Result<Self> {
        let integrability = phi.classify_integrability()?;
        Self::with_flags(phi, t0, integrability)
    }

    /// Reference point `t0 = min(tau/2, h0_gap)` (ignoring infinite or
    /// missing candidates; 1 if neither is usable).
    pub fn with_default_t0(phi: PhiSpec, h0_gap: Option<f64>) -> Result<Self> {
        let t0 = default_t0(phi.tau, h0_gap);
        Self::new(phi, t0)
    }

    pub fn with_flags(phi: PhiSpec, t0: f64, integrability: Integrability) -> Result<Self> {
        if !(t0 > 0.0 && t0 < phi.tau) {
            return Err(invalid("t0", "reference point must lie in (0, tau)"));
        }
        let mut profile = RateProfile {
            phi,
            t0,
            integrability,
            ladder: Vec::new(),
            psi_inf: f64::NEG_INFINITY,
            psi_sup: Extended::Infinite,
        };
        if !matches!(profile.phi.family, PhiFamily::Power { .. }) {
            let recip = |s: f64| 1.0 / profile.phi.eval_unchecked(s);
            let mut ladder = Vec::with_capacity(LADDER_DEPTH + 1);
            ladder.push(0.0);
            let mut acc = 0.0;
            let mut hi = t0;
            for _ in 0..LADDER_DEPTH {
                let lo = 0.5 * hi;
                acc += quadrature::integrate(&recip, lo, hi);
                ladder.push(acc);
                hi = lo;
            }
            profile.ladder = ladder;
        }
        let (inf, sup) = profile.compute_range();
        profile.psi_inf = inf;
        profile.psi_sup = sup;
        Ok(profile)
    }

    pub fn phi(&self) -> &PhiSpec {
        &self.phi
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn tau(&self) -> f64 {
        self.phi.tau
    }

    pub fn integrability(&self) -> Integrability {
        self.integrability
    }

    /// `(lim_{t -> tau} Psi(t), Psi(0))`, the open/closed range of `Psi`.
    pub fn psi_range(&self) -> (f64, Extended) {
        (self.psi_inf, self.psi_sup)
    }

    fn compute_range(&self) -> (f64, Extended) {
        let tau = self.phi.tau;
        let sup = if self.integrability.recip_phi {
            match self.psi_closed(0.0) {
                Some(v) => v,
                None => Extended::Finite(quadrature::integrate_from_zero(
                    &|s| 1.0 / self.phi.eval_unchecked(s),
                    self.t0,
                )),
            }
        } else {
            Extended::Infinite
        };
        let inf = match &self.phi.family {
            PhiFamily::Power { a, q } => {
                if tau.is_finite() {
                    self.psi_closed(tau)
                        .and_then(Extended::finite)
                        .unwrap_or(f64::NEG_INFINITY)
                } else if *q <= 1.0 {
                    f64::NEG_INFINITY
                } else {
                    -math::powf(self.t0, 1.0 - q) / (a * (q - 1.0))
                }
            }
            _ => -quadrature::integrate(&|s| 1.0 / self.phi.eval_unchecked(s), self.t0, tau),
        };
        (inf, sup)
    }

    fn check_psi_arg(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t < self.phi.tau) {
            return Err(Error::OutsideDomain {
                value: t,
                tau: self.phi.tau,
            });
        }
        Ok(())
    }

    fn psi_closed(&self, t: f64) -> Option<Extended> {
        let PhiFamily::Power { a, q } = self.phi.family else {
            return None;
        };
        let t0 = self.t0;
        if t <= 0.0 {
            return Some(if q < 1.0 {
                Extended::Finite(math::powf(t0, 1.0 - q) / (a * (1.0 - q)))
            } else {
                Extended::Infinite
            });
        }
        let u = math::ln(t / t0);
        let v = if q == 1.0 {
            -u / a
        } else {
            -math::powf(t0, 1.0 - q) * math::expm1((1.0 - q) * u) / (a * (1.0 - q))
        };
        Some(Extended::Finite(v))
    }

    /// `Psi(t)`. At `t = 0` with non-integrable `1/phi` the result is
    /// [`Extended::Infinite`].
    pub fn psi(&self, t: f64) -> Result<Extended> {
        self.check_psi_arg(t)?;
        match self.psi_closed(t) {
            Some(v) => Ok(v),
            None => self.psi_numeric(t),
        }
    }

    /// `Psi(t)` by quadrature regardless of family.
    pub fn psi_quadrature(&self, t: f64) -> Result<Extended> {
        self.check_psi_arg(t)?;
        self.psi_numeric(t)
    }

    fn psi_numeric(&self, t: f64) -> Result<Extended> {
        let recip = |s: f64| 1.0 / self.phi.eval_unchecked(s);
        if t == 0.0 {
            return Ok(if self.integrability.recip_phi {
                Extended::Finite(quadrature::integrate_from_zero(&recip, self.t0))
            } else {
                Extended::Infinite
            });
        }
        if t >= self.t0 {
            return Ok(Extended::Finite(-quadrature::integrate(&recip, self.t0, t)));
        }
        if self.ladder.is_empty() {
            return Ok(Extended::Finite(quadrature::integrate_geometric(&recip, t, self.t0)));
        }
        // Dyadic rung j with t0/2^(j+1) < t <= t0/2^j.
        let mut j = (math::floor(math::ln(self.t0 / t) / core::f64::consts::LN_2) as usize).min(LADDER_DEPTH);
        let mut rung = self.t0 / pow2(j);
        while rung < t && j > 0 {
            j -= 1;
            rung = self.t0 / pow2(j);
        }
        Ok(Extended::Finite(
            self.ladder[j] + quadrature::integrate_geometric(&recip, t, rung),
        ))
    }

    /// `Psi^-1(y)`: closed form for Power families, bisection otherwise.
    pub fn psi_inverse(&self, y: f64) -> Result<f64> {
        self.check_inverse_arg(y)?;
        if let PhiFamily::Power { a, q } = self.phi.family {
            return Ok(self.power_inverse(a, q, y));
        }
        self.bisection_inverse(y)
    }

    /// `Psi^-1(y)` by bisection on the quadrature route regardless of family.
    pub fn psi_inverse_bisection(&self, y: f64) -> Result<f64> {
        self.check_inverse_arg(y)?;
        self.bisection_inverse(y)
    }

    fn check_inverse_arg(&self, y: f64) -> Result<()> {
        let sup = match self.psi_sup {
            Extended::Finite(v) => v,
            Extended::Infinite => f64::INFINITY,
        };
        if y.is_nan() || y <= self.psi_inf || y > sup {
            return Err(Error::OutsideRange {
                value: y,
                infimum: self.psi_inf,
                supremum: sup,
            });
        }
        Ok(())
    }

    fn power_inverse(&self, a: f64, q: f64, y: f64) -> f64 {
        let t0 = self.t0;
        if q == 1.0 {
            return t0 * math::exp(-a * y);
        }
        let arg = -a * (1.0 - q) * y * math::powf(t0, q - 1.0);
        if arg <= -1.0 {
            return 0.0;
        }
        t0 * math::exp(libm::log1p(arg) / (1.0 - q))
    }

    fn bisection_inverse(&self, y: f64) -> Result<f64> {
        if let Extended::Finite(sup) = self.psi_sup {
            if y == sup {
                return Ok(0.0);
            }
        }
        let psi = |t: f64| match self.psi_numeric(t) {
            Ok(Extended::Finite(v)) => v,
            _ => f64::INFINITY,
        };
        if y == 0.0 {
            return Ok(self.t0);
        }
        let tau = self.phi.tau;
        if y > 0.0 {
            let mut lo = if tau.is_finite() { tau * 1e-15 } else { self.t0 * 1e-15 };
            lo = lo.min(0.5 * self.t0);
            while psi(lo) < y {
                if lo < 1e-290 {
                    // Psi^-1(y) is below the smallest representable bracket.
                    return Ok(0.0);
                }
                lo *= 1e-15;
            }
            quadrature::bisect_decreasing(&psi, y, lo, self.t0, INVERSE_REL_TOL)
        } else {
            let mut hi = if tau.is_finite() {
                tau * (1.0 - 1e-12)
            } else {
                2.0 * self.t0
            };
            while psi(hi) > y {
                if tau.is_finite() || hi > 1e290 {
                    return Err(Error::BisectionFailed {
                        lo: self.t0,
                        hi,
                        iterations: 0,
                    });
                }
                hi *= 2.0;
            }
            quadrature::bisect_decreasing(&psi, y, self.t0, hi, INVERSE_REL_TOL)
        }
    }

    fn require_desing(&self, t: f64) -> Result<()> {
        if !self.integrability.recip_sqrt_phi {
            return Err(Error::DesingularizationUndefined);
        }
        self.check_psi_arg(t)
    }

    /// `Phi(t)`; only defined when `1/sqrt(phi)` is integrable near 0.
    pub fn phi_desing(&self, t: f64) -> Result<f64> {
        self.require_desing(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        match self.phi.family {
            PhiFamily::Power { a, q } => {
                let e = 1.0 - 0.5 * q;
                Ok(math::powf(t, e) / (math::sqrt(a) * e))
            }
            PhiFamily::LogPower { a } => Ok(1.0 / (math::sqrt(a) * math::ln(t).abs())),
            PhiFamily::Tabulated { .. } => self.phi_desing_numeric(t),
        }
    }

    /// `Phi(t)` by quadrature regardless of family.
    pub fn phi_desing_quadrature(&self, t: f64) -> Result<f64> {
        self.require_desing(t)?;
        self.phi_desing_numeric(t)
    }

    fn phi_desing_numeric(&self, t: f64) -> Result<f64> {
        let f = |s: f64| 1.0 / math::sqrt(self.phi.eval_unchecked(s));
        Ok(quadrature::integrate_from_zero(&f, t))
    }
}

fn pow2(j: usize) -> f64 {
    let mut v = 1.0;
    for _ in 0..j {
        v *= 2.0;
    }
    v
}

pub fn default_t0(tau: f64, h0_gap: Option<f64>) -> f64 {
    let mut t0 = f64::INFINITY;
    if tau.is_finite() {
        t0 = 0.5 * tau;
    }
    if let Some(h) = h0_gap {
        if h > 0.0 && h < tau {
            t0 = t0.min(h);
        }
    }
    if t0.is_finite() {
        t0
    } else {
        1.0
    }
}

impl core::fmt::Display for PhiSpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match &self.family {
            PhiFamily::Power { a, q } => write!(f, "{a}*t^{q} on [0, {})", self.tau),
            PhiFamily::LogPower { a } => write!(f, "{a}*t^2*(ln t)^4 on [0, {})", self.tau),
            PhiFamily::Tabulated { points } => {
                write!(f, "tabulated({} knots) on [0, {})", points.len(), self.tau.to_string())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn power(a: f64, q: f64, tau: f64, t0: f64) -> RateProfile {
        RateProfile::new(PhiSpec::power(a, q, tau).unwrap(), t0).unwrap()
    }

    #[test]
    fn phi_eval_examples() {
        let p = PhiSpec::power(1.0, 2.0, 10.0).unwrap();
        assert_eq!(p.eval(0.5).unwrap(), 0.25);
        assert_eq!(p.eval(0.0).unwrap(), 0.0);
        assert!(matches!(p.eval(10.0), Err(Error::OutsideDomain { .. })));
        assert!(matches!(p.eval(-1e-3), Err(Error::OutsideDomain { .. })));
        let lp = PhiSpec::log_power(1.0, math::exp(-2.0)).unwrap();
        assert_eq!(lp.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn log_power_value_against_direct_expansion() {
        // t = e^-3: t^2 (ln t)^4 = e^-6 * 81, the oracle evaluated by a
        // separate product.
        let lp = PhiSpec::log_power(1.0, math::exp(-2.0)).unwrap();
        let got = lp.eval(math::exp(-3.0)).unwrap();
        let oracle = 81.0 * math::exp(-6.0);
        assert!((got - oracle).abs() < 1e-15);
        assert!((got - 0.200_8).abs() < 1e-4);
    }

    #[test]
    fn log_power_tau_must_not_exceed_e_minus_2() {
        assert!(PhiSpec::log_power(1.0, 0.2).is_err());
    }

    #[test]
    fn classification_examples() {
        let c = |q| PhiSpec::power(1.0, q, 1.0).unwrap().classify_integrability().unwrap();
        assert_eq!(
            c(0.5),
            Integrability {
                recip_phi: true,
                recip_sqrt_phi: true
            }
        );
        assert_eq!(
            c(1.0),
            Integrability {
                recip_phi: false,
                recip_sqrt_phi: true
            }
        );
        assert_eq!(
            c(2.0),
            Integrability {
                recip_phi: false,
                recip_sqrt_phi: false
            }
        );
        let tab = PhiSpec::tabulated(vec![(0.0, 0.0), (1.0, 1.0)], 1.0).unwrap();
        assert_eq!(tab.classify_integrability(), Err(Error::ClassificationUnavailable));
    }

    #[test]
    fn holder_and_kl_parameter_maps() {
        let h = PhiSpec::holder(0.5, 2.0, 1.0).unwrap();
        assert_eq!(h.family(), &PhiFamily::Power { a: 1.0 / 16.0, q: 2.0 });
        let k = PhiSpec::kl(0.75, 2.0, 1.0).unwrap();
        assert_eq!(k.family(), &PhiFamily::Power { a: 4.0, q: 1.5 });
    }

    #[test]
    fn psi_examples() {
        let p = power(1.0, 1.0, 10.0, 1.0);
        let v = p.psi(0.5).unwrap().finite().unwrap();
        assert!((v - core::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(p.psi(1.0).unwrap(), Extended::Finite(0.0));
        assert_eq!(p.psi(0.0).unwrap(), Extended::Infinite);

        let p2 = power(1.0, 2.0, 10.0, 1.0);
        let v = p2.psi(0.1).unwrap().finite().unwrap();
        assert!((v - 9.0).abs() < 1e-13);
        let q = p2.psi_quadrature(0.1).unwrap().finite().unwrap();
        assert!((q - 9.0).abs() / 9.0 < 1e-12);
    }

    #[test]
    fn psi_sign_convention() {
        let p = power(2.0, 1.5, 10.0, 1.0);
        assert!(p.psi(0.3).unwrap().finite().unwrap() > 0.0);
        assert!(p.psi(3.0).unwrap().finite().unwrap() < 0.0);
    }

    #[test]
    fn psi_at_zero_for_integrable_modulus() {
        let p = power(1.0, 0.5, 10.0, 1.0);
        // ∫_0^1 s^-0.5 = 2
        assert_eq!(p.psi(0.0).unwrap(), Extended::Finite(2.0));
        let q = p.psi_quadrature(0.0).unwrap().finite().unwrap();
        assert!((q - 2.0).abs() < 1e-12);
    }

    #[test]
    fn psi_inverse_examples() {
        let p = power(1.0, 1.0, 10.0, 1.0);
        assert!((p.psi_inverse(core::f64::consts::LN_2).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(p.psi_inverse(0.0).unwrap(), 1.0);
        let p2 = power(1.0, 2.0, 10.0, 1.0);
        assert!((p2.psi_inverse(9.0).unwrap() - 0.1).abs() < 1e-15);
        let b = p2.psi_inverse_bisection(9.0).unwrap();
        assert!((b - 0.1).abs() / 0.1 < 1e-12);
    }

    #[test]
    fn psi_inverse_range_rejections() {
        // q = 0.5: Psi(0) = 2 with t0 = 1, so y > 2 is outside the range.
        let p = power(1.0, 0.5, 10.0, 1.0);
        assert!(matches!(p.psi_inverse(2.5), Err(Error::OutsideRange { .. })));
        assert_eq!(p.psi_inverse(2.0).unwrap(), 0.0);
        // tau = 10 caps the negative side at Psi(10).
        let inf = p.psi_range().0;
        assert!(matches!(p.psi_inverse(inf - 1.0), Err(Error::OutsideRange { .. })));
        assert!(matches!(p.psi_inverse(inf), Err(Error::OutsideRange { .. })));
    }

    #[test]
    fn phi_desing_examples() {
        let p = power(1.0, 1.0, 10.0, 1.0);
        assert!((p.phi_desing(0.25).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(p.phi_desing(0.0).unwrap(), 0.0);
        let p15 = power(1.0, 1.5, 10.0, 1.0);
        let closed = p15.phi_desing(0.09).unwrap();
        let quad = p15.phi_desing_quadrature(0.09).unwrap();
        assert!((closed - 2.190_89).abs() < 1e-5);
        assert!((closed - quad).abs() / closed < 1e-10);
        let p2 = power(1.0, 2.0, 10.0, 1.0);
        assert_eq!(p2.phi_desing(0.1), Err(Error::DesingularizationUndefined));
    }

    #[test]
    fn log_power_profile_routes_agree() {
        let tau = math::exp(-2.0);
        let p = RateProfile::with_default_t0(PhiSpec::log_power(1.0, tau).unwrap(), None).unwrap();
        assert!((p.t0() - 0.5 * tau).abs() < 1e-18);
        for &t in &[1e-6, 1e-3, 0.01, 0.05, 0.1] {
            let y = p.psi(t).unwrap().finite().unwrap();
            let direct = quadrature::integrate_geometric(
                &|s: f64| 1.0 / p.phi().eval_unchecked(s),
                t.min(p.t0()),
                t.max(p.t0()),
            );
            let direct = if t < p.t0() { direct } else { -direct };
            assert!(
                (y - direct).abs() <= 1e-10 * direct.abs().max(1.0),
                "{t}: {y} vs {direct}"
            );
            let back = p.psi_inverse(y).unwrap();
            assert!((back - t).abs() / t < 1e-10, "{t}: {back}");
        }
        // Phi closed form against quadrature away from the log tail.
        let a = p.phi_desing(0.05).unwrap();
        let b = quadrature::integrate(&|s: f64| 1.0 / math::sqrt(p.phi().eval_unchecked(s)), 1e-300, 0.05);
        assert!(a > b);
    }

    #[test]
    fn tabulated_interpolation_and_profile() {
        let tab = PhiSpec::tabulated(vec![(0.0, 0.0), (0.5, 0.5), (1.0, 2.0)], 1.0).unwrap();
        assert!((tab.eval(0.25).unwrap() - 0.25).abs() < 1e-15);
        assert!((tab.eval(0.75).unwrap() - 1.25).abs() < 1e-15);
        assert!(tab.is_convex());
        let flags = Integrability {
            recip_phi: false,
            recip_sqrt_phi: true,
        };
        let p = RateProfile::with_flags(tab, 0.5, flags).unwrap();
        // linear on [0, 0.5]: Psi(t) = ln(0.5 / t), Phi(t) = 2 sqrt(t)
        let y = p.psi(0.125).unwrap().finite().unwrap();
        assert!((y - math::ln(4.0)).abs() < 1e-12);
        assert!((p.psi_inverse(y).unwrap() - 0.125).abs() < 1e-12);
        assert!((p.phi_desing(0.25).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tabulated_rejects_bad_grids() {
        assert!(PhiSpec::tabulated(vec![(0.1, 0.0), (1.0, 1.0)], 1.0).is_err());
        assert!(PhiSpec::tabulated(vec![(0.0, 0.0), (1.0, 1.0), (0.5, 2.0)], 1.0).is_err());
        assert!(PhiSpec::tabulated(vec![(0.0, 0.0), (1.0, 1.0)], 2.0).is_err());
    }

    #[test]
    fn reference_point_must_be_inside_domain() {
        let spec = PhiSpec::power(1.0, 1.0, 1.0).unwrap();
        assert!(RateProfile::new(spec.clone(), 1.0).is_err());
        assert!(RateProfile::new(spec, 0.0).is_err());
    }

    #[test]
    fn default_reference_point() {
        assert_eq!(default_t0(1.0, Some(0.2)), 0.2);
        assert_eq!(default_t0(1.0, None), 0.5);
        assert_eq!(default_t0(f64::INFINITY, Some(3.0)), 3.0);
        assert_eq!(default_t0(f64::INFINITY, None), 1.0);
    }
}
