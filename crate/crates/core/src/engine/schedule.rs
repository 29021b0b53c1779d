use alloc::format;

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case"))]
pub enum StepSchedule {
    /// `alpha_k = alpha_bar`.
    Constant { alpha_bar: f64 },
    /// `alpha_k = scale (k + 1)^-exponent`.
    PolyDecay { scale: f64, exponent: f64 },
}

impl StepSchedule {
    pub fn constant(alpha_bar: f64) -> Result<Self> {
        let s = StepSchedule::Constant { alpha_bar };
        s.validate()?;
        Ok(s)
    }

    pub fn poly_decay(scale: f64, exponent: f64) -> Result<Self> {
        let s = StepSchedule::PolyDecay { scale, exponent };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StepSchedule::Constant { alpha_bar } => {
                if !(alpha_bar > 0.0 && alpha_bar.is_finite()) {
                    return Err(Error::Schedule(format!(
                        "constant stepsize must be positive and finite, got {alpha_bar}"
                    )));
                }
            }
            StepSchedule::PolyDecay { scale, exponent } => {
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(Error::Schedule(format!(
                        "decay scale must be positive and finite, got {scale}"
                    )));
                }
                if !(exponent >= 0.0) {
                    return Err(Error::Schedule(format!(
                        "decay exponent must be non-negative, got {exponent}"
                    )));
                }
                if exponent > 1.0 {
                    return Err(Error::Schedule(format!(
                        "decay exponent {exponent} > 1 makes the stepsizes summable; \
                         the cumulative stepsize A_k must diverge"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn alpha(&self, k: u64) -> f64 {
        match *self {
            StepSchedule::Constant { alpha_bar } => alpha_bar,
            StepSchedule::PolyDecay { scale, exponent } => {
                if exponent == 0.0 {
                    scale
                } else {
                    scale * math::powf((k + 1) as f64, -exponent)
                }
            }
        }
    }

    /// Upper bound on every stepsize.
    pub fn alpha_bar(&self) -> f64 {
        match *self {
            StepSchedule::Constant { alpha_bar } => alpha_bar,
            StepSchedule::PolyDecay { scale, .. } => scale,
        }
    }

    /// Analytic classification `(sum alpha_k = inf, sum (alpha_k / A_{k+1})^2 < inf)`.
    ///
    /// Every valid family satisfies both: constant steps give terms
    /// `(k+1)^-2`; for `q < 1` the partial sums grow like `k^(1-q)` so the
    /// terms are `O(k^-2)`; for `q = 1` they grow like `ln k`, giving terms
    /// `O(1/(k ln k)^2)`.
    pub fn schedule_check(&self) -> Result<(bool, bool)> {
        self.validate()?;
        Ok((true, true))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_check_examples() {
        assert_eq!(
            StepSchedule::constant(1.0).unwrap().schedule_check().unwrap(),
            (true, true)
        );
        assert_eq!(
            StepSchedule::poly_decay(1.0, 0.5).unwrap().schedule_check().unwrap(),
            (true, true)
        );
        assert_eq!(
            StepSchedule::poly_decay(1.0, 1.0).unwrap().schedule_check().unwrap(),
            (true, true)
        );
        assert!(matches!(StepSchedule::poly_decay(1.0, 1.5), Err(Error::Schedule(_))));
        assert!(StepSchedule::constant(0.0).is_err());
    }

    #[test]
    fn alpha_values() {
        let s = StepSchedule::poly_decay(2.0, 1.0).unwrap();
        assert_eq!(s.alpha(0), 2.0);
        assert_eq!(s.alpha(3), 0.5);
        assert_eq!(s.alpha_bar(), 2.0);
    }

    #[test]
    fn summability_term_decays_like_inverse_square() {
        // Numeric sanity for q = 0.5: k^2 (alpha_k / A_{k+1})^2 stays bounded.
        let s = StepSchedule::poly_decay(1.0, 0.5).unwrap();
        let mut a = 0.0;
        let mut worst: f64 = 0.0;
        for k in 0..100_000u64 {
            a += s.alpha(k);
            let t = s.alpha(k) / a;
            worst = worst.max(((k + 1) as f64) * ((k + 1) as f64) * t * t);
        }
        assert!(worst <= 1.0);
    }
}
