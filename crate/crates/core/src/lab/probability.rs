use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::engine::StepSchedule;
use crate::error::{invalid, Result};
use crate::math;
use crate::rng;

/// Thins `z` to `Y_k = z_k 1{U_k <= p / q_k}`, where `q_k >= p` is the exact
/// conditional success probability of `z_k`. Then `Y <= z` pointwise and `Y`
/// is i.i.d. Bernoulli(`p`).
pub fn dominance_couple<R: Rng + ?Sized>(z: &[bool], cond_probs: &[f64], p: f64, rng: &mut R) -> Result<Vec<bool>> {
    if z.len() != cond_probs.len() {
        return Err(invalid("cond_probs", "must have one entry per indicator"));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid("p", "must lie in (0, 1]"));
    }
    if let Some(q) = cond_probs.iter().find(|q| !(**q >= p && **q <= 1.0)) {
        return Err(invalid(
            "cond_probs",
            alloc::format!("conditional probability {q} is below the floor {p} or above 1"),
        ));
    }
    Ok(z.iter()
        .zip(cond_probs)
        .map(|(zk, q)| {
            // Draw U regardless of z so the thinning stream stays aligned.
            let u: f64 = rng.gen();
            *zk && u < p / q
        })
        .collect())
}

/// Lag-1 sample autocorrelation of a binary sequence.
pub fn lag1_autocorrelation(y: &[bool]) -> f64 {
    let n = y.len();
    if n < 2 {
        return 0.0;
    }
    let m = y.iter().filter(|v| **v).count() as f64 / n as f64;
    let dev = |v: bool| v as u8 as f64 - m;
    let var: f64 = y.iter().map(|v| dev(*v) * dev(*v)).sum();
    if var == 0.0 {
        return 0.0;
    }
    let cov: f64 = y.windows(2).map(|w| dev(w[0]) * dev(w[1])).sum();
    cov / var
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HoeffdingReport {
    pub passed: bool,
    pub worst_k: usize,
    /// Largest `mean - bound - 3 sd / sqrt(N)`.
    pub max_excess: f64,
    pub empirical: Vec<f64>,
    pub bound: Vec<f64>,
}

/// Monte Carlo check of
/// `E[chi(S_k)] <= chi(0) exp(-p^2 A_k / (2 alpha_bar)) + chi(p A_k / 2)`
/// with `S_k = sum_{j<k} alpha_j X_j`, `X_j` i.i.d. Bernoulli(`p`).
pub fn hoeffding_check<F: Fn(f64) -> f64>(
    p: f64,
    schedule: &StepSchedule,
    chi: F,
    horizon: usize,
    n: usize,
    rng_seed: u64,
) -> Result<HoeffdingReport> {
    schedule.validate()?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid("p", "must lie in (0, 1]"));
    }
    if n < 2 {
        return Err(invalid("n", "need at least two sequences"));
    }
    let alphas: Vec<f64> = (0..horizon as u64).map(|k| schedule.alpha(k)).collect();
    let mut a = vec![0.0; horizon + 1];
    for k in 0..horizon {
        a[k + 1] = a[k] + alphas[k];
    }
    // Spot-check that chi is non-increasing on [0, A_K].
    let top = a[horizon].max(1.0);
    let mut prev = chi(0.0);
    for s in 1..=256 {
        let v = chi(top * s as f64 / 256.0);
        if !(v <= prev + 1e-12 * prev.abs().max(1.0)) {
            return Err(invalid("chi", "must be non-increasing"));
        }
        prev = v;
    }
    let mut sum = vec![0.0; horizon + 1];
    let mut sum_sq = vec![0.0; horizon + 1];
    for i in 0..n as u64 {
        let mut r = rng::stream(rng_seed, i);
        let mut s = 0.0;
        for k in 0..=horizon {
            let v = chi(s);
            sum[k] += v;
            sum_sq[k] += v * v;
            if k < horizon && r.gen::<f64>() < p {
                s += alphas[k];
            }
        }
    }
    let nf = n as f64;
    let alpha_bar = schedule.alpha_bar();
    let chi0 = chi(0.0);
    let mut empirical = Vec::with_capacity(horizon + 1);
    let mut bound = Vec::with_capacity(horizon + 1);
    let mut max_excess = f64::NEG_INFINITY;
    let mut worst_k = 0;
    for k in 0..=horizon {
        let m = sum[k] / nf;
        let var = ((sum_sq[k] - nf * m * m) / (nf - 1.0)).max(0.0);
        let b = chi0 * math::exp(-p * p * a[k] / (2.0 * alpha_bar)) + chi(p * a[k] / 2.0);
        let excess = m - b - 3.0 * math::sqrt(var / nf);
        if excess > max_excess {
            max_excess = excess;
            worst_k = k;
        }
        empirical.push(m);
        bound.push(b);
    }
    Ok(HoeffdingReport {
        passed: max_excess <= 1e-12,
        worst_k,
        max_excess,
        empirical,
        bound,
    })
}

pub const LIMINF_EPS: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LiminfReport {
    pub passed: bool,
    /// Smallest weighted frequency over the final 20% of the horizon.
    pub min_ratio: f64,
    pub worst_k: usize,
    pub tail_start: usize,
}

/// `R_k = sum_{j<k} alpha_j X_j / sum_{j<k} alpha_j` must stay above
/// `p - eps` over the final 20% of the horizon.
pub fn liminf_check(alpha: &[f64], x: &[bool], p: f64, eps: f64) -> Result<LiminfReport> {
    if alpha.len() != x.len() || alpha.is_empty() {
        return Err(invalid("x", "need one indicator per stepsize and a nonempty horizon"));
    }
    if alpha.iter().any(|a| !(*a > 0.0)) {
        return Err(invalid("alpha", "stepsizes must be positive"));
    }
    let horizon = alpha.len();
    let tail_start = (math::floor(0.8 * horizon as f64) as usize).max(1);
    let mut num = 0.0;
    let mut den = 0.0;
    let mut min_ratio = f64::INFINITY;
    let mut worst_k = tail_start;
    for k in 1..=horizon {
        den += alpha[k - 1];
        if x[k - 1] {
            num += alpha[k - 1];
        }
        if k >= tail_start {
            let r = num / den;
            if r < min_ratio {
                min_ratio = r;
                worst_k = k;
            }
        }
    }
    Ok(LiminfReport {
        passed: min_ratio >= p - eps,
        min_ratio,
        worst_k,
        tail_start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bernoulli(n: usize, q: f64, seed: u64) -> Vec<bool> {
        let mut r = rng::stream(seed, 0);
        (0..n).map(|_| r.gen::<f64>() < q).collect()
    }

    #[test]
    fn coupling_with_equal_probabilities_is_identity() {
        let z = bernoulli(1000, 0.3, 1);
        let y = dominance_couple(&z, &vec![0.3; 1000], 0.3, &mut rng::stream(2, 0)).unwrap();
        assert_eq!(y, z);
    }

    #[test]
    fn coupling_thins_to_target_frequency() {
        let n = 100_000;
        let z = bernoulli(n, 0.8, 3);
        let y = dominance_couple(&z, &vec![0.8; n], 0.4, &mut rng::stream(4, 0)).unwrap();
        assert!(y.iter().zip(&z).all(|(a, b)| !a || *b));
        let f = y.iter().filter(|v| **v).count() as f64 / n as f64;
        assert!((f - 0.4).abs() <= 3.0 * (0.24f64 / n as f64).sqrt());
        assert!(lag1_autocorrelation(&y).abs() <= 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn coupling_rejects_low_probabilities() {
        assert!(dominance_couple(&[true], &[0.2], 0.4, &mut rng::stream(0, 0)).is_err());
    }

    #[test]
    fn hoeffding_deterministic_and_k0() {
        let s = StepSchedule::constant(1.0).unwrap();
        let rep = hoeffding_check(1.0, &s, |t| 1.0 / (1.0 + t), 50, 10, 0).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.empirical[0], 1.0);
        assert_eq!(rep.bound[0], 2.0);
        assert!((rep.empirical[50] - 1.0 / 51.0).abs() < 1e-15);
    }

    #[test]
    fn hoeffding_rejects_increasing_chi() {
        let s = StepSchedule::constant(1.0).unwrap();
        assert!(hoeffding_check(0.5, &s, |t| t, 10, 10, 0).is_err());
    }

    #[test]
    fn liminf_examples() {
        let a = vec![1.0; 10_000];
        assert!(liminf_check(&a, &vec![true; 10_000], 0.5, LIMINF_EPS).unwrap().passed);
        assert!(!liminf_check(&a, &vec![false; 10_000], 0.5, LIMINF_EPS).unwrap().passed);
        let x = bernoulli(10_000, 0.6, 9);
        assert!(liminf_check(&a, &x, 0.5, LIMINF_EPS).unwrap().passed);
    }
}
