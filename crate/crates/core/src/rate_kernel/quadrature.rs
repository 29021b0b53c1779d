//! Adaptive Gauss–Kronrod (7/15) quadrature and a log-space bisection for
//! strictly monotone functions.
//!
//! Integrands in this crate blow up at the left endpoint, so every integral
//! reaching toward 0 is first split geometrically (ratio 2) and each dyadic
//! piece is integrated adaptively.

use alloc::vec;

use crate::error::{Error, Result};
use crate::math;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Per-interval relative tolerance of the adaptive rule.
pub const INTERVAL_TOL: f64 = 1e-12;
const MAX_DEPTH: u32 = 50;

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive integral of `f` over `[a, b]` (requires `a <= b`).
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let mut total = 0.0;
    let mut stack = vec![(a, b, 0u32)];
    while let Some((lo, hi, depth)) = stack.pop() {
        let (val, err) = gk15(f, lo, hi);
        let mid = 0.5 * (lo + hi);
        if err <= INTERVAL_TOL * val.abs() || depth >= MAX_DEPTH || !(mid > lo && mid < hi) {
            total += val;
        } else {
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    total
}

/// Integral over `[a, b]` with `0 < a < b`, split geometrically so that each
/// piece spans at most a factor of two.
pub fn integrate_geometric<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let mut total = 0.0;
    let mut lo = a;
    while lo < b {
        let hi = if lo > 0.0 { (2.0 * lo).min(b) } else { b };
        total += integrate(f, lo, hi);
        lo = hi;
    }
    total
}

/// Integral over `[0, t]` of an integrand that is singular but integrable at
/// 0. Dyadic pieces `[t/2^{j+1}, t/2^j]` are summed until the geometric tail
/// estimate drops below `1e-15` of the running sum; the estimated tail is
/// then added.
pub fn integrate_from_zero<F: Fn(f64) -> f64>(f: &F, t: f64) -> f64 {
    if !(t > 0.0) {
        return 0.0;
    }
    let mut total = 0.0;
    let mut hi = t;
    let mut prev: Option<f64> = None;
    for j in 0..1100 {
        let lo = 0.5 * hi;
        if lo < f64::MIN_POSITIVE {
            break;
        }
        let c = integrate(f, lo, hi);
        total += c;
        if let Some(p) = prev {
            if p > 0.0 && j >= 4 {
                let r = c / p;
                if r < 1.0 {
                    let tail = c * r / (1.0 - r);
                    if tail <= 1e-15 * total.abs() {
                        return total + tail;
                    }
                }
            }
        }
        prev = Some(c);
        hi = lo;
    }
    total
}

/// Finds `t` in `[lo, hi]` with `f(t) = y` for a strictly decreasing `f`, by
/// bisection on `ln t`. Stops when the bracket's relative width reaches
/// `rel_tol`. Requires `0 < lo < hi` and `f(lo) >= y >= f(hi)`.
pub fn bisect_decreasing<F: Fn(f64) -> f64>(f: &F, y: f64, lo: f64, hi: f64, rel_tol: f64) -> Result<f64> {
    let (mut lo_u, mut hi_u) = (math::ln(lo), math::ln(hi));
    let f_lo = f(lo);
    let f_hi = f(hi);
    if !(f_lo >= y && y >= f_hi) {
        return Err(Error::BisectionFailed { lo, hi, iterations: 0 });
    }
    for it in 0..400 {
        let mid_u = 0.5 * (lo_u + hi_u);
        if hi_u - lo_u <= rel_tol || mid_u <= lo_u || mid_u >= hi_u {
            return Ok(math::exp(0.5 * (lo_u + hi_u)));
        }
        let v = f(math::exp(mid_u));
        if !v.is_finite() && v.is_nan() {
            return Err(Error::BisectionFailed {
                lo: math::exp(lo_u),
                hi: math::exp(hi_u),
                iterations: it,
            });
        }
        if v > y {
            lo_u = mid_u;
        } else if v < y {
            hi_u = mid_u;
        } else {
            return Ok(math::exp(mid_u));
        }
    }
    Err(Error::BisectionFailed {
        lo: math::exp(lo_u),
        hi: math::exp(hi_u),
        iterations: 400,
    })
}
