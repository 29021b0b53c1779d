//! Ensemble statistics, rate fits and envelope comparisons.

mod probability;
mod regimes;

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::engine::{run_instance, RunConfig, StepSchedule, Trajectory};
use crate::error::{Error, Result};
use crate::math;
use crate::stats::{self, LineFit};
use crate::zoo::Instance;

pub use probability::{
    dominance_couple, hoeffding_check, lag1_autocorrelation, liminf_check, HoeffdingReport, LiminfReport, LIMINF_EPS,
};
pub use regimes::{
    finite_termination_check, local_kl_report, KlReport, TerminationOutcome, TerminationReport, MIN_ALIVE,
};

/// Iterations recorded by every member and their cumulative stepsizes.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Grid {
    pub k: Vec<u64>,
    #[cfg_attr(feature = "serde", serde(rename = "A"))]
    pub a: Vec<f64>,
}

impl Grid {
    pub fn new(schedule: &StepSchedule, cfg: &RunConfig) -> Self {
        let mut k = Vec::new();
        let mut a = Vec::new();
        let mut acc = 0.0;
        for j in 0..=cfg.k_max {
            if cfg.is_recorded(j) || j == cfg.k_max {
                k.push(j);
                a.push(acc);
            }
            acc += schedule.alpha(j);
        }
        Grid { k, a }
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }
}

/// Compact per-member curves on the ensemble grid. Values past termination
/// repeat the final state.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub h: Vec<f64>,
    /// `|x^k - x*|` against the member's limit estimate; `None` for scalar
    /// processes.
    pub dist: Option<Vec<f64>>,
    /// Indicator of each step, `true` past termination.
    pub z: Vec<bool>,
    pub terminated_at: Option<u64>,
}

impl Path {
    /// `traj` must have been run with `keep_states` for `dist` to be filled.
    pub fn from_trajectory(traj: &Trajectory, grid: &Grid) -> Self {
        let n = grid.len();
        let mut h = Vec::with_capacity(n);
        let with_dist = !traj.limit.is_empty() && traj.states.len() == traj.records.len();
        let mut dist = Vec::with_capacity(if with_dist { n } else { 0 });
        let zs = crate::auditor::extract_z(traj).z;
        let mut z = Vec::with_capacity(n.saturating_sub(1));
        let mut j = 0;
        for (pos, &k) in grid.k.iter().enumerate() {
            while j + 1 < traj.records.len() && traj.records[j].k < k {
                j += 1;
            }
            let rec = &traj.records[j];
            let past_end = rec.k < k || (traj.terminated && j + 1 == traj.records.len());
            h.push(rec.h);
            if with_dist {
                dist.push(math::dist(&traj.states[j], &traj.limit));
            }
            if pos + 1 < n {
                z.push(if past_end { traj.terminated } else { zs[j] });
            }
        }
        Path {
            h,
            dist: with_dist.then_some(dist),
            z,
            terminated_at: traj.termination_k,
        }
    }
}

/// Runs member `index` of the ensemble on stream `(cfg.base_seed, index)`.
pub fn run_member(inst: &Instance, schedule: &StepSchedule, cfg: &RunConfig, index: u64) -> Result<Trajectory> {
    run_instance(inst, schedule, cfg, cfg.base_seed, index)
}

/// Runs one member and reduces it to a [`Path`].
pub fn simulate_member(
    inst: &Instance,
    schedule: &StepSchedule,
    cfg: &RunConfig,
    grid: &Grid,
    index: u64,
) -> Result<Path> {
    let cfg = RunConfig {
        keep_states: !matches!(inst, Instance::Synthetic(_)),
        ..*cfg
    };
    Ok(Path::from_trajectory(&run_member(inst, schedule, &cfg, index)?, grid))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurveStats {
    pub mean: Vec<f64>,
    pub q05: Vec<f64>,
    pub q50: Vec<f64>,
    pub q95: Vec<f64>,
}

impl CurveStats {
    fn from_columns(rows: &[&[f64]], len: usize) -> Self {
        let mut out = CurveStats {
            mean: Vec::with_capacity(len),
            q05: Vec::with_capacity(len),
            q50: Vec::with_capacity(len),
            q95: Vec::with_capacity(len),
        };
        let mut col = Vec::with_capacity(rows.len());
        for j in 0..len {
            col.clear();
            col.extend(rows.iter().map(|r| r[j]));
            out.mean.push(stats::mean(&col));
            col.sort_by(|a, b| a.total_cmp(b));
            out.q05.push(stats::quantile_sorted(&col, 0.05));
            out.q50.push(stats::quantile_sorted(&col, 0.5));
            out.q95.push(stats::quantile_sorted(&col, 0.95));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsembleSummary {
    pub problem: String,
    pub n: usize,
    pub grid: Grid,
    pub h: CurveStats,
    pub dist: Option<CurveStats>,
    /// Members not yet terminated at each grid point.
    pub alive: Vec<usize>,
    pub terminated: usize,
}

/// Per-`k` means and quantiles; paths must be in member order.
pub fn summarize(problem: &str, grid: &Grid, paths: &[Path]) -> Result<EnsembleSummary> {
    if paths.len() < 2 {
        return Err(Error::DegenerateSamples(
            "ensemble needs at least two members".to_string(),
        ));
    }
    let n = grid.len();
    let hs: Vec<&[f64]> = paths.iter().map(|p| p.h.as_slice()).collect();
    let dists: Option<Vec<&[f64]>> = paths.iter().map(|p| p.dist.as_deref()).collect();
    let alive = grid
        .k
        .iter()
        .map(|&k| paths.iter().filter(|p| p.terminated_at.map_or(true, |t| t > k)).count())
        .collect();
    Ok(EnsembleSummary {
        problem: problem.to_string(),
        n: paths.len(),
        grid: grid.clone(),
        h: CurveStats::from_columns(&hs, n),
        dist: dists.map(|d| CurveStats::from_columns(&d, n)),
        alive,
        terminated: paths.iter().filter(|p| p.terminated_at.is_some()).count(),
    })
}

/// Sequential ensemble; the `ratelab` crate provides a parallel one with
/// identical output.
pub fn monte_carlo(inst: &Instance, schedule: &StepSchedule, cfg: &RunConfig) -> Result<(EnsembleSummary, Vec<Path>)> {
    cfg.validate()?;
    let grid = Grid::new(schedule, cfg);
    let paths = (0..cfg.n as u64)
        .map(|i| simulate_member(inst, schedule, cfg, &grid, i))
        .collect::<Result<Vec<_>>>()?;
    Ok((summarize(inst.name(), &grid, &paths)?, paths))
}

pub const MIN_FIT_POINTS: usize = 10;
const FIT_SAMPLES: usize = 200;

/// Least squares of `log value` on `log A` over the trailing `window`
/// fraction of the log-A range, subsampled at up to 200 log-spaced points.
pub fn fit_exponent(a: &[f64], values: &[f64], window: f64) -> Result<LineFit> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(crate::error::invalid("window", "must lie in (0, 1]"));
    }
    let pts: Vec<(f64, f64)> = a
        .iter()
        .zip(values)
        .filter(|(x, v)| **x > 0.0 && **v > 0.0 && x.is_finite() && v.is_finite())
        .map(|(x, v)| (math::ln(*x), math::ln(*v)))
        .collect();
    if pts.is_empty() {
        return Err(Error::DegenerateSamples("no positive points to fit".to_string()));
    }
    let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let start = hi - window * (hi - lo);
    let in_window: Vec<(f64, f64)> = pts.into_iter().filter(|p| p.0 >= start).collect();
    let chosen = log_spaced(&in_window, FIT_SAMPLES);
    if chosen.len() < MIN_FIT_POINTS {
        return Err(Error::DegenerateSamples(alloc::format!(
            "need at least {MIN_FIT_POINTS} positive points in the fitting window, got {}",
            chosen.len()
        )));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = chosen.into_iter().unzip();
    stats::linear_fit(&xs, &ys)
}

/// Keeps the point nearest each of `m` evenly spaced abscissae.
fn log_spaced(pts: &[(f64, f64)], m: usize) -> Vec<(f64, f64)> {
    if pts.len() <= m {
        return pts.to_vec();
    }
    let lo = pts[0].0;
    let hi = pts[pts.len() - 1].0;
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(m);
    let mut j = 0;
    let mut last = usize::MAX;
    for s in 0..m {
        let target = lo + (hi - lo) * s as f64 / (m - 1) as f64;
        while j + 1 < pts.len() && (pts[j + 1].0 - target).abs() <= (pts[j].0 - target).abs() {
            j += 1;
        }
        if j != last {
            out.push(pts[j]);
            last = j;
        }
    }
    out
}

/// Least squares of `log value` on `A` over the positive points.
pub fn fit_log_linear(a: &[f64], values: &[f64], min_points: usize) -> Result<LineFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = a
        .iter()
        .zip(values)
        .filter(|(x, v)| **v > 0.0 && v.is_finite() && x.is_finite())
        .map(|(x, v)| (*x, math::ln(*v)))
        .unzip();
    if xs.len() < min_points.max(2) {
        return Err(Error::DegenerateSamples(alloc::format!(
            "need at least {} positive points, got {}",
            min_points.max(2),
            xs.len()
        )));
    }
    stats::linear_fit(&xs, &ys)
}

/// Relative slack when comparing a curve with an envelope.
pub const ENVELOPE_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeanComparison {
    /// Fraction of defined grid points with `mean <= env (1 + 1e-6)`.
    pub fraction: f64,
    pub defined: usize,
    pub undefined: usize,
    /// Largest `mean / env`, with its grid position.
    pub worst_ratio: f64,
    pub worst_index: usize,
}

fn envelope_values<F: Fn(f64) -> Result<f64>>(a: &[f64], env: &F) -> Vec<Option<f64>> {
    a.iter()
        .map(|x| env(*x).ok().filter(|v| v.is_finite() && *v >= 0.0))
        .collect()
}

pub fn envelope_compare_mean<F: Fn(f64) -> Result<f64>>(a: &[f64], mean: &[f64], env: F) -> Result<MeanComparison> {
    let envs = envelope_values(a, &env);
    let mut defined = 0;
    let mut under = 0;
    let mut worst_ratio = f64::NEG_INFINITY;
    let mut worst_index = 0;
    for (j, (m, e)) in mean.iter().zip(&envs).enumerate() {
        let Some(e) = e else { continue };
        defined += 1;
        if *m <= e * (1.0 + ENVELOPE_REL_TOL) {
            under += 1;
        }
        let ratio = if *e > 0.0 {
            m / e
        } else if *m > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_index = j;
        }
    }
    if defined == 0 {
        return Err(Error::DegenerateSamples(
            "envelope is undefined on the whole range".to_string(),
        ));
    }
    Ok(MeanComparison {
        fraction: under as f64 / defined as f64,
        defined,
        undefined: mean.len().min(envs.len()) - defined,
        worst_ratio,
        worst_index,
    })
}

/// Points required after an entry index for it to count as attained.
pub const MIN_POST_ENTRY: usize = 10;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailComparison {
    /// Per member: first grid position after which the curve stays under
    /// the envelope through the horizon, when followed by at least
    /// [`MIN_POST_ENTRY`] points.
    pub entry: Vec<Option<usize>>,
    pub fraction_finite: f64,
    pub max_entry: Option<usize>,
}

/// Undefined envelope points neither violate nor confirm the bound.
pub fn envelope_compare_tail<F: Fn(f64) -> Result<f64>>(
    a: &[f64],
    curves: &[&[f64]],
    env: F,
) -> Result<TailComparison> {
    let envs = envelope_values(a, &env);
    if envs.iter().all(Option::is_none) {
        return Err(Error::DegenerateSamples(
            "envelope is undefined on the whole range".to_string(),
        ));
    }
    let entry: Vec<Option<usize>> = curves
        .iter()
        .map(|c| {
            let n = c.len().min(envs.len());
            let mut first_ok = n;
            for j in (0..n).rev() {
                match envs[j] {
                    Some(e) if c[j] > e * (1.0 + ENVELOPE_REL_TOL) => break,
                    _ => first_ok = j,
                }
            }
            (n - first_ok >= MIN_POST_ENTRY).then_some(first_ok)
        })
        .collect();
    let finite = entry.iter().filter(|e| e.is_some()).count();
    Ok(TailComparison {
        fraction_finite: finite as f64 / curves.len().max(1) as f64,
        max_entry: entry.iter().flatten().copied().max(),
        entry,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::zoo::bundled;
    use alloc::vec;

    fn grid(n: usize) -> Vec<f64> {
        (1..=n).map(|k| k as f64).collect()
    }

    #[test]
    fn fit_exact_power_laws() {
        let a = grid(1000);
        let v: Vec<f64> = a.iter().map(|x| x.powi(-2)).collect();
        let f = fit_exponent(&a, &v, 0.5).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-9);
        let v: Vec<f64> = a.iter().map(|x| 3.0 / x).collect();
        let f = fit_exponent(&a, &v, 0.5).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-9);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn fit_noisy_power_law() {
        let a = grid(2000);
        let mut r = rng::stream(17, 0);
        let v: Vec<f64> = a.iter().map(|x| (1.0 + 0.01 * rng::normal(&mut r)) / x).collect();
        let f = fit_exponent(&a, &v, 0.5).unwrap();
        assert!((-1.05..=-0.95).contains(&f.slope), "{f:?}");
    }

    #[test]
    fn fit_rejects_short_windows() {
        let a = grid(9);
        let v = vec![1.0; 9];
        assert!(fit_exponent(&a, &v, 1.0).is_err());
        let v = vec![0.0; 9];
        assert!(fit_exponent(&a, &v, 1.0).is_err());
    }

    #[test]
    fn log_linear_fit_recovers_rate() {
        let a = grid(20);
        let v: Vec<f64> = a.iter().map(|x| 2.0 * (-0.3 * x).exp()).collect();
        let f = fit_log_linear(&a, &v, 5).unwrap();
        assert!((f.slope + 0.3).abs() < 1e-12);
        assert!(f.r_squared > 0.999_999);
    }

    #[test]
    fn vacuous_envelope_and_undefined_range() {
        let a = grid(10);
        let m: Vec<f64> = a.iter().map(|x| 1.0 / x).collect();
        let rep = envelope_compare_mean(&a, &m, |_| Ok(1.0)).unwrap();
        assert_eq!(rep.fraction, 1.0);
        assert!(envelope_compare_mean(&a, &m, |_| Err(Error::IntegrableModulus)).is_err());
    }

    #[test]
    fn tail_entry_detection() {
        let a = grid(30);
        let c1: Vec<f64> = a.iter().map(|x| if *x < 5.0 { 10.0 } else { 0.5 }).collect();
        let c2 = vec![10.0; 30];
        let rep = envelope_compare_tail(&a, &[&c1, &c2], |_| Ok(1.0)).unwrap();
        assert_eq!(rep.entry, vec![Some(4), None]);
        assert_eq!(rep.fraction_finite, 0.5);
    }

    #[test]
    fn identical_members_give_degenerate_quantiles() {
        let inst = bundled("rkmm_theta1").unwrap();
        let s = StepSchedule::constant(1.0).unwrap();
        let cfg = RunConfig::new(50, 2, 4);
        let g = Grid::new(&s, &cfg);
        let p = simulate_member(&inst, &s, &cfg, &g, 0).unwrap();
        let sum = summarize("x", &g, &[p.clone(), p]).unwrap();
        assert_eq!(sum.h.mean, sum.h.q05);
        assert_eq!(sum.h.q50, sum.h.q95);
        let d = sum.dist.unwrap();
        assert_eq!(d.mean, d.q50);
    }

    #[test]
    fn monte_carlo_means_are_monotone() {
        for name in crate::zoo::BUNDLED {
            let inst = bundled(name).unwrap();
            let s = StepSchedule::constant(1.0).unwrap();
            let (sum, paths) = monte_carlo(&inst, &s, &RunConfig::new(200, 20, 1)).unwrap();
            assert_eq!(paths.len(), 20);
            assert_eq!(sum.grid.len(), 201);
            for w in sum.h.mean.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-15, "{name}");
            }
        }
    }

    #[test]
    fn limit_estimates_match_known_solutions() {
        let inst = bundled("rcd_quartic").unwrap();
        let s = StepSchedule::constant(1.0).unwrap();
        let mut cfg = RunConfig::new(30, 1, 0);
        cfg.keep_states = true;
        let t = run_member(&inst, &s, &cfg, 0).unwrap();
        assert_eq!(t.limit, vec![0.0; 4]);
        let g = Grid::new(&s, &cfg);
        let p = Path::from_trajectory(&t, &g);
        assert!((p.dist.unwrap()[0] - math::norm(&[1.0, -0.8, 0.6, -0.4])).abs() < 1e-15);
    }

    #[test]
    fn terminated_paths_extend_final_state() {
        let inst = bundled("rcd_quadratic").unwrap();
        let s = StepSchedule::constant(1.0).unwrap();
        let cfg = RunConfig::new(100, 1, 0);
        let g = Grid::new(&s, &cfg);
        let p = simulate_member(&inst, &s, &cfg, &g, 0).unwrap();
        let t = p.terminated_at.unwrap() as usize;
        assert!(p.h[t..].iter().all(|h| *h == 0.0));
        assert!(p.z[t..].iter().all(|z| *z));
        assert_eq!(p.z.len(), 100);
    }
}
