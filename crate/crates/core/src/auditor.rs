//! Structural checks on recorded trajectories: sufficient descent, step
//! variance bounds, the binary descent indicator and residual vanishing.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::index;

use crate::engine::{expected_step_sq, z_rule, DescentMethod, Trajectory};
use crate::error::{Error, Result};
use crate::math;
use crate::rng;

/// Absolute slack on every audit inequality after scaling by `max(1, h0)`.
pub const AUDIT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CheckReport {
    pub check: String,
    pub passed: bool,
    /// Iteration of the largest violation, if any inequality was evaluated.
    pub worst_k: Option<u64>,
    /// Largest scaled `lhs - rhs`; negative values are margins.
    pub max_violation: f64,
    pub tolerance: f64,
}

impl CheckReport {
    fn from_violations(check: &str, tolerance: f64, it: impl Iterator<Item = (u64, f64)>) -> Self {
        let mut worst_k = None;
        let mut max_violation = f64::NEG_INFINITY;
        for (k, v) in it {
            // NaN counts as a violation.
            if !(v <= max_violation) {
                max_violation = if v.is_nan() { f64::INFINITY } else { v };
                worst_k = Some(k);
            }
        }
        if worst_k.is_none() {
            max_violation = 0.0;
        }
        CheckReport {
            check: check.to_string(),
            passed: max_violation <= tolerance,
            worst_k,
            max_violation,
            tolerance,
        }
    }
}

fn scale(traj: &Trajectory) -> f64 {
    traj.h0.max(1.0)
}

/// Consecutive recorded pairs `(x^k, x^{k+1})`.
fn pairs(traj: &Trajectory) -> impl Iterator<Item = (&crate::engine::Record, &crate::engine::Record)> {
    traj.records
        .windows(2)
        .filter(|w| w[1].k == w[0].k + 1)
        .map(|w| (&w[0], &w[1]))
}

/// `h_{k+1} - h_k + (c1 / alpha_k) step_sq_k <= 0`.
pub fn audit_descent(traj: &Trajectory) -> CheckReport {
    let c1 = traj.constants.c1;
    let s = scale(traj);
    CheckReport::from_violations(
        "audit_descent",
        AUDIT_SLACK,
        pairs(traj).map(|(r, n)| (r.k, (n.h - r.h + c1 / r.alpha * r.step_sq) / s)),
    )
}

/// `step_sq_k - c3 alpha_k^2 g_k <= 0`.
pub fn audit_variance_upper(traj: &Trajectory) -> CheckReport {
    let c3 = traj.constants.c3;
    let s = scale(traj);
    CheckReport::from_violations(
        "audit_variance_upper",
        AUDIT_SLACK,
        traj.records
            .iter()
            .map(|r| (r.k, (r.step_sq - c3 * r.alpha * r.alpha * r.g) / s)),
    )
}

/// `c2 alpha^2 g(x) - E[|x+ - x|^2] <= 0`, with the expectation computed
/// exactly from the index law.
pub fn audit_variance_lower<M: DescentMethod + ?Sized>(m: &M, x: &[f64], alpha: f64) -> Result<CheckReport> {
    math::check_dim(m.x0().len(), x.len())?;
    let c2 = m.constants().c2;
    let s = m.gap(m.x0())?.max(1.0);
    let v = (c2 * alpha * alpha * m.residual(x) - expected_step_sq(m, x, alpha)) / s;
    Ok(CheckReport::from_violations(
        "audit_variance_lower",
        AUDIT_SLACK,
        core::iter::once((0, v)),
    ))
}

/// [`audit_variance_lower`] at up to `states` recorded states drawn without
/// replacement. Needs a trajectory run with `keep_states`.
pub fn audit_variance_lower_sampled<M: DescentMethod + ?Sized>(
    m: &M,
    traj: &Trajectory,
    states: usize,
    rng_seed: u64,
) -> Result<CheckReport> {
    if traj.states.len() != traj.records.len() {
        return Err(Error::DegenerateSamples(
            "trajectory was recorded without its iterates".to_string(),
        ));
    }
    let mut r = rng::stream(rng_seed, traj.stream);
    let n = traj.records.len();
    let picks = index::sample(&mut r, n, states.min(n)).into_vec();
    let c2 = traj.constants.c2;
    let s = scale(traj);
    let mut vals = Vec::with_capacity(picks.len());
    for j in picks {
        let rec = &traj.records[j];
        let x = &traj.states[j];
        let v = (c2 * rec.alpha * rec.alpha * m.residual(x) - expected_step_sq(m, x, rec.alpha)) / s;
        vals.push((rec.k, v));
    }
    vals.sort_by_key(|(k, _)| *k);
    Ok(CheckReport::from_violations(
        "audit_variance_lower",
        AUDIT_SLACK,
        vals.into_iter(),
    ))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ZExtraction {
    pub z: Vec<bool>,
    /// `Z_k = step_sq / (alpha^2 g)`, or `c3` where `g = 0`.
    pub ratios: Vec<f64>,
}

/// Recomputes the indicator for every recorded row.
pub fn extract_z(traj: &Trajectory) -> ZExtraction {
    let c = &traj.constants;
    let (ratios, z) = traj.records.iter().map(|r| z_rule(c, r.g, r.step_sq, r.alpha)).unzip();
    ZExtraction { z, ratios }
}

/// `h_{k+1} - h_k + (c1 c2 / 2) alpha_k z_k g_k <= 0`.
pub fn audit_reconstruction(traj: &Trajectory, z: &ZExtraction) -> CheckReport {
    let c = &traj.constants;
    let s = scale(traj);
    CheckReport::from_violations(
        "audit_reconstruction",
        AUDIT_SLACK,
        traj.records
            .windows(2)
            .zip(&z.z)
            .filter(|(w, _)| w[1].k == w[0].k + 1)
            .map(|(w, zk)| {
                let dec = if *zk {
                    0.5 * c.c1 * c.c2 * w[0].alpha * w[0].g
                } else {
                    0.0
                };
                (w[0].k, (w[1].h - w[0].h + dec) / s)
            }),
    )
}

/// Indicator sequence of the steps actually taken. Terminated trajectories
/// are padded with `true` up to `horizon`, matching `g = 0` at a solution.
pub fn step_z_sequence(traj: &Trajectory, horizon: usize) -> Vec<bool> {
    let mut z = extract_z(traj).z;
    // The final row takes no step.
    z.pop();
    z.truncate(horizon);
    if traj.terminated {
        z.resize(horizon, true);
    }
    z
}

/// Per-`k` ensemble frequency of `z = 1` against `p - 3 sqrt(p (1 - p) / N)`.
/// `max_violation` is the largest shortfall below the lower band edge.
pub fn zfreq_sequences(seqs: &[Vec<bool>], p: f64) -> Result<CheckReport> {
    if seqs.len() < 100 {
        return Err(Error::DegenerateSamples(alloc::format!(
            "frequency check needs at least 100 trajectories, got {}",
            seqs.len()
        )));
    }
    let horizon = seqs.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = Vec::with_capacity(horizon);
    for k in 0..horizon {
        let (ones, n) = seqs
            .iter()
            .filter_map(|s| s.get(k))
            .fold((0usize, 0usize), |(o, n), z| (o + *z as usize, n + 1));
        let band = 3.0 * math::sqrt(p * (1.0 - p) / n as f64);
        let freq = ones as f64 / n as f64;
        out.push((k as u64, p - band - freq));
    }
    Ok(CheckReport::from_violations("zfreq_check", 0.0, out.into_iter()))
}

pub fn zfreq_check(trajs: &[Trajectory], p: f64) -> Result<CheckReport> {
    let horizon = trajs.iter().map(|t| t.budget as usize).max().unwrap_or(0);
    let seqs: Vec<Vec<bool>> = trajs.iter().map(|t| step_z_sequence(t, horizon)).collect();
    zfreq_sequences(&seqs, p)
}

pub const GVANISH_TAIL: f64 = 0.1;
pub const GVANISH_REL_TOL: f64 = 1e-6;

/// Max of `g` over iterations `k >= (1 - tail_fraction) budget`; a
/// trajectory that terminated earlier contributes its final `g`.
/// `tol = None` means `1e-6 g_0`.
pub fn gvanish_check(traj: &Trajectory, tail_fraction: f64, tol: Option<f64>) -> CheckReport {
    let g0 = traj.records[0].g;
    let tol = tol.unwrap_or(GVANISH_REL_TOL * g0);
    let start = math::floor((1.0 - tail_fraction) * traj.budget as f64) as u64;
    let last = traj.last();
    let tail: Vec<(u64, f64)> = if last.k < start {
        alloc::vec![(last.k, last.g)]
    } else {
        traj.records
            .iter()
            .filter(|r| r.k >= start)
            .map(|r| (r.k, r.g))
            .collect()
    };
    let mut rep = CheckReport::from_violations("gvanish_check", tol, tail.into_iter());
    rep.passed = rep.max_violation <= tol;
    rep
}

/// Structural checks that need only the recorded rows and the constants.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AuditReport {
    pub rows: usize,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub z_ones: usize,
    pub checks: Vec<CheckReport>,
    pub passed: bool,
}

pub fn audit_suite(traj: &Trajectory) -> AuditReport {
    let z = extract_z(traj);
    let checks = alloc::vec![
        audit_descent(traj),
        audit_variance_upper(traj),
        audit_reconstruction(traj, &z),
    ];
    AuditReport {
        rows: traj.records.len(),
        c1: traj.constants.c1,
        c2: traj.constants.c2,
        c3: traj.constants.c3,
        z_ones: z.z.iter().filter(|v| **v).count(),
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}
