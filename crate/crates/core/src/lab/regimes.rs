use alloc::vec::Vec;

use super::{envelope_compare_tail, fit_exponent, fit_log_linear, EnsembleSummary, Path, TailComparison};
use crate::engine::{synthetic_run, RunConfig, StepSchedule, SyntheticProcess};
use crate::error::{invalid, Result};
use crate::rate_kernel::envelope::almost_sure_h;
use crate::rate_kernel::{EnvelopeParams, PhiSpec, RateProfile};
use crate::stats::LineFit;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TerminationOutcome {
    /// Every member reached `h = 0` exactly.
    Pass,
    /// Some but not all members terminated.
    Fail,
    /// No member terminated within the budget.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TerminationReport {
    pub outcome: TerminationOutcome,
    /// Whether `1/phi` is integrable near 0, the regime where termination
    /// is expected.
    pub integrable_recip_phi: bool,
    pub n: usize,
    pub terminated: usize,
    pub min_index: Option<u64>,
    pub median_index: Option<u64>,
    pub max_index: Option<u64>,
    pub indices: Vec<Option<u64>>,
}

/// Runs `cfg.n` members with exact termination (`h = 0`). Runs with a
/// non-integrable `1/phi` are allowed as controls; the report carries the
/// flag.
pub fn finite_termination_check(
    process: &SyntheticProcess,
    schedule: &StepSchedule,
    cfg: &RunConfig,
) -> Result<TerminationReport> {
    let integrable_recip_phi = process.phi.classify_integrability()?.recip_phi;
    let cfg = RunConfig {
        termination_tol: Some(0.0),
        keep_states: false,
        ..*cfg
    };
    cfg.validate()?;
    let indices = (0..cfg.n as u64)
        .map(|i| synthetic_run(process, schedule, &cfg, cfg.base_seed, i).map(|t| t.termination_k))
        .collect::<Result<Vec<_>>>()?;
    let mut hit: Vec<u64> = indices.iter().flatten().copied().collect();
    hit.sort_unstable();
    let terminated = hit.len();
    let outcome = if terminated == cfg.n {
        TerminationOutcome::Pass
    } else if terminated == 0 {
        TerminationOutcome::Inconclusive
    } else {
        TerminationOutcome::Fail
    };
    Ok(TerminationReport {
        outcome,
        integrable_recip_phi,
        n: cfg.n,
        terminated,
        min_index: hit.first().copied(),
        median_index: hit.get(terminated / 2).copied(),
        max_index: hit.last().copied(),
        indices,
    })
}

/// Grid points need this many live members to enter a log-linear fit.
pub const MIN_ALIVE: usize = 10;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KlReport {
    pub kappa: f64,
    pub entry: TailComparison,
    /// Exponent fits of the mean gap and mean iterate distance against `A`
    /// (only for `kappa > 1/2`).
    pub h_fit: Option<LineFit>,
    pub dist_fit: Option<LineFit>,
    pub h_target: Option<f64>,
    pub dist_target: Option<f64>,
    /// `log` mean gap against `A` (only for `kappa = 1/2`).
    pub log_linear: Option<LineFit>,
}

/// Entry indices of the almost-sure gap envelope for the certified
/// `(kappa, cbar)`, plus rate fits against the predicted exponents.
pub fn local_kl_report(
    summary: &EnsembleSummary,
    paths: &[Path],
    kappa: f64,
    cbar: f64,
    params: &EnvelopeParams,
) -> Result<KlReport> {
    let h0 = params.h0_gap;
    if !(h0 > 0.0) {
        return Err(invalid("h0_gap", "must be positive"));
    }
    let profile = RateProfile::with_default_t0(PhiSpec::kl(kappa, cbar, 2.0 * h0)?, Some(h0))?;
    let a = &summary.grid.a;
    let curves: Vec<&[f64]> = paths.iter().map(|p| p.h.as_slice()).collect();
    let entry = envelope_compare_tail(a, &curves, |x| almost_sure_h(&profile, params, x))?;
    let mut report = KlReport {
        kappa,
        entry,
        h_fit: None,
        dist_fit: None,
        h_target: None,
        dist_target: None,
        log_linear: None,
    };
    if kappa <= 0.5 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = a
            .iter()
            .zip(&summary.h.mean)
            .zip(&summary.alive)
            .filter(|(_, alive)| **alive >= MIN_ALIVE)
            .map(|(p, _)| (*p.0, *p.1))
            .unzip();
        report.log_linear = fit_log_linear(&xs, &ys, 5).ok();
    } else {
        let d = 2.0 * kappa - 1.0;
        report.h_target = Some(-1.0 / d);
        report.dist_target = Some(-(1.0 - kappa) / d);
        report.h_fit = fit_exponent(a, &summary.h.mean, 0.5).ok();
        report.dist_fit = summary.dist.as_ref().and_then(|c| fit_exponent(a, &c.mean, 0.5).ok());
    }
    Ok(report)
}
