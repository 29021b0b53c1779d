//! The `run` pipeline: simulate, audit, compare with envelopes, fit rates,
//! then write the artifact directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use ratelab_core::auditor::{zfreq_sequences, AuditReport, CheckReport};
use ratelab_core::engine::{StepSchedule, SyntheticProcess};
use ratelab_core::lab::{
    envelope_compare_mean, envelope_compare_tail, finite_termination_check, fit_exponent, fit_log_linear, summarize,
    EnsembleSummary, TerminationOutcome, MIN_ALIVE,
};
use ratelab_core::rate_kernel::envelope::{almost_sure_h, expectation_h, expectation_h_convex};
use ratelab_core::rate_kernel::{DescentConstants, EnvelopeParams, RateProfile};
use ratelab_core::stats::LineFit;
use ratelab_core::zoo::{Certificate, Instance};

use crate::config::{CompareMode, Curve, EnvelopeCheck, EnvelopeKind, ExperimentConfig, FitCheck, FitKind};
use crate::ensemble::{run_members, MemberOptions, MemberOutcome};
use crate::error::{LabError, Result};
use crate::formats::{curve_csv_string, TRAJECTORY_HEADER};

/// Members exported as CSV when the config does not say.
pub const DEFAULT_EXPORT: usize = 10;

/// Minimum points for a log-linear fit.
const LOG_LINEAR_MIN_POINTS: usize = 5;

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// One-line description for the text summary.
    pub summary: String,
    pub detail: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub problem: String,
    pub seed: u64,
    pub n: usize,
    pub k_max: u64,
    pub stride: u64,
    pub schedule: StepSchedule,
    pub constants: DescentConstants,
    pub p: f64,
    pub h0: f64,
    pub regime: String,
    pub certificate: Certificate,
    pub terminated: usize,
    pub checks: Vec<CheckOutcome>,
    /// Requested checks that could not run, with the reason.
    pub skipped: Vec<String>,
    pub passed: bool,
}

impl ExperimentReport {
    pub fn failed_checks(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.clone())
            .collect()
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        let c = &self.constants;
        let _ = writeln!(s, "problem     {}", self.problem);
        let _ = writeln!(s, "regime      {}", self.regime);
        let _ = writeln!(s, "constants   c1={} c2={} c3={} p={:.6}", c.c1, c.c2, c.c3, self.p);
        let _ = writeln!(
            s,
            "ensemble    N={} K={} seed={} h0={:.6e}, {} terminated",
            self.n, self.k_max, self.seed, self.h0, self.terminated
        );
        let _ = writeln!(s, "checks");
        for ch in &self.checks {
            let tag = if ch.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "  {tag} {:<28} {}", ch.name, ch.summary);
        }
        for note in &self.skipped {
            let _ = writeln!(s, "  SKIP {note}");
        }
        let _ = writeln!(s, "result      {}", if self.passed { "PASS" } else { "FAIL" });
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    pub member: usize,
    pub seed: u64,
    pub stream: u64,
    pub rows: usize,
    pub terminated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub problem: String,
    pub header: String,
    pub seed: u64,
    pub n: usize,
    pub k_max: u64,
    pub stride: u64,
    pub schedule: StepSchedule,
    pub constants: DescentConstants,
    pub p: f64,
    pub files: Vec<ManifestEntry>,
}

/// Everything the pipeline produced, before it is written out.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub report: ExperimentReport,
    pub summary: EnsembleSummary,
    pub manifest: Manifest,
    /// `(file stem, csv text, structural audit)` per exported member.
    pub exported: Vec<(String, String, Option<AuditReport>)>,
}

fn member_stem(i: usize) -> String {
    format!("traj_{i:04}")
}

fn aggregate<'a>(name: &str, reports: impl Iterator<Item = (usize, &'a CheckReport)>) -> CheckOutcome {
    let mut members = 0;
    let mut failing = 0;
    let mut worst: Option<(usize, &CheckReport)> = None;
    for (i, r) in reports {
        members += 1;
        if !r.passed {
            failing += 1;
        }
        if worst.map_or(true, |(_, w)| !(r.max_violation <= w.max_violation)) {
            worst = Some((i, r));
        }
    }
    let (worst_member, worst_k, max_violation, tolerance) = match worst {
        Some((i, r)) => (Some(i), r.worst_k, r.max_violation, r.tolerance),
        None => (None, None, 0.0, 0.0),
    };
    CheckOutcome {
        name: name.to_string(),
        passed: failing == 0,
        summary: format!(
            "{failing}/{members} members fail; worst scaled violation {max_violation:.3e} (member {}, k {})",
            worst_member.map_or("-".to_string(), |i| i.to_string()),
            worst_k.map_or("-".to_string(), |k| k.to_string()),
        ),
        detail: json!({
            "members": members,
            "failing_members": failing,
            "worst_member": worst_member,
            "worst_k": worst_k,
            "max_violation": max_violation,
            "tolerance": tolerance,
        }),
    }
}

fn failed(name: String, err: impl std::fmt::Display) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: false,
        summary: format!("could not be evaluated: {err}"),
        detail: json!({ "error": err.to_string() }),
    }
}

fn kind_name(k: EnvelopeKind) -> &'static str {
    match k {
        EnvelopeKind::Expectation => "expectation",
        EnvelopeKind::ExpectationConvex => "expectation_convex",
        EnvelopeKind::AlmostSure => "almost_sure",
    }
}

fn envelope_outcome(
    check: &EnvelopeCheck,
    profile: &ratelab_core::Result<RateProfile>,
    params: &EnvelopeParams,
    summary: &EnsembleSummary,
    members: &[MemberOutcome],
) -> CheckOutcome {
    let mode = match check.mode {
        CompareMode::Mean => "mean",
        CompareMode::Tail => "tail",
    };
    let name = format!("envelope_{}_{mode}", kind_name(check.kind));
    let profile = match profile {
        Ok(p) => p,
        Err(e) => return failed(name, e),
    };
    let env = |a: f64| match check.kind {
        EnvelopeKind::Expectation => expectation_h(profile, params, a),
        EnvelopeKind::ExpectationConvex => expectation_h_convex(profile, params, a),
        EnvelopeKind::AlmostSure => almost_sure_h(profile, params, a),
    };
    let a = &summary.grid.a;
    match check.mode {
        CompareMode::Mean => match envelope_compare_mean(a, &summary.h.mean, env) {
            Ok(rep) => CheckOutcome {
                passed: rep.fraction >= check.min_fraction,
                summary: format!(
                    "mean gap under envelope at {:.1}% of {} points (need {:.1}%); worst ratio {:.4} at k {}",
                    100.0 * rep.fraction,
                    rep.defined,
                    100.0 * check.min_fraction,
                    rep.worst_ratio,
                    summary.grid.k[rep.worst_index]
                ),
                detail: serde_json::to_value(&rep).expect("serializable"),
                name,
            },
            Err(e) => failed(name, e),
        },
        CompareMode::Tail => {
            let curves: Vec<&[f64]> = members.iter().map(|m| m.path.h.as_slice()).collect();
            match envelope_compare_tail(a, &curves, env) {
                Ok(rep) => CheckOutcome {
                    passed: rep.fraction_finite >= check.min_fraction,
                    summary: format!(
                        "{:.1}% of members enter the envelope for good (need {:.1}%); latest entry k {}",
                        100.0 * rep.fraction_finite,
                        100.0 * check.min_fraction,
                        rep.max_entry.map_or("-".to_string(), |j| summary.grid.k[j].to_string())
                    ),
                    detail: json!({
                        "fraction_finite": rep.fraction_finite,
                        "max_entry_k": rep.max_entry.map(|j| summary.grid.k[j]),
                        "entry_k": rep.entry.iter().map(|e| e.map(|j| summary.grid.k[j])).collect::<Vec<_>>(),
                    }),
                    name,
                },
                Err(e) => failed(name, e),
            }
        }
    }
}

fn fit_outcome(check: &FitCheck, summary: &EnsembleSummary) -> CheckOutcome {
    let (curve_name, curve) = match check.curve {
        Curve::H => ("h", Some(&summary.h)),
        Curve::Dist => ("dist", summary.dist.as_ref()),
    };
    let kind = match check.kind {
        FitKind::Exponent => "exponent",
        FitKind::LogLinear => "log_linear",
    };
    let name = format!("fit_{kind}_{curve_name}");
    let Some(curve) = curve else {
        return failed(name, "no distance curve for this instance");
    };
    let a = &summary.grid.a;
    let fit: ratelab_core::Result<LineFit> = match check.kind {
        FitKind::Exponent => fit_exponent(a, &curve.mean, check.window),
        FitKind::LogLinear => {
            let (xs, ys): (Vec<f64>, Vec<f64>) = a
                .iter()
                .zip(&curve.mean)
                .zip(&summary.alive)
                .filter(|(_, alive)| **alive >= MIN_ALIVE)
                .map(|((x, v), _)| (*x, *v))
                .unzip();
            fit_log_linear(&xs, &ys, LOG_LINEAR_MIN_POINTS)
        }
    };
    let fit = match fit {
        Ok(f) => f,
        Err(e) => return failed(name, e),
    };
    let passed = check.slope_min.map_or(true, |m| fit.slope >= m)
        && check.slope_max.map_or(true, |m| fit.slope <= m)
        && check.min_r2.map_or(true, |m| fit.r_squared >= m);
    let against = match check.kind {
        FitKind::Exponent => "log A",
        FitKind::LogLinear => "A",
    };
    let bounds = format!(
        "slope in [{}, {}], R² >= {}",
        check.slope_min.map_or("-inf".to_string(), |v| v.to_string()),
        check.slope_max.map_or("inf".to_string(), |v| v.to_string()),
        check.min_r2.map_or("0".to_string(), |v| v.to_string()),
    );
    CheckOutcome {
        name,
        passed,
        summary: format!(
            "log mean {curve_name} vs {against}: slope {:.4}, R² {:.4} over {} points (want {bounds})",
            fit.slope, fit.r_squared, fit.points
        ),
        detail: serde_json::to_value(fit).expect("serializable"),
    }
}

/// Runs the configured pipeline; check failures are recorded in the report,
/// not returned as errors.
pub fn run(cfg: &ExperimentConfig) -> Result<Experiment> {
    let inst = &cfg.instance;
    let run_cfg = cfg.run_config_for();
    let checks = &cfg.checks;
    let export = cfg.output.export.unwrap_or(DEFAULT_EXPORT).min(run_cfg.n);
    let opts = MemberOptions {
        structural: checks.structural,
        variance_lower_states: checks.variance_lower_states,
        gvanish: checks.gvanish.then_some((checks.gvanish_tail, checks.gvanish_rel_tol)),
        export: export > 0,
    };
    let (grid, members) =
        run_members(inst, &cfg.schedule, &run_cfg, &opts, export).map_err(LabError::numerical("simulation"))?;
    let paths: Vec<_> = members.iter().map(|m| m.path.clone()).collect();
    let summary = summarize(inst.name(), &grid, &paths).map_err(LabError::numerical("summary"))?;

    let constants = inst.constants();
    let p = constants.p();
    let h0 = inst.h0_gap();
    let mut outcomes = Vec::new();
    let mut skipped = Vec::new();

    if checks.structural {
        for (j, name) in ["audit_descent", "audit_variance_upper", "audit_reconstruction"]
            .iter()
            .enumerate()
        {
            outcomes.push(aggregate(
                name,
                members
                    .iter()
                    .enumerate()
                    .filter_map(|(i, m)| m.audit.as_ref().map(|a| (i, &a.checks[j]))),
            ));
        }
    }
    if checks.variance_lower_states > 0 {
        if matches!(inst, Instance::Synthetic(_)) {
            skipped.push("audit_variance_lower: scalar processes have no iterates to sample".to_string());
        } else {
            outcomes.push(aggregate(
                "audit_variance_lower",
                members
                    .iter()
                    .enumerate()
                    .filter_map(|(i, m)| m.variance_lower.as_ref().map(|r| (i, r))),
            ));
        }
    }
    if checks.zfreq {
        let seqs: Vec<Vec<bool>> = members.iter().map(|m| m.path.z.clone()).collect();
        if seqs.len() < 100 {
            skipped.push(format!("zfreq_check: needs at least 100 members, have {}", seqs.len()));
        } else {
            outcomes.push(match zfreq_sequences(&seqs, p) {
                Ok(r) => CheckOutcome {
                    name: "zfreq_check".to_string(),
                    passed: r.passed,
                    summary: format!(
                        "largest shortfall below p - 3 sigma: {:.4} (step {})",
                        r.max_violation,
                        r.worst_k.map_or("-".to_string(), |j| grid.k[j as usize].to_string())
                    ),
                    detail: serde_json::to_value(&r).expect("serializable"),
                },
                Err(e) => failed("zfreq_check".to_string(), e),
            });
        }
    }
    if checks.gvanish {
        outcomes.push(aggregate(
            "gvanish_check",
            members
                .iter()
                .enumerate()
                .filter_map(|(i, m)| m.gvanish.as_ref().map(|r| (i, r))),
        ));
    }
    if checks.finite_termination {
        let name = "finite_termination".to_string();
        let outcome = match inst {
            Instance::Synthetic(spec) => SyntheticProcess::from_spec(spec, cfg.schedule.alpha_bar())
                .and_then(|proc| finite_termination_check(&proc, &cfg.schedule, &run_cfg)),
            _ => unreachable!("rejected by the config loader"),
        };
        outcomes.push(match outcome {
            Ok(rep) => CheckOutcome {
                name,
                passed: rep.outcome == TerminationOutcome::Pass,
                summary: format!(
                    "{}/{} members reach h = 0; termination index min {} median {} max {}",
                    rep.terminated,
                    rep.n,
                    rep.min_index.map_or("-".to_string(), |v| v.to_string()),
                    rep.median_index.map_or("-".to_string(), |v| v.to_string()),
                    rep.max_index.map_or("-".to_string(), |v| v.to_string()),
                ),
                detail: json!({
                    "outcome": rep.outcome,
                    "integrable_recip_phi": rep.integrable_recip_phi,
                    "terminated": rep.terminated,
                    "min_index": rep.min_index,
                    "median_index": rep.median_index,
                    "max_index": rep.max_index,
                }),
            },
            Err(e) => failed(name, e),
        });
    }
    if !checks.envelope.is_empty() {
        let profile = inst.phi().and_then(|phi| RateProfile::with_default_t0(phi, Some(h0)));
        match EnvelopeParams::from_constants(constants, cfg.schedule.alpha_bar(), h0) {
            Ok(params) => {
                for e in &checks.envelope {
                    outcomes.push(envelope_outcome(e, &profile, &params, &summary, &members));
                }
            }
            Err(err) => {
                for e in &checks.envelope {
                    outcomes.push(failed(format!("envelope_{}", kind_name(e.kind)), &err));
                }
            }
        }
    }
    for f in &checks.fit {
        outcomes.push(fit_outcome(f, &summary));
    }

    let manifest = Manifest {
        problem: inst.name().to_string(),
        header: TRAJECTORY_HEADER.join(","),
        seed: cfg.seed,
        n: run_cfg.n,
        k_max: run_cfg.k_max,
        stride: run_cfg.stride,
        schedule: cfg.schedule,
        constants,
        p,
        files: members
            .iter()
            .enumerate()
            .filter(|(_, m)| m.csv.is_some())
            .map(|(i, m)| ManifestEntry {
                file: format!("{}.csv", member_stem(i)),
                member: i,
                seed: cfg.seed,
                stream: i as u64,
                rows: m.rows,
                terminated: m.terminated,
            })
            .collect(),
    };
    let exported = members
        .iter()
        .enumerate()
        .filter_map(|(i, m)| m.csv.clone().map(|csv| (member_stem(i), csv, m.audit.clone())))
        .collect();
    let report = ExperimentReport {
        problem: inst.name().to_string(),
        seed: cfg.seed,
        n: run_cfg.n,
        k_max: run_cfg.k_max,
        stride: run_cfg.stride,
        schedule: cfg.schedule,
        constants,
        p,
        h0,
        regime: inst.regime(),
        certificate: inst.certificate(),
        terminated: members.iter().filter(|m| m.terminated).count(),
        passed: outcomes.iter().all(|c| c.passed),
        checks: outcomes,
        skipped,
    };
    Ok(Experiment {
        report,
        summary,
        manifest,
        exported,
    })
}

/// Pretty JSON with a trailing newline; the audit replay emits the same bytes.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(LabError::io(path))
}

fn fresh_dir(path: &Path) -> Result<()> {
    if path.exists() {
        std::fs::remove_dir_all(path).map_err(LabError::io(path))?;
    }
    std::fs::create_dir_all(path).map_err(LabError::io(path))
}

/// Writes the artifact layout under `dir`:
///
/// ```text
/// trajectories/traj_NNNN.csv, trajectories/manifest.json
/// audits/traj_NNNN.json, audits/ensemble.json
/// curves/h.csv, curves/dist.csv
/// summary.json, summary.txt
/// ```
pub fn write_artifacts(exp: &Experiment, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(LabError::io(dir))?;
    let traj_dir = dir.join("trajectories");
    let audit_dir = dir.join("audits");
    let curve_dir = dir.join("curves");
    for d in [&traj_dir, &audit_dir, &curve_dir] {
        fresh_dir(d)?;
    }
    for (stem, csv, audit) in &exp.exported {
        write(&traj_dir.join(format!("{stem}.csv")), csv)?;
        if let Some(a) = audit {
            write(&audit_dir.join(format!("{stem}.json")), &to_json(a))?;
        }
    }
    write(&traj_dir.join("manifest.json"), &to_json(&exp.manifest))?;
    write(&audit_dir.join("ensemble.json"), &to_json(&exp.report.checks))?;
    write(
        &curve_dir.join("h.csv"),
        &curve_csv_string(&exp.summary.grid, &exp.summary.h),
    )?;
    if let Some(d) = &exp.summary.dist {
        write(&curve_dir.join("dist.csv"), &curve_csv_string(&exp.summary.grid, d))?;
    }
    write(&dir.join("summary.json"), &to_json(&exp.report))?;
    write(&dir.join("summary.txt"), &exp.report.text())?;
    Ok(())
}

pub const ARTIFACT_ROOT_ENV: &str = "RATELAB_ARTIFACT_ROOT";

/// `<root>/<config stem>`, with the root taken from `RATELAB_ARTIFACT_ROOT`
/// (default `artifacts`).
pub fn default_artifact_dir(config_path: &Path) -> PathBuf {
    let root = std::env::var_os(ARTIFACT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("artifacts"));
    let stem = config_path
        .file_stem()
        .map(|s| s.to_os_string())
        .unwrap_or_else(|| "experiment".into());
    root.join(stem)
}
