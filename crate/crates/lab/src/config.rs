//! Experiment configuration files (TOML).
//!
//! ```toml
//! seed = 7
//! instance = "rkmm_theta1"        # bundled name, or an inline table
//!
//! [schedule]
//! family = "constant"
//! alpha_bar = 1.0
//!
//! [run]
//! k_max = 300
//! n = 1000
//!
//! [[checks.envelope]]
//! kind = "expectation"
//! mode = "mean"
//! ```

use std::path::Path;

use ratelab_core::engine::{RunConfig, StepSchedule};
use ratelab_core::zoo::{self, Instance, InstanceSpec};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub k_max: u64,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination_tol: Option<f64>,
    #[serde(default = "one")]
    pub stride: u64,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKind {
    /// General bound on `E[h_k]`.
    Expectation,
    /// Bound on `E[h_k]` for convex moduli.
    ExpectationConvex,
    /// Eventual almost-sure bound on `h_k`.
    AlmostSure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareMode {
    /// Ensemble mean against the envelope at every grid point.
    Mean,
    /// Per-member entry index after which the envelope holds.
    Tail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeCheck {
    pub kind: EnvelopeKind,
    pub mode: CompareMode,
    /// Required fraction of grid points (mean) or members (tail).
    #[serde(default = "unit")]
    pub min_fraction: f64,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    /// `log value` against `log A`.
    Exponent,
    /// `log value` against `A`, over grid points with at least 10 live members.
    LogLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Curve {
    #[default]
    H,
    Dist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitCheck {
    pub kind: FitKind,
    #[serde(default)]
    pub curve: Curve,
    #[serde(default = "half")]
    pub window: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_r2: Option<f64>,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Checks {
    /// Sufficient descent, step variance and reconstruction on every member.
    pub structural: bool,
    /// States per member for the exact conditional-mean check; 0 disables.
    pub variance_lower_states: usize,
    /// Indicator frequency against `p`; needs at least 100 members.
    pub zfreq: bool,
    pub gvanish: bool,
    pub gvanish_tail: f64,
    pub gvanish_rel_tol: f64,
    /// Exact termination of every member (scalar processes only).
    pub finite_termination: bool,
    pub envelope: Vec<EnvelopeCheck>,
    pub fit: Vec<FitCheck>,
}

impl Default for Checks {
    fn default() -> Self {
        Checks {
            structural: true,
            variance_lower_states: 100,
            zfreq: true,
            gvanish: false,
            gvanish_tail: ratelab_core::auditor::GVANISH_TAIL,
            gvanish_rel_tol: ratelab_core::auditor::GVANISH_REL_TOL,
            finite_termination: false,
            envelope: Vec::new(),
            fit: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    /// Number of member trajectories written as CSV; 10 when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub export: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: u64,
    instance: toml::Value,
    schedule: StepSchedule,
    run: RunSection,
    #[serde(default)]
    checks: Checks,
    #[serde(default)]
    output: Output,
}

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub spec: InstanceSpec,
    pub instance: Instance,
    pub schedule: StepSchedule,
    pub run: RunSection,
    pub checks: Checks,
    pub output: Output,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(LabError::io(path))?;
        Self::parse(&text).map_err(|e| match e {
            LabError::Config(message) => LabError::Schema {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        let spec = match raw.instance {
            toml::Value::String(name) => zoo::bundled_spec(&name).ok_or_else(|| {
                LabError::Config(format!(
                    "instance: unknown bundled instance `{name}` (available: {})",
                    zoo::BUNDLED.join(", ")
                ))
            })?,
            table @ toml::Value::Table(_) => table
                .try_into::<InstanceSpec>()
                .map_err(|e| LabError::Config(format!("instance: {}", e.message())))?,
            _ => {
                return Err(LabError::Config(
                    "instance: expected a bundled instance name or a table".to_string(),
                ))
            }
        };
        let instance = spec.build().map_err(|e| LabError::Config(format!("instance: {e}")))?;
        raw.schedule
            .validate()
            .map_err(|e| LabError::Config(format!("schedule: {e}")))?;
        let cfg = Self::run_config(&raw.run, raw.seed);
        cfg.validate().map_err(|e| LabError::Config(format!("run: {e}")))?;
        if raw.run.n < 2 {
            return Err(LabError::Config(
                "run.n: an ensemble needs at least two members".to_string(),
            ));
        }
        let checks = raw.checks;
        if !(checks.gvanish_tail > 0.0 && checks.gvanish_tail <= 1.0) {
            return Err(LabError::Config("checks.gvanish_tail: must lie in (0, 1]".to_string()));
        }
        for (i, e) in checks.envelope.iter().enumerate() {
            if !(0.0..=1.0).contains(&e.min_fraction) {
                return Err(LabError::Config(format!(
                    "checks.envelope[{i}].min_fraction: must lie in [0, 1]"
                )));
            }
        }
        for (i, f) in checks.fit.iter().enumerate() {
            if !(f.window > 0.0 && f.window <= 1.0) {
                return Err(LabError::Config(format!("checks.fit[{i}].window: must lie in (0, 1]")));
            }
        }
        if checks.finite_termination && !matches!(instance, Instance::Synthetic(_)) {
            return Err(LabError::Config(
                "checks.finite_termination: only available for synthetic instances".to_string(),
            ));
        }
        let scalar = matches!(instance, Instance::Synthetic(_));
        if scalar && checks.fit.iter().any(|f| f.curve == Curve::Dist) {
            return Err(LabError::Config(
                "checks.fit: synthetic instances have no iterate-distance curve".to_string(),
            ));
        }
        Ok(ExperimentConfig {
            seed: raw.seed,
            spec,
            instance,
            schedule: raw.schedule,
            run: raw.run,
            checks,
            output: raw.output,
        })
    }

    fn run_config(run: &RunSection, seed: u64) -> RunConfig {
        RunConfig {
            k_max: run.k_max,
            n: run.n,
            base_seed: seed,
            termination_tol: run.termination_tol,
            stride: run.stride,
            keep_states: false,
        }
    }

    pub fn run_config_for(&self) -> RunConfig {
        Self::run_config(&self.run, self.seed)
    }
}
