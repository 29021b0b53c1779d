//! Sequential runners for RKMM, RSD and synthetic gap processes, recording
//! full trajectories.

mod methods;
mod schedule;
mod synthetic;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::rate_kernel::DescentConstants;
use crate::rng;
use crate::zoo::{FeasibilityInstance, Instance, SmoothInstance};

pub use methods::{expected_step_sq, DescentMethod, LimitKind, Rkmm, Rsd};
pub use schedule::StepSchedule;
pub use synthetic::SyntheticProcess;

/// Thinning is only permitted past this iteration.
pub const THINNING_START: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunConfig {
    pub k_max: u64,
    pub n: usize,
    pub base_seed: u64,
    /// `None` means `1e-14 max(1, h0)`.
    #[cfg_attr(feature = "serde", serde(default))]
    pub termination_tol: Option<f64>,
    #[cfg_attr(feature = "serde", serde(default = "default_stride"))]
    pub stride: u64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub keep_states: bool,
}

#[cfg(feature = "serde")]
fn default_stride() -> u64 {
    1
}

impl RunConfig {
    pub fn new(k_max: u64, n: usize, base_seed: u64) -> Self {
        RunConfig {
            k_max,
            n,
            base_seed,
            termination_tol: None,
            stride: 1,
            keep_states: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_max < 1 {
            return Err(invalid("k_max", "iteration budget must be at least 1"));
        }
        if self.n < 1 {
            return Err(invalid("n", "ensemble size must be at least 1"));
        }
        if self.stride < 1 {
            return Err(invalid("stride", "must be at least 1"));
        }
        if let Some(t) = self.termination_tol {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(invalid("termination_tol", "must be non-negative and finite"));
            }
        }
        Ok(())
    }

    pub fn tolerance(&self, h0: f64) -> f64 {
        self.termination_tol.unwrap_or(1e-14 * h0.max(1.0))
    }

    pub fn is_recorded(&self, k: u64) -> bool {
        k <= THINNING_START || k % self.stride == 0
    }
}

/// One iteration: state `x^k` and the step taken from it.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Record {
    pub k: u64,
    pub h: f64,
    pub g: f64,
    /// `|x^{k+1} - x^k|^2`; zero on the final row.
    pub step_sq: f64,
    pub alpha: f64,
    /// `None` on the final row, where no step is taken.
    pub index: Option<usize>,
    pub z: bool,
    /// `sum_{j<k} alpha_j`.
    #[cfg_attr(feature = "serde", serde(rename = "A"))]
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub problem: String,
    pub seed: u64,
    pub stream: u64,
    pub constants: DescentConstants,
    pub p: f64,
    pub h0: f64,
    /// Iteration budget the run was given.
    pub budget: u64,
    pub records: Vec<Record>,
    pub final_iterate: Vec<f64>,
    pub terminated: bool,
    pub termination_k: Option<u64>,
    pub limit: Vec<f64>,
    pub limit_kind: LimitKind,
    /// Iterates matching `records`, only when `keep_states` was set.
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &Record {
        self.records.last().expect("trajectories hold at least one record")
    }

    /// Non-increasing `h` (slack `1e-12 max(1, h0)`) and strictly increasing `A`.
    pub fn check_invariants(&self) -> core::result::Result<(), String> {
        let slack = 1e-12 * self.h0.max(1.0);
        for w in self.records.windows(2) {
            if w[1].h > w[0].h + slack {
                return Err(format!("h increases between k={} and k={}", w[0].k, w[1].k));
            }
            if !(w[1].a > w[0].a) {
                return Err(format!("A is not strictly increasing at k={}", w[1].k));
            }
        }
        Ok(())
    }
}

/// `Z = c3` when `g = 0`, else `step_sq / (alpha^2 g)`; `z = 1` iff `Z >= c2 / 2`.
///
/// A relative tolerance of `1e-12` on the threshold absorbs the rounding of
/// processes that sit exactly on it.
pub fn z_rule(c: &DescentConstants, g: f64, step_sq: f64, alpha: f64) -> (f64, bool) {
    let ratio = if g == 0.0 { c.c3 } else { step_sq / (alpha * alpha * g) };
    (ratio, ratio >= 0.5 * c.c2 * (1.0 - 1e-12))
}

fn check_relaxation(schedule: &StepSchedule) -> Result<()> {
    if schedule.alpha_bar() > 1.0 {
        return Err(Error::Schedule(format!(
            "relaxation parameters must not exceed 1, got {}",
            schedule.alpha_bar()
        )));
    }
    Ok(())
}

/// Runs `m` from its initial point on RNG stream `(seed, stream)`.
pub fn run_method<M: DescentMethod + ?Sized>(
    m: &M,
    schedule: &StepSchedule,
    cfg: &RunConfig,
    seed: u64,
    stream: u64,
) -> Result<Trajectory> {
    schedule.validate()?;
    check_relaxation(schedule)?;
    cfg.validate()?;
    let c = m.constants();
    let cum = methods::cumulative(m.index_weights());
    let mut r = rng::stream(seed, stream);
    let mut x = m.x0().to_vec();
    let h0 = m.gap(&x)?;
    let tol = cfg.tolerance(h0);
    let mut records = Vec::new();
    let mut states = Vec::new();
    let mut a = 0.0;
    let terminated;
    let mut k = 0u64;
    loop {
        let h = m.gap(&x)?;
        let g = m.residual(&x);
        let alpha = schedule.alpha(k);
        let done = h <= tol;
        if done || k == cfg.k_max {
            terminated = done;
            let (_, z) = z_rule(&c, g, 0.0, alpha);
            records.push(Record {
                k,
                h,
                g,
                step_sq: 0.0,
                alpha,
                index: None,
                z,
                a,
            });
            if cfg.keep_states {
                states.push(x.clone());
            }
            break;
        }
        let i = methods::draw_index(&mut r, &cum);
        let next = m.step(&x, i, alpha);
        let step_sq = math::dist_sq(&next, &x);
        if cfg.is_recorded(k) {
            let (_, z) = z_rule(&c, g, step_sq, alpha);
            records.push(Record {
                k,
                h,
                g,
                step_sq,
                alpha,
                index: Some(i),
                z,
                a,
            });
            if cfg.keep_states {
                states.push(x.clone());
            }
        }
        a += alpha;
        x = next;
        k += 1;
    }
    let (limit, limit_kind) = m.limit_estimate(&x)?;
    Ok(Trajectory {
        problem: m.name().to_string(),
        seed,
        stream,
        constants: c,
        p: c.p(),
        h0,
        budget: cfg.k_max,
        termination_k: terminated.then_some(k),
        records,
        final_iterate: x,
        terminated,
        limit,
        limit_kind,
        states,
    })
}

pub fn rkmm_run(
    inst: &FeasibilityInstance,
    schedule: &StepSchedule,
    cfg: &RunConfig,
    seed: u64,
    stream: u64,
) -> Result<Trajectory> {
    run_method(&Rkmm::new(inst), schedule, cfg, seed, stream)
}

pub fn rsd_run(
    inst: &SmoothInstance,
    schedule: &StepSchedule,
    cfg: &RunConfig,
    seed: u64,
    stream: u64,
) -> Result<Trajectory> {
    run_method(&Rsd::new(inst), schedule, cfg, seed, stream)
}

/// Runs the extremal scalar process. Termination means `h <= tol`; the
/// process itself reaches exactly 0 when a decrement overshoots.
///
/// On the clipping step the recorded `g` is the effective residual
/// `2 h / (c1 c2 alpha) <= phi(h)` so that the recorded step still sits
/// exactly on the descent recursion.
pub fn synthetic_run(
    process: &SyntheticProcess,
    schedule: &StepSchedule,
    cfg: &RunConfig,
    seed: u64,
    stream: u64,
) -> Result<Trajectory> {
    schedule.validate()?;
    cfg.validate()?;
    let params = &process.params;
    let c = params.constants();
    let mut r = rng::stream(seed, stream);
    let h0 = params.h0_gap;
    let tol = cfg.tolerance(h0);
    let mut records = Vec::new();
    let mut a = 0.0;
    let mut h = h0;
    let terminated;
    let mut k = 0u64;
    loop {
        let phi_h = process.phi.eval(h)?;
        let alpha = schedule.alpha(k);
        let done = h <= tol;
        if done || k == cfg.k_max {
            terminated = done;
            let (_, z) = z_rule(&c, phi_h, 0.0, alpha);
            records.push(Record {
                k,
                h,
                g: phi_h,
                step_sq: 0.0,
                alpha,
                index: None,
                z,
                a,
            });
            break;
        }
        let z = r.gen::<f64>() < process.z_prob;
        let rate = process.rate(alpha);
        let (next, g) = if z && rate * phi_h >= h {
            (0.0, h / rate)
        } else if z {
            (h - rate * phi_h, phi_h)
        } else {
            (h, phi_h)
        };
        let step_sq = if z { 0.5 * c.c2 * alpha * alpha * g } else { 0.0 };
        if cfg.is_recorded(k) {
            records.push(Record {
                k,
                h,
                g,
                step_sq,
                alpha,
                index: None,
                z,
                a,
            });
        }
        a += alpha;
        h = next;
        k += 1;
    }
    Ok(Trajectory {
        problem: process.name.clone(),
        seed,
        stream,
        constants: c,
        p: c.p(),
        h0,
        budget: cfg.k_max,
        termination_k: terminated.then_some(k),
        records,
        final_iterate: vec![h],
        terminated,
        limit: Vec::new(),
        limit_kind: LimitKind::NotApplicable,
        states: Vec::new(),
    })
}

/// Dispatches on the instance kind.
pub fn run_instance(
    inst: &Instance,
    schedule: &StepSchedule,
    cfg: &RunConfig,
    seed: u64,
    stream: u64,
) -> Result<Trajectory> {
    match inst {
        Instance::Feasibility(i) => rkmm_run(i, schedule, cfg, seed, stream),
        Instance::Smooth(i) => rsd_run(i, schedule, cfg, seed, stream),
        Instance::Synthetic(s) => {
            let process = SyntheticProcess::from_spec(s, schedule.alpha_bar())?;
            synthetic_run(&process, schedule, cfg, seed, stream)
        }
    }
}
