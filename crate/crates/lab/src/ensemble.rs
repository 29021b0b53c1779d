//! Data-parallel ensembles. Members run on independent RNG streams and are
//! collected in member order, so results match the sequential runner.

use rayon::prelude::*;

use ratelab_core::auditor::{audit_suite, audit_variance_lower_sampled, gvanish_check, AuditReport, CheckReport};
use ratelab_core::engine::{Rkmm, Rsd, RunConfig, StepSchedule, Trajectory};
use ratelab_core::lab::{run_member, simulate_member, summarize, EnsembleSummary, Grid, Path};
use ratelab_core::zoo::Instance;

use crate::formats::trajectory_csv_string;

/// Offset separating the state-sampling streams from the simulation streams.
const SAMPLING_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Parallel counterpart of `ratelab_core::lab::monte_carlo`.
pub fn monte_carlo(
    inst: &Instance,
    schedule: &StepSchedule,
    cfg: &RunConfig,
) -> ratelab_core::Result<(EnsembleSummary, Vec<Path>)> {
    cfg.validate()?;
    let grid = Grid::new(schedule, cfg);
    let paths = (0..cfg.n as u64)
        .into_par_iter()
        .map(|i| simulate_member(inst, schedule, cfg, &grid, i))
        .collect::<ratelab_core::Result<Vec<_>>>()?;
    Ok((summarize(inst.name(), &grid, &paths)?, paths))
}

/// Parallel map over members `0..cfg.n`, in member order.
pub fn trajectories(
    inst: &Instance,
    schedule: &StepSchedule,
    cfg: &RunConfig,
) -> ratelab_core::Result<Vec<Trajectory>> {
    cfg.validate()?;
    (0..cfg.n as u64)
        .into_par_iter()
        .map(|i| run_member(inst, schedule, cfg, i))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemberOptions {
    pub structural: bool,
    /// States sampled for the conditional-mean check; 0 disables it.
    pub variance_lower_states: usize,
    /// `(tail fraction, tolerance relative to g_0)`.
    pub gvanish: Option<(f64, f64)>,
    pub export: bool,
}

/// Everything kept from one member once its iterates are dropped.
#[derive(Debug, Clone)]
pub struct MemberOutcome {
    pub path: Path,
    pub audit: Option<AuditReport>,
    pub variance_lower: Option<CheckReport>,
    pub gvanish: Option<CheckReport>,
    pub csv: Option<String>,
    pub terminated: bool,
    pub rows: usize,
}

fn run_one(
    inst: &Instance,
    schedule: &StepSchedule,
    cfg: &RunConfig,
    grid: &Grid,
    index: u64,
    opts: &MemberOptions,
) -> ratelab_core::Result<MemberOutcome> {
    let with_states = !matches!(inst, Instance::Synthetic(_));
    let cfg = RunConfig {
        keep_states: with_states,
        ..*cfg
    };
    let traj = run_member(inst, schedule, &cfg, index)?;
    let seed = cfg.base_seed ^ SAMPLING_SEED_SALT;
    let states = opts.variance_lower_states;
    let variance_lower = match inst {
        _ if states == 0 => None,
        Instance::Feasibility(i) => Some(audit_variance_lower_sampled(&Rkmm::new(i), &traj, states, seed)?),
        Instance::Smooth(i) => Some(audit_variance_lower_sampled(&Rsd::new(i), &traj, states, seed)?),
        Instance::Synthetic(_) => None,
    };
    let gvanish = opts
        .gvanish
        .map(|(tail, rel)| gvanish_check(&traj, tail, Some(rel * traj.records[0].g)));
    Ok(MemberOutcome {
        path: Path::from_trajectory(&traj, grid),
        audit: opts.structural.then(|| audit_suite(&traj)),
        variance_lower,
        gvanish,
        csv: opts.export.then(|| trajectory_csv_string(&traj.records)),
        terminated: traj.terminated,
        rows: traj.records.len(),
    })
}

/// Runs every member with its per-member audits; only the first `export`
/// members keep their CSV text.
pub fn run_members(
    inst: &Instance,
    schedule: &StepSchedule,
    cfg: &RunConfig,
    opts: &MemberOptions,
    export: usize,
) -> ratelab_core::Result<(Grid, Vec<MemberOutcome>)> {
    cfg.validate()?;
    let grid = Grid::new(schedule, cfg);
    let members = (0..cfg.n as u64)
        .into_par_iter()
        .map(|i| {
            let opts = MemberOptions {
                export: opts.export && (i as usize) < export,
                ..*opts
            };
            run_one(inst, schedule, cfg, &grid, i, &opts)
        })
        .collect::<ratelab_core::Result<Vec<_>>>()?;
    Ok((grid, members))
}
