use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ratelab::experiment::{self, default_artifact_dir, to_json};
use ratelab::formats::{read_alpha_file, read_trajectory_csv, replay_trajectory};
use ratelab::{ExperimentConfig, LabError, Result};
use ratelab_core::auditor::audit_suite;
use ratelab_core::rate_kernel::DescentConstants;
use ratelab_core::zoo;

/// Convergence-rate lab for randomized monotone algorithms.
#[derive(Parser)]
#[command(name = "ratelab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its artifact directory.
    Run {
        config: PathBuf,
        /// Artifact directory; defaults to `$RATELAB_ARTIFACT_ROOT/<config stem>`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the bundled instances.
    Zoo {
        #[arg(long)]
        json: bool,
    },
    /// Audit a trajectory CSV produced elsewhere.
    Audit {
        csv: PathBuf,
        #[arg(long)]
        c1: f64,
        #[arg(long)]
        c2: f64,
        #[arg(long)]
        c3: f64,
        /// Stepsizes, one per line, replacing the `alpha` column.
        #[arg(long)]
        alpha_file: Option<PathBuf>,
        /// Also write the audit JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(config: PathBuf, out: Option<PathBuf>) -> Result<()> {
    let cfg = ExperimentConfig::load(&config)?;
    let dir = out.unwrap_or_else(|| default_artifact_dir(&config));
    let exp = experiment::run(&cfg)?;
    experiment::write_artifacts(&exp, &dir)?;
    print!("{}", exp.report.text());
    println!("artifacts   {}", dir.display());
    if exp.report.passed {
        Ok(())
    } else {
        Err(LabError::ChecksFailed(exp.report.failed_checks()))
    }
}

fn zoo(json: bool) -> Result<()> {
    let catalog = zoo::catalog();
    if json {
        print!("{}", to_json(&catalog));
        return Ok(());
    }
    for e in &catalog {
        let c = &e.constants;
        let cert = match e.certificate {
            zoo::Certificate::Holder { theta, r } => format!("theta={theta} r={r:.6}"),
            zoo::Certificate::Kl { kappa, cbar } => format!("kappa={kappa} cbar={cbar:.6}"),
            zoo::Certificate::Modulus => "modulus only".to_string(),
        };
        println!("{}", e.name);
        println!("  certificate  {cert}");
        println!("  constants    c1={} c2={} c3={} p={:.6}", c.c1, c.c2, c.c3, e.p);
        println!("  regime       {}", e.regime);
    }
    Ok(())
}

fn audit(csv: PathBuf, c: (f64, f64, f64), alpha_file: Option<PathBuf>, out: Option<PathBuf>) -> Result<()> {
    let constants = DescentConstants::new(c.0, c.1, c.2).map_err(|e| LabError::Config(format!("constants: {e}")))?;
    let mut records = read_trajectory_csv(&csv)?;
    if let Some(path) = alpha_file {
        let alphas = read_alpha_file(&path)?;
        if alphas.len() != records.len() {
            return Err(LabError::Schema {
                path,
                message: format!("{} stepsizes for {} trajectory rows", alphas.len(), records.len()),
            });
        }
        for (r, a) in records.iter_mut().zip(alphas) {
            r.alpha = a;
        }
    }
    let name = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let report = audit_suite(&replay_trajectory(&name, records, constants));
    let text = to_json(&report);
    if let Some(path) = out {
        std::fs::write(&path, &text).map_err(|source| LabError::Io { path, source })?;
    }
    print!("{text}");
    if report.passed {
        Ok(())
    } else {
        Err(LabError::ChecksFailed(
            report
                .checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| c.check.clone())
                .collect(),
        ))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out } => run(config, out),
        Command::Zoo { json } => zoo(json),
        Command::Audit {
            csv,
            c1,
            c2,
            c3,
            alpha_file,
            out,
        } => audit(csv, (c1, c2, c3), alpha_file, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
