//! The `run`, `simulate` and `validate` subcommands.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use anyhow::{bail, Context};
use krotov_core::optimize::{check_monotonic_error, delta_below, or_chain, value_below, ConvergenceCheck};
use krotov_core::{functional_by_name, ControlField, ExpmPropagator, KrotovOptimizer, OptResult, QuantumState, StopReason};
use serde_json::json;

use crate::config::{Problem, RunConfig};
use crate::csv::{read_pulses, write_dynamics, write_pulses};
use crate::table;

/// Destination of the iteration table and other progress output.
pub type SharedWriter = Arc<Mutex<dyn Write + Send>>;

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_MAX_ITERATIONS: i32 = 2;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub max_iters: Option<usize>,
    pub threads: Option<usize>,
    pub store_all_pulses: bool,
}

pub struct RunSummary {
    pub result: OptResult,
    pub out_dir: PathBuf,
    pub exit_code: i32,
}

fn load(config_path: &Path) -> anyhow::Result<Problem> {
    let config = RunConfig::load(config_path)?;
    let base_dir = config_path.parent().unwrap_or(Path::new("."));
    Ok(Problem::build(&config, base_dir)?)
}

fn out_dir(problem: &Problem, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| problem.output.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn convergence_check(problem: &Problem) -> Option<ConvergenceCheck> {
    let c = &problem.convergence;
    let mut checks = vec![];
    if let Some(t) = c.threshold {
        checks.push(value_below(t));
    }
    if let Some(t) = c.delta_threshold {
        checks.push(delta_below(t));
    }
    if c.check_monotonic {
        checks.push(check_monotonic_error());
    }
    (!checks.is_empty()).then(|| or_chain(checks))
}

fn trajectories(problem: &Problem, controls: &[ControlField]) -> anyhow::Result<Vec<Vec<QuantumState>>> {
    problem
        .objectives
        .iter()
        .map(|o| {
            let (_, traj) =
                krotov_core::propagate(&o.generator, controls, &o.initial_state, &problem.grid, &ExpmPropagator, true)?;
            Ok(traj.expect("stored trajectory"))
        })
        .collect()
}

pub fn run(config_path: &Path, opts: &RunOptions, out: SharedWriter) -> anyhow::Result<RunSummary> {
    let problem = load(config_path)?;
    let out_dir = out_dir(&problem, opts.out_dir.as_deref());
    std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let threads = opts.threads.or(problem.output.threads).unwrap_or(1);
    let store_all_pulses = opts.store_all_pulses || problem.output.store_all_pulses;
    let max_iterations = opts.max_iters.unwrap_or(problem.convergence.max_iterations);

    let mut run_log = match &problem.output.run_log {
        Some(p) => Some(
            OpenOptions::new()
                .create(true)
                .append(true)
                .open(p)
                .with_context(|| format!("opening run log {}", p.display()))?,
        ),
        None => None,
    };
    writeln!(out.lock().expect("writer lock"), "{}", table::header())?;
    let hook_out = Arc::clone(&out);
    let hook = Box::new(move |info: &krotov_core::IterationInfo| {
        let mut w = hook_out.lock().expect("writer lock");
        if writeln!(w, "{}", table::row(info)).and_then(|_| w.flush()).is_err() {
            log::warn!("failed to write iteration table row");
        }
        if let Some(f) = run_log.as_mut() {
            if let Err(e) = append_record(f, info) {
                log::warn!("failed to append to run log: {e}");
            }
        }
        None
    });

    let functional = functional_by_name(&problem.functional).expect("validated functional name");
    let mut optimizer = KrotovOptimizer::new(problem.objectives.clone(), problem.pulse_options.clone(), problem.grid.clone())?
        .functional(functional)
        .info_hook(hook)
        .store_all_pulses(store_all_pulses)
        .max_iterations(max_iterations)
        .threads(threads)?;
    if let Some(check) = convergence_check(&problem) {
        optimizer = optimizer.check_convergence(check);
    }
    if let Some(sigma) = problem.sigma()? {
        optimizer = optimizer.sigma(sigma);
    }
    let result = optimizer.optimize_pulses(problem.guess.clone())?;

    let midpoints = problem.grid.midpoints();
    write_pulses(&out_dir.join("guess_pulse.csv"), &midpoints, &result.guess_controls)?;
    write_pulses(&out_dir.join("optimized_pulse.csv"), &midpoints, &result.optimized_controls)?;
    if let Some(all) = &result.all_pulses {
        for (i, controls) in all.iter().enumerate() {
            write_pulses(&out_dir.join(format!("pulses_iter_{i:04}.csv")), &midpoints, controls)?;
        }
    }
    let points = problem.grid.points();
    write_dynamics(&out_dir.join("dynamics_guess.csv"), points, &trajectories(&problem, &result.guess_controls)?)?;
    write_dynamics(&out_dir.join("dynamics_opt.csv"), points, &trajectories(&problem, &result.optimized_controls)?)?;

    let exit_code = match &result.stop {
        StopReason::Converged(_) => EXIT_CONVERGED,
        StopReason::MaxIterations(_) => EXIT_MAX_ITERATIONS,
        StopReason::CheckFailed(_) => EXIT_ERROR,
    };
    {
        let mut w = out.lock().expect("writer lock");
        writeln!(w, "{}", result.stop)?;
    }
    Ok(RunSummary { result, out_dir, exit_code })
}

fn append_record(f: &mut File, info: &krotov_core::IterationInfo) -> std::io::Result<()> {
    let record = json!({
        "iteration": info.iteration,
        "j_t": info.j_t,
        "ga_integral": info.ga_integral,
        "ga_integrals": info.ga_integrals,
        "j_total": info.j_total,
        "delta_j_t": info.delta_j_t,
        "delta_j": info.delta_j,
        "seconds": info.seconds,
        "lambda_a_bounds": info.lambda_a_bounds,
    });
    writeln!(f, "{record}")
}

/// Propagate under the guess or the optimized pulses and write the dynamics CSV.
/// Returns the path of the written file.
pub fn simulate(
    config_path: &Path,
    use_optimized: bool,
    out_dir_flag: Option<&Path>,
    out: SharedWriter,
) -> anyhow::Result<PathBuf> {
    let problem = load(config_path)?;
    let out_dir = out_dir(&problem, out_dir_flag);
    let controls = if use_optimized {
        let path = out_dir.join("optimized_pulse.csv");
        if !path.exists() {
            bail!("optimized pulse file {} not found; run the optimization first", path.display());
        }
        let (_, columns) = read_pulses(&path).with_context(|| format!("reading {}", path.display()))?;
        if columns.len() != problem.pulse_options.len() {
            bail!("{} has {} controls, the config defines {}", path.display(), columns.len(), problem.pulse_options.len());
        }
        columns
            .into_iter()
            .map(|c| {
                if c.len() != problem.grid.n_intervals() {
                    bail!("{} has {} rows for {} intervals", path.display(), c.len(), problem.grid.n_intervals());
                }
                Ok(ControlField::new(c)?)
            })
            .collect::<anyhow::Result<Vec<_>>>()?
    } else {
        problem.guess.clone()
    };
    std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let traj = trajectories(&problem, &controls)?;
    let name = if use_optimized { "dynamics_opt.csv" } else { "dynamics_guess.csv" };
    let path = out_dir.join(name);
    write_dynamics(&path, problem.grid.points(), &traj)?;
    let mut w = out.lock().expect("writer lock");
    for (k, t) in traj.iter().enumerate() {
        let pops: Vec<String> = t.last().expect("final state").populations().iter().map(|p| format!("{p:.6}")).collect();
        writeln!(w, "objective {k}: final populations [{}]", pops.join(", "))?;
    }
    writeln!(w, "wrote {}", path.display())?;
    Ok(path)
}

pub fn validate(config_path: &Path, out: SharedWriter) -> anyhow::Result<()> {
    let problem = load(config_path)?;
    let space = problem.objectives[0].generator.space();
    writeln!(
        out.lock().expect("writer lock"),
        "ok: {} objective(s) in {space}, {} control(s), {} intervals on [0, {}], functional J_T_{}",
        problem.objectives.len(),
        problem.pulse_options.len(),
        problem.grid.n_intervals(),
        problem.grid.t_final(),
        problem.functional
    )?;
    Ok(())
}
