//! Krotov's method: backward propagation of co-states followed by a sequential
//! forward sweep that updates the controls interval by interval.

mod bounds;
mod convergence;
mod sigma;

use std::sync::Arc;
use std::time::Instant;

use log::{debug, warn};
use num_complex::Complex64;
use rayon::prelude::*;
use rayon::ThreadPool;

pub use bounds::{lambda_a_lower_bound, OperatorNorm};
pub use convergence::{check_monotonic_error, delta_below, or_chain, value_below, ConvergenceCheck, Stop};
pub use sigma::{
    numerical_estimate_a, second_order_term, sigma_from_a, ConstantSigma, NumericalASigma, SigmaModel, SigmaRefresh,
};

use crate::error::{KrotovError, Result};
use crate::functionals::{g_a_integral, Functional, JTss, UpdateShape};
use crate::linalg::pairwise_sum;
use crate::objectives::{validate_objectives, Objective};
use crate::propagation::{controls_at, ControlField, Direction, ExpmPropagator, Propagator, TimeGrid};
use crate::quantum::{apply, inner, Generator, Operator, QuantumState};

/// Per-control update parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseOptions {
    /// Inverse step width `λ_a`.
    pub lambda_a: f64,
    /// Update shape `S(t)` sampled at the interval midpoints.
    pub shape: UpdateShape,
}

impl PulseOptions {
    pub fn new(lambda_a: f64, shape: UpdateShape) -> Result<Self> {
        if !(lambda_a.is_finite() && lambda_a > 0.0) {
            return Err(KrotovError::InvalidPulseOptions(format!("λ_a = {lambda_a} must be positive")));
        }
        Ok(Self { lambda_a, shape })
    }
}

/// One row of the optimization history. Iteration 0 evaluates the guess.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationInfo {
    pub iteration: usize,
    pub j_t: f64,
    /// `∫ g_a dt` for each control.
    pub ga_integrals: Vec<f64>,
    /// Sum of `ga_integrals`.
    pub ga_integral: f64,
    /// `J_T + ∫ g_a dt`.
    pub j_total: f64,
    pub delta_j_t: Option<f64>,
    pub delta_j: Option<f64>,
    /// Wallclock seconds, rounded to milliseconds.
    pub seconds: f64,
    /// Diagnostic lower bound on `λ_a` per control (`None` when undefined).
    pub lambda_a_bounds: Vec<Option<f64>>,
    /// Largest magnitude of a second-order update contribution on any interval.
    pub second_order_max: f64,
}

/// How an optimization ended.
#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    Converged(String),
    /// A convergence check reported a failure.
    CheckFailed(String),
    MaxIterations(usize),
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StopReason::Converged(msg) => write!(f, "converged: {msg}"),
            StopReason::CheckFailed(msg) => write!(f, "stopped: {msg}"),
            StopReason::MaxIterations(n) => write!(f, "reached maximum number of iterations ({n})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptResult {
    pub iterations: Vec<IterationInfo>,
    /// Return values of the info hook, one per iteration.
    pub info_vals: Vec<Option<String>>,
    pub guess_controls: Vec<ControlField>,
    pub optimized_controls: Vec<ControlField>,
    /// Controls after every iteration (index 0 is the guess), if requested.
    pub all_pulses: Option<Vec<Vec<ControlField>>>,
    /// Forward-propagated states at `T` under the optimized controls.
    pub final_states: Vec<QuantumState>,
    pub stop: StopReason,
    /// Largest number of states held in memory at once by any iteration.
    pub peak_stored_states: usize,
}

impl OptResult {
    pub fn converged(&self) -> bool {
        matches!(self.stop, StopReason::Converged(_))
    }
}

/// Forward states kept from the previous iteration.
#[derive(Debug, Clone)]
pub enum ForwardStorage {
    /// Full trajectories `[k][n]`, needed by the second-order term.
    Full(Vec<Vec<QuantumState>>),
    /// Only the states at `T`.
    Final(Vec<QuantumState>),
}

impl ForwardStorage {
    pub fn final_states(&self) -> Vec<QuantumState> {
        match self {
            ForwardStorage::Full(t) => t.iter().map(|traj| traj.last().cloned().expect("non-empty trajectory")).collect(),
            ForwardStorage::Final(s) => s.clone(),
        }
    }

    pub fn trajectories(&self) -> Option<&[Vec<QuantumState>]> {
        match self {
            ForwardStorage::Full(t) => Some(t),
            ForwardStorage::Final(_) => None,
        }
    }

    fn stored_states(&self) -> usize {
        match self {
            ForwardStorage::Full(t) => t.iter().map(Vec::len).sum(),
            ForwardStorage::Final(s) => s.len(),
        }
    }
}

/// Result of a single Krotov iteration.
#[derive(Debug, Clone)]
pub struct IterationOutput {
    pub controls: Vec<ControlField>,
    pub forward: ForwardStorage,
    /// `χ_k(T)` as returned by the functional.
    pub chis_t: Vec<QuantumState>,
    pub lambda_a_bounds: Vec<Option<f64>>,
    pub second_order_max: f64,
    pub stored_states: usize,
}

/// Arguments of a [`MuProvider`] call.
pub struct MuQuery<'a> {
    pub objective: usize,
    pub control: usize,
    pub interval: usize,
    /// Guess control values on the interval.
    pub eps: &'a [f64],
    pub generator: &'a Generator,
}

/// Supplies `∂H_eff/∂ε_l` for couplings that depend on the control value.
/// `None` means the objective does not couple to that control.
pub type MuProvider = Arc<dyn Fn(&MuQuery<'_>) -> Result<Option<Operator>> + Send + Sync>;

pub type InfoHook = Box<dyn FnMut(&IterationInfo) -> Option<String> + Send + Sync>;
pub type ModifyParams = Box<dyn FnMut(&mut [PulseOptions], &[IterationInfo]) + Send + Sync>;

/// Configures and runs an optimization.
pub struct KrotovOptimizer {
    objectives: Vec<Objective>,
    pulse_options: Vec<PulseOptions>,
    grid: TimeGrid,
    propagator: Box<dyn Propagator>,
    functional: Box<dyn Functional>,
    sigma: Option<Box<dyn SigmaModel>>,
    info_hook: Option<InfoHook>,
    check_convergence: Option<ConvergenceCheck>,
    modify_params: Option<ModifyParams>,
    mu_provider: Option<MuProvider>,
    store_all_pulses: bool,
    max_iterations: usize,
    normalize_chi: bool,
    bound_norm: OperatorNorm,
    pool: Option<ThreadPool>,
    mus: Vec<Vec<Option<Operator>>>,
}

impl KrotovOptimizer {
    /// Validates the problem. Defaults: exact propagator, `J_T,ss`, first order,
    /// no convergence check, 100 iterations, single thread.
    pub fn new(objectives: Vec<Objective>, pulse_options: Vec<PulseOptions>, grid: TimeGrid) -> Result<Self> {
        validate_objectives(&objectives)?;
        validate_pulse_options(&pulse_options, grid.n_intervals())?;
        for (k, o) in objectives.iter().enumerate() {
            if let Some(&index) = o.generator.control_indices().iter().find(|&&l| l >= pulse_options.len()) {
                return Err(KrotovError::InvalidPulseOptions(format!(
                    "objective {k} uses control {index} but only {} pulse options are given",
                    pulse_options.len()
                )));
            }
        }
        let mus = objectives
            .iter()
            .map(|o| (0..pulse_options.len()).map(|l| o.generator.eom_derivative(l)).collect())
            .collect();
        Ok(Self {
            objectives,
            pulse_options,
            grid,
            propagator: Box::new(ExpmPropagator),
            functional: Box::new(JTss),
            sigma: None,
            info_hook: None,
            check_convergence: None,
            modify_params: None,
            mu_provider: None,
            store_all_pulses: false,
            max_iterations: 100,
            normalize_chi: false,
            bound_norm: OperatorNorm::default(),
            pool: None,
            mus,
        })
    }

    pub fn propagator(mut self, propagator: Box<dyn Propagator>) -> Self {
        self.propagator = propagator;
        self
    }

    pub fn functional(mut self, functional: Box<dyn Functional>) -> Self {
        self.functional = functional;
        self
    }

    /// Enables the second-order term.
    pub fn sigma(mut self, sigma: Box<dyn SigmaModel>) -> Self {
        self.sigma = Some(sigma);
        self
    }

    pub fn info_hook(mut self, hook: InfoHook) -> Self {
        self.info_hook = Some(hook);
        self
    }

    pub fn check_convergence(mut self, check: ConvergenceCheck) -> Self {
        self.check_convergence = Some(check);
        self
    }

    /// Called after every iteration; may change `λ_a` or the update shapes.
    pub fn modify_params_after_iter(mut self, f: ModifyParams) -> Self {
        self.modify_params = Some(f);
        self
    }

    pub fn mu_provider(mut self, provider: MuProvider) -> Self {
        self.mu_provider = Some(provider);
        self
    }

    pub fn store_all_pulses(mut self, store: bool) -> Self {
        self.store_all_pulses = store;
        self
    }

    pub fn max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    /// Backward-propagate `χ_k / ‖χ_k‖` and rescale the update accordingly.
    pub fn normalize_chi(mut self, normalize: bool) -> Self {
        self.normalize_chi = normalize;
        self
    }

    pub fn lambda_bound_norm(mut self, norm: OperatorNorm) -> Self {
        self.bound_norm = norm;
        self
    }

    /// Number of worker threads for the per-objective work. Results do not
    /// depend on this number.
    pub fn threads(mut self, n: usize) -> Result<Self> {
        self.pool = if n > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| KrotovError::InvalidArgument(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(self)
    }

    pub fn objectives(&self) -> &[Objective] {
        &self.objectives
    }

    pub fn pulse_options(&self) -> &[PulseOptions] {
        &self.pulse_options
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn map_k<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Send + Sync,
    {
        let n = self.objectives.len();
        match &self.pool {
            Some(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
            None => (0..n).map(f).collect(),
        }
    }

    fn check_controls(&self, controls: &[ControlField]) -> Result<()> {
        if controls.len() != self.pulse_options.len() {
            return Err(KrotovError::DimensionMismatch(format!(
                "{} controls for {} pulse options",
                controls.len(),
                self.pulse_options.len()
            )));
        }
        let n_t = self.grid.n_intervals();
        if let Some((l, c)) = controls.iter().enumerate().find(|(_, c)| c.len() != n_t) {
            return Err(KrotovError::DimensionMismatch(format!(
                "control {l} has {} values for {n_t} intervals",
                c.len()
            )));
        }
        Ok(())
    }

    fn targets(&self) -> Vec<QuantumState> {
        self.objectives.iter().map(|o| o.target.clone()).collect()
    }

    fn weights(&self) -> Vec<f64> {
        self.objectives.iter().map(|o| o.weight).collect()
    }

    /// Forward-propagate all objectives under `controls`.
    pub fn forward(&self, controls: &[ControlField], store: bool) -> Result<ForwardStorage> {
        self.check_controls(controls)?;
        let n_t = self.grid.n_intervals();
        let dt = self.grid.dt();
        let trajectories = self.map_k(|k| {
            let o = &self.objectives[k];
            let mut states = Vec::with_capacity(if store { n_t + 1 } else { 1 });
            let mut state = o.initial_state.clone();
            for n in 0..n_t {
                let eps = controls_at(controls, n);
                let next = self.propagator.step(&o.generator, &eps, &state, dt, Direction::Forward)?;
                if store {
                    states.push(std::mem::replace(&mut state, next));
                } else {
                    state = next;
                }
            }
            states.push(state);
            Ok(states)
        })?;
        Ok(if store {
            ForwardStorage::Full(trajectories)
        } else {
            ForwardStorage::Final(trajectories.into_iter().map(|mut t| t.pop().expect("final state")).collect())
        })
    }

    /// `J_T` of the given final states.
    pub fn evaluate_j_t(&self, final_states: &[QuantumState]) -> Result<f64> {
        self.functional.evaluate(final_states, &self.targets(), &self.weights())
    }

    fn mu(&self, k: usize, l: usize, n: usize, guess_eps: &[f64]) -> Result<Option<Operator>> {
        match &self.mu_provider {
            Some(provider) => provider(&MuQuery {
                objective: k,
                control: l,
                interval: n,
                eps: guess_eps,
                generator: &self.objectives[k].generator,
            }),
            None => Ok(self.mus[k][l].clone()),
        }
    }

    /// One Krotov iteration starting from `guess` and the forward states it produced.
    ///
    /// `sigma` enables the second-order term and requires full trajectories in `forward`.
    pub fn iterate(
        &self,
        forward: &ForwardStorage,
        guess: &[ControlField],
        sigma: Option<&dyn SigmaModel>,
    ) -> Result<IterationOutput> {
        self.check_controls(guess)?;
        let n_obj = self.objectives.len();
        let n_ctrl = guess.len();
        let n_t = self.grid.n_intervals();
        let dt = self.grid.dt();
        let targets = self.targets();
        let weights = self.weights();
        let phi0 = match sigma {
            Some(_) => Some(forward.trajectories().ok_or_else(|| {
                KrotovError::InvalidArgument("second-order update needs full forward trajectories".into())
            })?),
            None => None,
        };

        // boundary condition and backward propagation
        let chis_t = self.functional.chi(&forward.final_states(), &targets, &weights)?;
        if chis_t.len() != n_obj {
            return Err(KrotovError::DimensionMismatch(format!(
                "functional returned {} co-states for {n_obj} objectives",
                chis_t.len()
            )));
        }
        let chi_scale: Vec<f64> = chis_t
            .iter()
            .map(|c| {
                let norm = c.norm();
                if self.normalize_chi && norm > 0.0 {
                    norm
                } else {
                    1.0
                }
            })
            .collect();
        let backward = self.map_k(|k| {
            let g = &self.objectives[k].generator;
            let mut traj = vec![chis_t[k].scale(Complex64::new(1.0 / chi_scale[k], 0.0))];
            for n in (0..n_t).rev() {
                let eps = controls_at(guess, n);
                let prev = traj.last().expect("non-empty");
                traj.push(self.propagator.step(g, &eps, prev, dt, Direction::Backward)?);
            }
            traj.reverse();
            Ok(traj)
        })?;

        let lambda_a_bounds = self.lambda_bounds(guess, &backward, &chi_scale);

        // sequential forward sweep
        let mut controls = guess.to_vec();
        let mut phi: Vec<QuantumState> = self.objectives.iter().map(|o| o.initial_state.clone()).collect();
        let mut phi1: Option<Vec<Vec<QuantumState>>> = phi0.map(|_| {
            phi.iter()
                .map(|s| {
                    let mut v = Vec::with_capacity(n_t + 1);
                    v.push(s.clone());
                    v
                })
                .collect()
        });
        let mut second_order_max: f64 = 0.0;
        let mut delta = vec![0.0; n_ctrl];
        for n in 0..n_t {
            let guess_eps = controls_at(guess, n);
            let t_mid = 0.5 * (self.grid.points()[n] + self.grid.points()[n + 1]);
            let sigma_n = sigma.map(|s| s.value(t_mid)).unwrap_or(0.0);
            let active: Vec<bool> = self.pulse_options.iter().map(|o| o.shape.samples()[n] != 0.0).collect();

            if active.iter().any(|&a| a) {
                // per-objective contributions, [k][l] as (first order, second order)
                let terms = self.map_k(|k| {
                    let mut out = vec![(0.0, 0.0); n_ctrl];
                    for (l, slot) in out.iter_mut().enumerate() {
                        if !active[l] {
                            continue;
                        }
                        let Some(mu) = self.mu(k, l, n, &guess_eps)? else {
                            continue;
                        };
                        let mu_phi = apply(&mu, &phi[k])?;
                        let first = inner(&backward[k][n], &mu_phi)?.im * chi_scale[k];
                        let second = match phi0 {
                            Some(phi0) if sigma_n != 0.0 => {
                                let dphi = phi[k].sub(&phi0[k][n])?;
                                (Complex64::new(0.5 * sigma_n, 0.0) * inner(&dphi, &mu_phi)?).im
                            }
                            _ => 0.0,
                        };
                        *slot = (first, second);
                    }
                    Ok(out)
                })?;
                for l in 0..n_ctrl {
                    if !active[l] {
                        delta[l] = 0.0;
                        continue;
                    }
                    let opt = &self.pulse_options[l];
                    let factor = opt.shape.samples()[n] / opt.lambda_a;
                    let first: Vec<f64> = terms.iter().map(|t| t[l].0).collect();
                    let mut d = factor * pairwise_sum(&first);
                    if phi0.is_some() && sigma_n != 0.0 {
                        let second: Vec<f64> = terms.iter().map(|t| t[l].1).collect();
                        let s = factor * pairwise_sum(&second);
                        second_order_max = second_order_max.max(s.abs());
                        d += s;
                    }
                    if !d.is_finite() {
                        return Err(KrotovError::NonFinite(format!("update of control {l} on interval {n}: {d}")));
                    }
                    delta[l] = d;
                }
                for (c, d) in controls.iter_mut().zip(&delta) {
                    if *d != 0.0 {
                        c.values_mut()[n] += d;
                    }
                }
            }

            let eps = controls_at(&controls, n);
            phi = self.map_k(|k| {
                self.propagator
                    .step(&self.objectives[k].generator, &eps, &phi[k], dt, Direction::Forward)
            })?;
            if let Some(store) = phi1.as_mut() {
                for (traj, s) in store.iter_mut().zip(&phi) {
                    traj.push(s.clone());
                }
            }
        }

        let forward_new = match phi1 {
            Some(t) => ForwardStorage::Full(t),
            None => ForwardStorage::Final(phi),
        };
        let stored_states = backward.iter().map(Vec::len).sum::<usize>()
            + forward.stored_states()
            + match &forward_new {
                ForwardStorage::Full(t) => t.iter().map(Vec::len).sum(),
                // the rolling states of the sweep
                ForwardStorage::Final(s) => s.len(),
            };
        Ok(IterationOutput {
            controls,
            forward: forward_new,
            chis_t,
            lambda_a_bounds,
            second_order_max,
            stored_states,
        })
    }

    fn lambda_bounds(
        &self,
        guess: &[ControlField],
        backward: &[Vec<QuantumState>],
        chi_scale: &[f64],
    ) -> Vec<Option<f64>> {
        let chi_sum: f64 = backward
            .iter()
            .zip(chi_scale)
            .map(|(traj, c)| traj.iter().map(QuantumState::norm).fold(0.0, f64::max) * c)
            .sum();
        self.pulse_options
            .iter()
            .enumerate()
            .map(|(l, opt)| {
                let eps_max = guess[l].sup_norm();
                let mu_norm = self
                    .mus
                    .iter()
                    .filter_map(|m| m[l].as_ref())
                    .map(|m| self.bound_norm.of(m))
                    .fold(0.0, f64::max);
                if eps_max == 0.0 || mu_norm == 0.0 {
                    return None;
                }
                let bound = chi_sum * mu_norm / eps_max;
                if opt.lambda_a < 0.1 * bound {
                    warn!(
                        "control {l}: λ_a = {} is far below the estimated lower bound {bound:.3e}; monotonic convergence is at risk",
                        opt.lambda_a
                    );
                }
                Some(bound)
            })
            .collect()
    }

    /// Run the optimization from `guess` until a convergence check fires or
    /// `max_iterations` iterations have been done.
    pub fn optimize_pulses(mut self, guess: Vec<ControlField>) -> Result<OptResult> {
        self.check_controls(&guess)?;
        let start = Instant::now();
        let store_full = self.sigma.is_some();
        let mut forward = self.forward(&guess, store_full)?;
        let mut j_t = self.evaluate_j_t(&forward.final_states())?;
        let mut history = vec![IterationInfo {
            iteration: 0,
            j_t,
            ga_integrals: vec![0.0; guess.len()],
            ga_integral: 0.0,
            j_total: j_t,
            seconds: elapsed(start),
            ..IterationInfo::default()
        }];
        let mut info_vals = vec![];
        let mut all_pulses = self.store_all_pulses.then(|| vec![guess.clone()]);
        let mut controls = guess.clone();
        let mut peak_stored_states = forward.stored_states();

        let mut stop = self.after_iteration(&mut history, &mut info_vals)?;
        let mut iteration = 0;
        while stop.is_none() && iteration < self.max_iterations {
            iteration += 1;
            let start = Instant::now();
            let sigma = self.sigma.as_deref();
            let out = self.iterate(&forward, &controls, sigma)?;
            peak_stored_states = peak_stored_states.max(out.stored_states);
            let j_t_new = self.evaluate_j_t(&out.forward.final_states())?;

            let ga_integrals = self
                .pulse_options
                .iter()
                .enumerate()
                .map(|(l, opt)| {
                    let d: Vec<f64> = out.controls[l]
                        .values()
                        .iter()
                        .zip(controls[l].values())
                        .map(|(new, old)| new - old)
                        .collect();
                    g_a_integral(&ControlField::new(d)?, &opt.shape, opt.lambda_a, &self.grid)
                })
                .collect::<Result<Vec<f64>>>()?;
            let ga_integral: f64 = ga_integrals.iter().sum();
            let delta_j_t = j_t_new - j_t;

            if let (Some(sigma), Some(before), Some(after)) =
                (self.sigma.as_mut(), forward.trajectories(), out.forward.trajectories())
            {
                sigma.refresh(&SigmaRefresh {
                    forward_before: before,
                    forward_after: after,
                    chis_t: &out.chis_t,
                    j_t_before: j_t,
                    j_t_after: j_t_new,
                })?;
            }

            history.push(IterationInfo {
                iteration,
                j_t: j_t_new,
                ga_integrals,
                ga_integral,
                j_total: j_t_new + ga_integral,
                delta_j_t: Some(delta_j_t),
                delta_j: Some(delta_j_t + ga_integral),
                seconds: elapsed(start),
                lambda_a_bounds: out.lambda_a_bounds,
                second_order_max: out.second_order_max,
            });
            debug!("iteration {iteration}: J_T = {j_t_new:e}");
            j_t = j_t_new;
            controls = out.controls;
            forward = out.forward;
            if let Some(p) = all_pulses.as_mut() {
                p.push(controls.clone());
            }
            stop = self.after_iteration(&mut history, &mut info_vals)?;
        }

        let stop = match stop {
            Some(Stop::Converged(msg)) => StopReason::Converged(msg),
            Some(Stop::Error(msg)) => StopReason::CheckFailed(msg),
            None => StopReason::MaxIterations(self.max_iterations),
        };
        Ok(OptResult {
            iterations: history,
            info_vals,
            guess_controls: guess,
            optimized_controls: controls,
            all_pulses,
            final_states: forward.final_states(),
            stop,
            peak_stored_states,
        })
    }

    fn after_iteration(
        &mut self,
        history: &mut [IterationInfo],
        info_vals: &mut Vec<Option<String>>,
    ) -> Result<Option<Stop>> {
        let last = history.last().expect("non-empty history");
        info_vals.push(self.info_hook.as_mut().and_then(|hook| hook(last)));
        if let Some(modify) = self.modify_params.as_mut() {
            modify(&mut self.pulse_options, history);
            validate_pulse_options(&self.pulse_options, self.grid.n_intervals())?;
        }
        Ok(self.check_convergence.as_ref().and_then(|check| check(history)))
    }
}

fn validate_pulse_options(pulse_options: &[PulseOptions], n_t: usize) -> Result<()> {
    for (l, opt) in pulse_options.iter().enumerate() {
        if !(opt.lambda_a.is_finite() && opt.lambda_a > 0.0) {
            return Err(KrotovError::InvalidPulseOptions(format!(
                "control {l}: λ_a = {} must be positive",
                opt.lambda_a
            )));
        }
        if opt.shape.len() != n_t {
            return Err(KrotovError::InvalidPulseOptions(format!(
                "control {l}: update shape has {} samples for {n_t} intervals",
                opt.shape.len()
            )));
        }
    }
    Ok(())
}

fn elapsed(start: Instant) -> f64 {
    start.elapsed().as_millis() as f64 / 1000.0
}
