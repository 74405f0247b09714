//! Time grid, piecewise-constant controls and single-interval propagators.
//!
//! Every propagator works with the equation of motion in the form
//! `i φ̇ = H φ` (ħ = 1), see [`Generator::eom_operator`]. A forward step over
//! `dt` maps `φ(t) → φ(t + dt)`; a backward step maps `χ(t) → χ(t − dt)`
//! under the adjoint, i.e. `exp(−i H dt)` and `exp(+i H† dt)` respectively.

use num_complex::Complex64;

use crate::error::{KrotovError, Result};
use crate::linalg::{self, conj_transpose, CMatrix, CVector};
use crate::quantum::{Generator, QuantumState};

const MAX_GRID_DEVIATION: f64 = 1e-12;

/// Equidistant time grid `t_0 = 0 < t_1 < … < t_{N_T} = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
    dt: f64,
}

impl TimeGrid {
    /// `n_intervals + 1` points evenly spaced on `[0, t_final]`.
    pub fn linspace(t_final: f64, n_intervals: usize) -> Result<Self> {
        if n_intervals == 0 {
            return Err(KrotovError::InvalidGrid("at least one interval required".into()));
        }
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(KrotovError::InvalidGrid(format!("final time {t_final} must be positive")));
        }
        let points = (0..=n_intervals)
            .map(|i| t_final * i as f64 / n_intervals as f64)
            .collect();
        Self::from_points(points)
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(KrotovError::InvalidGrid(format!(
                "{} grid point(s); need at least 2",
                points.len()
            )));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(KrotovError::InvalidGrid("non-finite grid point".into()));
        }
        let n = points.len() - 1;
        let dt = (points[n] - points[0]) / n as f64;
        for (i, w) in points.windows(2).enumerate() {
            let step = w[1] - w[0];
            if step <= 0.0 {
                return Err(KrotovError::InvalidGrid(format!(
                    "grid not strictly increasing at index {}",
                    i + 1
                )));
            }
            if (step - dt).abs() > MAX_GRID_DEVIATION * dt {
                return Err(KrotovError::InvalidGrid(format!(
                    "grid is not equidistant: interval {i} has width {step}, expected {dt}"
                )));
            }
        }
        Ok(Self { points, dt })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_intervals(&self) -> usize {
        self.points.len() - 1
    }

    pub fn t_final(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// `t̃_n = (t_n + t_{n+1}) / 2` for every interval.
    pub fn midpoints(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

/// Control values on the intervals of a time grid, sampled at the interval midpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlField {
    values: Vec<f64>,
}

impl ControlField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(KrotovError::NonFinite("control field has non-finite values".into()));
        }
        Ok(Self { values })
    }

    /// Sample `f` at the midpoints of `grid`.
    pub fn sample(grid: &TimeGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid.midpoints().into_iter().map(f).collect())
    }

    pub fn zeros(n: usize) -> Self {
        Self { values: vec![0.0; n] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `max_n |ε_n|`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Control values of every control on interval `n`.
pub fn controls_at(controls: &[ControlField], n: usize) -> Vec<f64> {
    controls.iter().map(|c| c.values[n]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Time evolution over a single interval of the time grid.
pub trait Propagator: Send + Sync {
    fn step(
        &self,
        generator: &Generator,
        eps: &[f64],
        state: &QuantumState,
        dt: f64,
        direction: Direction,
    ) -> Result<QuantumState>;
}

fn check_step_args(generator: &Generator, state: &QuantumState, dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(KrotovError::InvalidArgument(format!("time step {dt} must be positive")));
    }
    if generator.space() != state.space() {
        return Err(KrotovError::SpaceMismatch(format!(
            "generator in {}, state in {}",
            generator.space(),
            state.space()
        )));
    }
    Ok(())
}

/// The matrix `A` with `d/dτ y = A y` over the step.
fn rate_matrix(generator: &Generator, eps: &[f64], direction: Direction) -> Result<CMatrix> {
    let h = generator.eom_operator(eps)?;
    Ok(match direction {
        Direction::Forward => h.matrix().mapv(|z| z * Complex64::new(0.0, -1.0)),
        Direction::Backward => conj_transpose(h.matrix()).mapv(|z| z * Complex64::new(0.0, 1.0)),
    })
}

/// Exact propagation by constructing the step operator through matrix exponentiation.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExpmPropagator;

impl Propagator for ExpmPropagator {
    fn step(
        &self,
        generator: &Generator,
        eps: &[f64],
        state: &QuantumState,
        dt: f64,
        direction: Direction,
    ) -> Result<QuantumState> {
        expm_step(generator, eps, state, dt, direction)
    }
}

pub fn expm_step(
    generator: &Generator,
    eps: &[f64],
    state: &QuantumState,
    dt: f64,
    direction: Direction,
) -> Result<QuantumState> {
    check_step_args(generator, state, dt)?;
    let a = rate_matrix(generator, eps, direction)?.mapv(|z| z * dt);
    let u = linalg::expm(&a)?;
    Ok(QuantumState::from_parts_unchecked(u.dot(state.data()), state.space()))
}

/// Adaptive Dormand–Prince 5(4) integration of the same equation of motion.
///
/// Independent of the matrix exponential; used to validate [`ExpmPropagator`].
#[derive(Debug, Clone, Copy)]
pub struct OdeReferencePropagator {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeReferencePropagator {
    fn default() -> Self {
        Self { rtol: 1e-13, atol: 1e-15, max_steps: 1_000_000 }
    }
}

impl Propagator for OdeReferencePropagator {
    fn step(
        &self,
        generator: &Generator,
        eps: &[f64],
        state: &QuantumState,
        dt: f64,
        direction: Direction,
    ) -> Result<QuantumState> {
        check_step_args(generator, state, dt)?;
        let a = rate_matrix(generator, eps, direction)?;
        let y = self.integrate(&a, state.data(), dt)?;
        Ok(QuantumState::from_parts_unchecked(y, state.space()))
    }
}

pub fn ode_reference_step(
    generator: &Generator,
    eps: &[f64],
    state: &QuantumState,
    dt: f64,
    direction: Direction,
) -> Result<QuantumState> {
    OdeReferencePropagator::default().step(generator, eps, state, dt, direction)
}

// Dormand–Prince tableau (autonomous system, so the stage times drop out)
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

impl OdeReferencePropagator {
    fn integrate(&self, a: &CMatrix, y0: &CVector, span: f64) -> Result<CVector> {
        let mut y = y0.clone();
        let mut t = 0.0;
        let scale = linalg::one_norm(a).max(1e-300);
        let mut h = (0.1 / scale).min(span);
        let mut k: Vec<CVector> = Vec::with_capacity(7);
        for _ in 0..self.max_steps {
            if t >= span {
                return Ok(y);
            }
            let last = t + h >= span;
            if last {
                h = span - t;
            }
            k.clear();
            for stage in 0..7 {
                let mut arg = y.clone();
                for (j, kj) in k.iter().enumerate() {
                    let coeff = A[stage][j];
                    if coeff != 0.0 {
                        arg.scaled_add(Complex64::new(h * coeff, 0.0), kj);
                    }
                }
                k.push(a.dot(&arg));
            }
            let mut y_new = y.clone();
            let mut err = CVector::zeros(y.len());
            for (j, kj) in k.iter().enumerate() {
                y_new.scaled_add(Complex64::new(h * B5[j], 0.0), kj);
                err.scaled_add(Complex64::new(h * (B5[j] - B4[j]), 0.0), kj);
            }
            let err_norm = err
                .iter()
                .zip(y.iter().zip(y_new.iter()))
                .map(|(e, (y0, y1))| {
                    let tol = self.atol + self.rtol * y0.norm().max(y1.norm());
                    (e.norm() / tol).powi(2)
                })
                .sum::<f64>()
                / y.len().max(1) as f64;
            let err_norm = err_norm.sqrt();
            if err_norm <= 1.0 {
                t = if last { span } else { t + h };
                y = y_new;
            }
            let factor = if err_norm == 0.0 { 5.0 } else { (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
            if h < 1e-14 * span && t < span {
                return Err(KrotovError::StepUnderflow { t, h });
            }
        }
        Err(KrotovError::StepUnderflow { t, h })
    }
}

/// Propagate `s0` over the full grid, interval by interval.
///
/// Returns the state at `T` and, when `store` is set, all `N_T + 1` states.
pub fn propagate(
    generator: &Generator,
    controls: &[ControlField],
    s0: &QuantumState,
    grid: &TimeGrid,
    propagator: &dyn Propagator,
    store: bool,
) -> Result<(QuantumState, Option<Vec<QuantumState>>)> {
    let n_t = grid.n_intervals();
    if let Some((l, c)) = controls.iter().enumerate().find(|(_, c)| c.len() != n_t) {
        return Err(KrotovError::DimensionMismatch(format!(
            "control {l} has {} values for {n_t} intervals",
            c.len()
        )));
    }
    let mut trajectory = store.then(|| {
        let mut v = Vec::with_capacity(n_t + 1);
        v.push(s0.clone());
        v
    });
    let mut state = s0.clone();
    for n in 0..n_t {
        let eps = controls_at(controls, n);
        state = propagator.step(generator, &eps, &state, grid.dt(), Direction::Forward)?;
        if let Some(t) = trajectory.as_mut() {
            t.push(state.clone());
        }
    }
    Ok((state, trajectory))
}
