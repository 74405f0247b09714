//! JSON run configuration and its translation into an optimization problem.
//!
//! Matrix and vector entries are either plain numbers or `[re, im]` pairs.

use std::path::{Path, PathBuf};

use krotov_core::optimize::{ConstantSigma, NumericalASigma, SigmaModel};
use krotov_core::quantum::{split_complex_control, superop, ControlTerm};
use krotov_core::{
    ensemble_objectives, flattop, functional_by_name, gate_objectives, weighted_objectives, ControlField, Generator,
    Objective, Operator, PulseOptions, QuantumState, Space, TimeGrid, UpdateShape,
};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use crate::csv::read_pulses;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: line {line}, column {column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },

    #[error("invalid field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl std::fmt::Display) -> ConfigError {
    ConfigError::Invalid { field: field.into(), message: message.to_string() }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    /// Additional systems for ensemble optimization; each gets a copy of every objective.
    #[serde(default)]
    pub ensemble: Vec<SystemConfig>,
    pub time_grid: GridConfig,
    pub pulses: Vec<PulseConfig>,
    #[serde(default = "default_functional")]
    pub functional: String,
    pub objectives: ObjectivesConfig,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
    #[serde(default)]
    pub second_order: Option<SecondOrderConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_functional() -> String {
    "ss".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// `"hilbert"` or `"liouville"`.
    #[serde(default = "default_space")]
    pub space: String,
    pub drift: Value,
    #[serde(default)]
    pub controls: Vec<ControlTermConfig>,
    /// Liouville only: jump operators added as dissipators to the drift.
    #[serde(default)]
    pub lindblad: Vec<Value>,
    /// Liouville only: matrices are already superoperators.
    #[serde(default)]
    pub superoperator: bool,
}

fn default_space() -> String {
    "hilbert".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlTermConfig {
    pub coupling: Value,
    /// Index of the real control multiplying `coupling`.
    #[serde(default)]
    pub control: Option<usize>,
    /// Indices `[re, im]` of the two real controls for a complex control
    /// entering as `ε* a + ε a†` with `a = coupling`.
    #[serde(default)]
    pub complex: Option<[usize; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_final: f64,
    pub n_intervals: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub guess: ShapeConfig,
    pub lambda_a: f64,
    #[serde(default)]
    pub update_shape: Option<ShapeConfig>,
}

/// A function of time: a named analytic shape, inline samples, or a column of a pulse CSV.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeConfig {
    /// `"flattop"`, `"constant"` or `"zero"`.
    #[serde(default)]
    pub shape: Option<String>,
    #[serde(default)]
    pub amplitude: Option<f64>,
    #[serde(default)]
    pub t_on: Option<f64>,
    #[serde(default)]
    pub t_off: Option<f64>,
    #[serde(default)]
    pub samples: Option<Vec<f64>>,
    #[serde(default)]
    pub file: Option<PathBuf>,
    /// Control column in `file`, counting from 0 after the time column.
    #[serde(default)]
    pub column: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectivesConfig {
    /// Explicit state-to-state objectives.
    #[serde(default)]
    pub states: Vec<StateObjectiveConfig>,
    /// Gate objectives over the canonical basis.
    #[serde(default)]
    pub gate: Option<Value>,
    /// Weights for gate objectives.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateObjectiveConfig {
    /// A basis index, a state vector, or (Liouville) a density matrix.
    pub initial: Value,
    pub target: Value,
    #[serde(default)]
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub delta_threshold: Option<f64>,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_true")]
    pub check_monotonic: bool,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self { threshold: None, delta_threshold: None, max_iterations: default_max_iterations(), check_monotonic: true }
    }
}

fn default_max_iterations() -> usize {
    100
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecondOrderConfig {
    /// `"numerical_a"` or `"constant"`.
    pub sigma: String,
    #[serde(default)]
    pub eps_a: Option<f64>,
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub store_all_pulses: bool,
    #[serde(default)]
    pub threads: Option<usize>,
    /// JSON-lines file receiving one record per iteration.
    #[serde(default)]
    pub run_log: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.into(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }
}

/// Everything needed to run or simulate, with all paths resolved.
#[derive(Debug)]
pub struct Problem {
    pub objectives: Vec<Objective>,
    pub pulse_options: Vec<PulseOptions>,
    pub grid: TimeGrid,
    pub guess: Vec<ControlField>,
    pub functional: String,
    pub convergence: ConvergenceConfig,
    pub second_order: Option<SecondOrderConfig>,
    pub output: OutputConfig,
}

impl Problem {
    /// Validate `config` and build the problem. Relative paths are taken
    /// relative to `base_dir`.
    pub fn build(config: &RunConfig, base_dir: &Path) -> Result<Self, ConfigError> {
        if functional_by_name(&config.functional).is_none() {
            return Err(invalid("functional", format!("unknown functional {:?} (expected \"ss\" or \"re\")", config.functional)));
        }
        let g = &config.time_grid;
        if !(g.t_final.is_finite() && g.t_final > 0.0) {
            return Err(invalid("time_grid.t_final", "must be positive"));
        }
        if g.n_intervals < 1 {
            return Err(invalid("time_grid.n_intervals", "must be at least 1"));
        }
        let grid = TimeGrid::linspace(g.t_final, g.n_intervals).map_err(|e| invalid("time_grid", e))?;

        let generator = build_generator(&config.system, "system")?;
        let ensemble: Vec<Generator> = config
            .ensemble
            .iter()
            .enumerate()
            .map(|(m, s)| build_generator(s, &format!("ensemble[{m}]")))
            .collect::<Result<_, _>>()?;

        let n_controls = config.pulses.len();
        for (field, g) in std::iter::once(("system".to_string(), &generator))
            .chain(ensemble.iter().enumerate().map(|(m, g)| (format!("ensemble[{m}]"), g)))
        {
            if g.required_controls() > n_controls {
                return Err(invalid(
                    format!("{field}.controls"),
                    format!("references control {} but only {n_controls} pulses are configured", g.required_controls() - 1),
                ));
            }
        }

        let base = build_objectives(&config.objectives, &generator)?;
        let objectives = ensemble_objectives(&base, &ensemble).map_err(|e| invalid("ensemble", e))?;

        let mut pulse_options = Vec::with_capacity(n_controls);
        let mut guess = Vec::with_capacity(n_controls);
        for (l, p) in config.pulses.iter().enumerate() {
            let field = format!("pulses[{l}]");
            if !(p.lambda_a.is_finite() && p.lambda_a > 0.0) {
                return Err(invalid(format!("{field}.lambda_a"), "must be positive"));
            }
            let guess_samples = sample_shape(&p.guess, &grid, base_dir, l, &format!("{field}.guess"))?;
            guess.push(ControlField::new(guess_samples).map_err(|e| invalid(format!("{field}.guess"), e))?);
            let shape_samples = match &p.update_shape {
                Some(s) => sample_shape(s, &grid, base_dir, l, &format!("{field}.update_shape"))?,
                None => vec![1.0; grid.n_intervals()],
            };
            let shape = UpdateShape::new(shape_samples).map_err(|e| invalid(format!("{field}.update_shape"), e))?;
            pulse_options.push(PulseOptions::new(p.lambda_a, shape).map_err(|e| invalid(format!("{field}.lambda_a"), e))?);
        }

        if let Some(so) = &config.second_order {
            sigma_from_config(so)?;
        }
        let mut output = config.output.clone();
        output.out_dir = output.out_dir.map(|d| resolve(base_dir, &d));
        output.run_log = output.run_log.map(|d| resolve(base_dir, &d));
        if output.threads == Some(0) {
            return Err(invalid("output.threads", "must be at least 1"));
        }

        Ok(Self {
            objectives,
            pulse_options,
            grid,
            guess,
            functional: config.functional.clone(),
            convergence: config.convergence.clone(),
            second_order: config.second_order.clone(),
            output,
        })
    }

    pub fn sigma(&self) -> Result<Option<Box<dyn SigmaModel>>, ConfigError> {
        self.second_order.as_ref().map(sigma_from_config).transpose()
    }
}

fn resolve(base_dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base_dir.join(p)
    }
}

fn sigma_from_config(c: &SecondOrderConfig) -> Result<Box<dyn SigmaModel>, ConfigError> {
    match c.sigma.as_str() {
        "numerical_a" => {
            let eps_a = c.eps_a.unwrap_or(0.0);
            if !(eps_a.is_finite() && eps_a >= 0.0) {
                return Err(invalid("second_order.eps_a", "must be ≥ 0"));
            }
            Ok(Box::new(NumericalASigma::new(c.a.unwrap_or(0.0), eps_a)))
        }
        "constant" => {
            let v = c.value.ok_or_else(|| invalid("second_order.value", "required for a constant sigma"))?;
            Ok(Box::new(ConstantSigma(v)))
        }
        other => Err(invalid("second_order.sigma", format!("unknown model {other:?} (expected \"numerical_a\" or \"constant\")"))),
    }
}

fn sample_shape(
    s: &ShapeConfig,
    grid: &TimeGrid,
    base_dir: &Path,
    control: usize,
    field: &str,
) -> Result<Vec<f64>, ConfigError> {
    let n_t = grid.n_intervals();
    let given = [s.shape.is_some(), s.samples.is_some(), s.file.is_some()].iter().filter(|b| **b).count();
    if given != 1 {
        return Err(invalid(field, "exactly one of `shape`, `samples`, `file` must be given"));
    }
    if let Some(samples) = &s.samples {
        if samples.len() != n_t {
            return Err(invalid(format!("{field}.samples"), format!("{} values for {n_t} intervals", samples.len())));
        }
        return Ok(samples.clone());
    }
    if let Some(file) = &s.file {
        let path = resolve(base_dir, file);
        let (times, columns) = read_pulses(&path).map_err(|e| invalid(format!("{field}.file"), e))?;
        let col = s.column.unwrap_or(control);
        let values = columns
            .get(col)
            .ok_or_else(|| invalid(format!("{field}.column"), format!("{} has no control column {col}", path.display())))?;
        if times.len() != n_t {
            return Err(invalid(format!("{field}.file"), format!("{} rows for {n_t} intervals", times.len())));
        }
        let dt = grid.dt();
        if let Some((n, t)) = grid.midpoints().iter().zip(&times).enumerate().find(|(_, (a, b))| (*a - *b).abs() > 1e-9 * dt.max(1.0)).map(|(n, (_, t))| (n, *t)) {
            return Err(invalid(format!("{field}.file"), format!("row {n} at t = {t} does not match the time grid")));
        }
        return Ok(values.clone());
    }
    let amplitude = s.amplitude.unwrap_or(1.0);
    let t_final = grid.t_final();
    match s.shape.as_deref().unwrap_or_default() {
        "flattop" => {
            let t_on = s.t_on.ok_or_else(|| invalid(format!("{field}.t_on"), "required for shape flattop"))?;
            let t_off = s.t_off.unwrap_or(t_on);
            if !(t_on >= 0.0 && t_off >= 0.0 && t_on + t_off <= t_final) {
                return Err(invalid(field, format!("ramps t_on = {t_on}, t_off = {t_off} do not fit into T = {t_final}")));
            }
            Ok(grid.midpoints().into_iter().map(|t| amplitude * flattop(t, t_final, t_on, t_off)).collect())
        }
        "constant" => Ok(vec![amplitude; n_t]),
        "zero" => Ok(vec![0.0; n_t]),
        other => Err(invalid(format!("{field}.shape"), format!("unknown shape {other:?}"))),
    }
}

fn build_generator(s: &SystemConfig, field: &str) -> Result<Generator, ConfigError> {
    let drift = parse_matrix(&s.drift, &format!("{field}.drift"))?;
    let n = drift.dim();
    let mut terms = vec![];
    for (i, c) in s.controls.iter().enumerate() {
        let cf = format!("{field}.controls[{i}]");
        let coupling = parse_matrix(&c.coupling, &format!("{cf}.coupling"))?;
        if coupling.dim() != n {
            return Err(invalid(
                format!("{cf}.coupling"),
                format!("is {0}x{0} but the drift is {n}x{n}", coupling.dim()),
            ));
        }
        match (c.control, c.complex) {
            (Some(l), None) => terms.push((coupling, l)),
            (None, Some([l_re, l_im])) => {
                let (re, im) = split_complex_control(&coupling);
                terms.push((re, l_re));
                terms.push((im, l_im));
            }
            _ => return Err(invalid(cf, "give exactly one of `control` or `complex`")),
        }
    }

    let space = match s.space.as_str() {
        "hilbert" => {
            if !s.lindblad.is_empty() {
                return Err(invalid(format!("{field}.lindblad"), "only allowed for space \"liouville\""));
            }
            if !drift.is_hermitian(1e-12) {
                log::warn!("{field}.drift is not Hermitian");
            }
            Space::Hilbert(n)
        }
        "liouville" => {
            if s.superoperator {
                let d = (n as f64).sqrt().round() as usize;
                if d * d != n {
                    return Err(invalid(format!("{field}.drift"), format!("superoperator dimension {n} is not a square")));
                }
                if !s.lindblad.is_empty() {
                    return Err(invalid(format!("{field}.lindblad"), "not allowed together with `superoperator`"));
                }
                Space::Liouville(d)
            } else {
                Space::Liouville(n)
            }
        }
        other => return Err(invalid(format!("{field}.space"), format!("unknown space {other:?}"))),
    };

    let (drift, terms) = if space.is_liouville() && !s.superoperator {
        let jumps: Vec<Operator> = s
            .lindblad
            .iter()
            .enumerate()
            .map(|(j, m)| parse_matrix(m, &format!("{field}.lindblad[{j}]")))
            .collect::<Result<_, _>>()?;
        let l0 = superop::lindblad(&drift, &jumps).map_err(|e| invalid(format!("{field}.lindblad"), e))?;
        let terms = terms.into_iter().map(|(h, l)| (superop::commutator_liouvillian(&h), l)).collect();
        (l0, terms)
    } else {
        (drift, terms)
    };
    let controls = terms.into_iter().map(|(coupling, control_index)| ControlTerm { coupling, control_index }).collect();
    Generator::new(drift, controls, space).map_err(|e| invalid(field, e))
}

fn build_objectives(c: &ObjectivesConfig, generator: &Generator) -> Result<Vec<Objective>, ConfigError> {
    let space = generator.space();
    let objectives = match (&c.gate, c.states.is_empty()) {
        (Some(gate), true) => {
            if space.is_liouville() {
                return Err(invalid("objectives.gate", "gate objectives need a Hilbert-space system; give density matrices under `states`"));
            }
            let gate = parse_matrix(gate, "objectives.gate")?;
            let d = space.hilbert_dim();
            if gate.dim() != d {
                return Err(invalid("objectives.gate", format!("is {0}x{0} but the system is {d}-dimensional", gate.dim())));
            }
            let basis: Vec<QuantumState> = (0..d).map(|i| QuantumState::basis(d, i).expect("valid index")).collect();
            let objectives = gate_objectives(&basis, &gate, generator).map_err(|e| invalid("objectives.gate", e))?;
            match &c.weights {
                Some(w) => weighted_objectives(&objectives, w).map_err(|e| invalid("objectives.weights", e))?,
                None => objectives,
            }
        }
        (None, false) => {
            if c.weights.is_some() {
                return Err(invalid("objectives.weights", "use `weight` on each state objective"));
            }
            let mut objectives = vec![];
            let mut weights = vec![];
            for (k, s) in c.states.iter().enumerate() {
                let f = format!("objectives.states[{k}]");
                let initial = parse_state(&s.initial, space, &format!("{f}.initial"))?;
                let target = parse_state(&s.target, space, &format!("{f}.target"))?;
                objectives.push(Objective::new(initial, target, generator.clone()).map_err(|e| invalid(&f, e))?);
                weights.push(s.weight.unwrap_or(1.0));
            }
            if c.states.iter().any(|s| s.weight.is_some()) {
                weighted_objectives(&objectives, &weights).map_err(|e| invalid("objectives.states", e))?
            } else {
                objectives
            }
        }
        (Some(_), false) => return Err(invalid("objectives", "give either `states` or `gate`, not both")),
        (None, true) => return Err(invalid("objectives", "no objectives given")),
    };
    Ok(objectives)
}

fn parse_complex(v: &Value, field: &str) -> Result<Complex64, ConfigError> {
    match v {
        Value::Number(n) => n.as_f64().map(|x| Complex64::new(x, 0.0)).ok_or_else(|| invalid(field, "not a finite number")),
        Value::Array(a) if a.len() == 2 => match (a[0].as_f64(), a[1].as_f64()) {
            (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
            _ => Err(invalid(field, "complex entries are written as [re, im] with two numbers")),
        },
        _ => Err(invalid(field, "expected a number or a [re, im] pair")),
    }
}

/// A square matrix given as a list of rows.
pub fn parse_matrix(v: &Value, field: &str) -> Result<Operator, ConfigError> {
    let rows = v.as_array().ok_or_else(|| invalid(field, "expected a matrix (list of rows)"))?;
    let n = rows.len();
    if n == 0 {
        return Err(invalid(field, "matrix is empty"));
    }
    let mut parsed = Vec::with_capacity(n);
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| invalid(format!("{field}[{i}]"), "expected a row (list of entries)"))?;
        if row.len() != n {
            return Err(invalid(field, format!("matrix is not square: row {i} has {} entries, expected {n}", row.len())));
        }
        parsed.push(
            row.iter()
                .enumerate()
                .map(|(j, e)| parse_complex(e, &format!("{field}[{i}][{j}]")))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    Operator::from_rows(&parsed).map_err(|e| invalid(field, e))
}

/// `{"basis": i}`, a state vector, or (Liouville space) a density matrix.
pub fn parse_state(v: &Value, space: Space, field: &str) -> Result<QuantumState, ConfigError> {
    let d = space.hilbert_dim();
    if let Some(obj) = v.as_object() {
        let i = obj
            .get("basis")
            .and_then(Value::as_u64)
            .ok_or_else(|| invalid(field, "expected {\"basis\": index}"))? as usize;
        if obj.len() != 1 {
            return Err(invalid(field, "only the key `basis` is allowed"));
        }
        let psi = QuantumState::basis(d, i).map_err(|e| invalid(field, e))?;
        return match space {
            Space::Hilbert(_) => Ok(psi),
            Space::Liouville(_) => QuantumState::pure_density(&psi).map_err(|e| invalid(field, e)),
        };
    }
    match space {
        Space::Hilbert(_) => {
            let entries = v.as_array().ok_or_else(|| invalid(field, "expected a state vector"))?;
            if entries.len() != d {
                return Err(invalid(field, format!("{} entries for dimension {d}", entries.len())));
            }
            let amps = entries
                .iter()
                .enumerate()
                .map(|(i, e)| parse_complex(e, &format!("{field}[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            QuantumState::hilbert(amps).map_err(|e| invalid(field, e))
        }
        Space::Liouville(_) => {
            let rho = parse_matrix(v, field)?;
            if rho.dim() != d {
                return Err(invalid(field, format!("density matrix is {0}x{0}, system dimension is {d}", rho.dim())));
            }
            QuantumState::from_density_matrix(rho.matrix()).map_err(|e| invalid(field, e))
        }
    }
}
