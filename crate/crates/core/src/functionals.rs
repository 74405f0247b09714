//! Final-time functionals, their co-state boundary conditions, the running
//! cost on the control updates, and update shapes.
//!
//! Objective weights enter every k-sum as multiplicative factors and are
//! rescaled so that `Σ w_k = N`; unit weights reproduce the unweighted forms.

use num_complex::Complex64;

use crate::error::{KrotovError, Result};
use crate::linalg::pairwise_sum;
use crate::propagation::{ControlField, TimeGrid};
use crate::quantum::{inner, QuantumState};

/// A final-time functional `J_T` together with its `χ` constructor
/// `χ_k(T) = −∂J_T/∂⟨φ_k(T)|`.
pub trait Functional: Send + Sync {
    fn name(&self) -> &str;

    fn evaluate(&self, states: &[QuantumState], targets: &[QuantumState], weights: &[f64]) -> Result<f64>;

    fn chi(
        &self,
        states: &[QuantumState],
        targets: &[QuantumState],
        weights: &[f64],
    ) -> Result<Vec<QuantumState>>;
}

/// `J_T,ss = 1 − (1/N) Σ_k w_k |⟨φ_k^tgt|φ_k(T)⟩|²`.
#[derive(Debug, Clone, Copy, Default)]
pub struct JTss;

/// `J_T,re = 1 − (1/N) Re Σ_k w_k ⟨φ_k^tgt|φ_k(T)⟩`.
#[derive(Debug, Clone, Copy, Default)]
pub struct JTre;

/// Look up a shipped functional by its config name (`"ss"` or `"re"`).
pub fn functional_by_name(name: &str) -> Option<Box<dyn Functional>> {
    match name {
        "ss" | "J_T_ss" => Some(Box::new(JTss)),
        "re" | "J_T_re" => Some(Box::new(JTre)),
        _ => None,
    }
}

/// Rescale weights so they sum to their count.
pub fn normalized_weights(weights: &[f64]) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(KrotovError::InvalidArgument("no weights given".into()));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(KrotovError::InvalidArgument(format!("weight {w} must be finite and ≥ 0")));
    }
    let total = pairwise_sum(weights);
    if total == 0.0 {
        return Err(KrotovError::InvalidArgument("all weights are zero".into()));
    }
    let n = weights.len() as f64;
    if total == n {
        return Ok(weights.to_vec());
    }
    Ok(weights.iter().map(|w| w * n / total).collect())
}

fn check_lists(states: &[QuantumState], targets: &[QuantumState], weights: &[f64]) -> Result<()> {
    if states.is_empty() {
        return Err(KrotovError::InvalidArgument("empty list of states".into()));
    }
    if states.len() != targets.len() || states.len() != weights.len() {
        return Err(KrotovError::InvalidArgument(format!(
            "{} states, {} targets, {} weights",
            states.len(),
            targets.len(),
            weights.len()
        )));
    }
    Ok(())
}

fn overlaps(states: &[QuantumState], targets: &[QuantumState]) -> Result<Vec<Complex64>> {
    targets.iter().zip(states).map(|(t, s)| inner(t, s)).collect()
}

fn checked(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(KrotovError::NonFinite(format!("{what} evaluated to {value}")))
    }
}

impl Functional for JTss {
    fn name(&self) -> &str {
        "J_T_ss"
    }

    fn evaluate(&self, states: &[QuantumState], targets: &[QuantumState], weights: &[f64]) -> Result<f64> {
        check_lists(states, targets, weights)?;
        let w = normalized_weights(weights)?;
        let taus = overlaps(states, targets)?;
        let terms: Vec<f64> = taus.iter().zip(&w).map(|(t, w)| w * t.norm_sqr()).collect();
        checked(1.0 - pairwise_sum(&terms) / states.len() as f64, "J_T_ss")
    }

    fn chi(
        &self,
        states: &[QuantumState],
        targets: &[QuantumState],
        weights: &[f64],
    ) -> Result<Vec<QuantumState>> {
        check_lists(states, targets, weights)?;
        let w = normalized_weights(weights)?;
        let n = states.len() as f64;
        let taus = overlaps(states, targets)?;
        Ok(targets
            .iter()
            .zip(taus)
            .zip(&w)
            .map(|((t, tau), w)| t.scale(tau * (w / n)))
            .collect())
    }
}

impl Functional for JTre {
    fn name(&self) -> &str {
        "J_T_re"
    }

    fn evaluate(&self, states: &[QuantumState], targets: &[QuantumState], weights: &[f64]) -> Result<f64> {
        check_lists(states, targets, weights)?;
        let w = normalized_weights(weights)?;
        let taus = overlaps(states, targets)?;
        let terms: Vec<f64> = taus.iter().zip(&w).map(|(t, w)| w * t.re).collect();
        checked(1.0 - pairwise_sum(&terms) / states.len() as f64, "J_T_re")
    }

    fn chi(
        &self,
        states: &[QuantumState],
        targets: &[QuantumState],
        weights: &[f64],
    ) -> Result<Vec<QuantumState>> {
        check_lists(states, targets, weights)?;
        let w = normalized_weights(weights)?;
        chi_re(targets, &w, states.len())
    }
}

/// `1 − |⟨target|φ(T)⟩|²`.
pub fn j_t_ss(phi_t: &QuantumState, target: &QuantumState) -> Result<f64> {
    JTss.evaluate(std::slice::from_ref(phi_t), std::slice::from_ref(target), &[1.0])
}

/// `1 − (1/N) Re Σ_k w_k ⟨φ_k^tgt|φ_k(T)⟩`.
pub fn j_t_re(phi_t: &[QuantumState], targets: &[QuantumState], weights: &[f64]) -> Result<f64> {
    JTre.evaluate(phi_t, targets, weights)
}

/// `⟨target|φ(T)⟩ · |target⟩`.
pub fn chi_ss(phi_t: &QuantumState, target: &QuantumState) -> Result<QuantumState> {
    let tau = inner(target, phi_t)?;
    Ok(target.scale(tau))
}

/// `χ_k = (w_k / 2N) |φ_k^tgt⟩`, independent of the propagated states.
///
/// Weights are used as given; [`JTre`] normalizes them before calling this.
pub fn chi_re(targets: &[QuantumState], weights: &[f64], n: usize) -> Result<Vec<QuantumState>> {
    if targets.len() != weights.len() {
        return Err(KrotovError::InvalidArgument(format!(
            "{} targets, {} weights",
            targets.len(),
            weights.len()
        )));
    }
    if n == 0 {
        return Err(KrotovError::InvalidArgument("N must be at least 1".into()));
    }
    let n = n as f64;
    Ok(targets
        .iter()
        .zip(weights)
        .map(|(t, w)| t.scale(Complex64::new(w / (2.0 * n), 0.0)))
        .collect())
}

/// Samples `S_n ∈ [0, 1]` of an update shape at the interval midpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateShape {
    samples: Vec<f64>,
}

impl UpdateShape {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if let Some((n, s)) = samples
            .iter()
            .enumerate()
            .find(|(_, s)| !(s.is_finite() && (0.0..=1.0).contains(*s)))
        {
            return Err(KrotovError::InvalidShape(format!(
                "sample {n} = {s} outside [0, 1]"
            )));
        }
        Ok(Self { samples })
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn sample(grid: &TimeGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid.midpoints().into_iter().map(f).collect())
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

const BLACKMAN_A: f64 = 0.16;

/// Blackman window on `[t0, t1]`, exactly zero at both ends and one at the center.
pub fn blackman(t: f64, t0: f64, t1: f64) -> f64 {
    let x = 2.0 * std::f64::consts::PI * (t - t0) / (t1 - t0);
    // (1 − cos x) − a (1 − cos 2x) is the same expression, arranged to vanish exactly at x = 0, 2π
    (0.5 * ((1.0 - x.cos()) - BLACKMAN_A * (1.0 - (2.0 * x).cos()))).max(0.0)
}

/// Flattop envelope with Blackman ramps of length `t_on` / `t_off`, evaluated at `t`.
pub fn flattop(t: f64, t_final: f64, t_on: f64, t_off: f64) -> f64 {
    if t <= 0.0 || t >= t_final {
        0.0
    } else if t < t_on {
        blackman(t, 0.0, 2.0 * t_on)
    } else if t <= t_final - t_off {
        1.0
    } else {
        blackman(t, t_final - 2.0 * t_off, t_final)
    }
}

/// Flattop update shape sampled at the midpoints of `grid`.
pub fn flattop_shape(grid: &TimeGrid, t_on: f64, t_off: f64) -> Result<UpdateShape> {
    let t_final = grid.t_final();
    if !(t_on >= 0.0 && t_off >= 0.0 && t_on + t_off <= t_final) {
        return Err(KrotovError::InvalidShape(format!(
            "ramp times t_on = {t_on}, t_off = {t_off} do not fit in T = {t_final}"
        )));
    }
    UpdateShape::sample(grid, |t| flattop(t, t_final, t_on, t_off))
}

/// `Σ_n (λ_a / S_n) (Δε_n)² dt`; intervals with `S_n = 0` contribute nothing.
pub fn g_a_integral(
    delta_eps: &ControlField,
    shape: &UpdateShape,
    lambda_a: f64,
    grid: &TimeGrid,
) -> Result<f64> {
    if !(lambda_a > 0.0 && lambda_a.is_finite()) {
        return Err(KrotovError::InvalidPulseOptions(format!("λ_a = {lambda_a} must be positive")));
    }
    let n_t = grid.n_intervals();
    if delta_eps.len() != n_t || shape.len() != n_t {
        return Err(KrotovError::DimensionMismatch(format!(
            "Δε has {} values, S has {} samples, grid has {n_t} intervals",
            delta_eps.len(),
            shape.len()
        )));
    }
    let mut total = 0.0;
    for (n, (&de, &s)) in delta_eps.values().iter().zip(shape.samples()).enumerate() {
        if s == 0.0 {
            if de != 0.0 {
                return Err(KrotovError::CorruptedUpdate { interval: n, delta: de });
            }
            continue;
        }
        total += lambda_a / s * de * de;
    }
    Ok(total * grid.dt())
}

/// `ΔJ = ΔJ_T + Σ_l ∫ g_a dt`.
///
/// Both terms refer to the single reference field of the current iteration,
/// so this is not the difference of two consecutive `J` values.
pub fn delta_j(delta_j_t: f64, ga_integrals: &[f64]) -> f64 {
    delta_j_t + ga_integrals.iter().sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn state(v: &[(f64, f64)]) -> QuantumState {
        QuantumState::hilbert(v.iter().map(|&(r, i)| c(r, i)).collect()).unwrap()
    }

    #[test]
    fn j_t_ss_examples() {
        let e0 = QuantumState::basis(2, 0).unwrap();
        let e1 = QuantumState::basis(2, 1).unwrap();
        assert_eq!(j_t_ss(&e1, &e1).unwrap(), 0.0);
        assert_eq!(j_t_ss(&e0, &e1).unwrap(), 1.0);
        let half = state(&[(0.5, 0.0), (0.75f64.sqrt(), 0.0)]);
        assert!((j_t_ss(&half, &e0).unwrap() - 0.75).abs() < 1e-15);
        assert!(j_t_ss(&e0, &QuantumState::basis(3, 0).unwrap()).is_err());
    }

    #[test]
    fn j_t_re_examples() {
        let e0 = QuantumState::basis(2, 0).unwrap();
        let e1 = QuantumState::basis(2, 1).unwrap();
        let targets = [e0.clone(), e1.clone()];
        assert_eq!(j_t_re(&targets, &targets, &[1.0, 1.0]).unwrap(), 0.0);
        let flipped: Vec<_> = targets.iter().map(|t| t.scale(c(-1.0, 0.0))).collect();
        assert_eq!(j_t_re(&flipped, &targets, &[1.0, 1.0]).unwrap(), 2.0);
        // τ = {1, 0}
        let states = [e0.clone(), e0.clone()];
        assert_eq!(j_t_re(&states, &targets, &[1.0, 1.0]).unwrap(), 0.5);
        assert!(j_t_re(&[], &[], &[]).is_err());
        assert!(j_t_re(&states, &targets, &[1.0]).is_err());
    }

    #[test]
    fn chi_ss_examples() {
        let e0 = QuantumState::basis(2, 0).unwrap();
        let e1 = QuantumState::basis(2, 1).unwrap();
        assert_eq!(chi_ss(&e1, &e1).unwrap(), e1);
        assert_eq!(chi_ss(&e0, &e1).unwrap(), e1.zeros_like());
    }

    #[test]
    fn chi_re_examples() {
        let t = state(&[(0.6, 0.0), (0.0, 0.8)]);
        let chi = chi_re(std::slice::from_ref(&t), &[1.0], 1).unwrap();
        assert_eq!(chi[0], t.scale(c(0.5, 0.0)));
        let targets = [t.clone(), QuantumState::basis(2, 0).unwrap()];
        let chi_w = chi_re(&targets, &[0.5, 1.5], 2).unwrap();
        let chi_2w = chi_re(&targets, &[1.0, 3.0], 2).unwrap();
        for (a, b) in chi_w.iter().zip(&chi_2w) {
            assert_eq!(a.scale(c(2.0, 0.0)), *b);
        }
        // through the functional, raw weights (1, 3) normalize to (0.5, 1.5)
        let via_functional = JTre.chi(&targets, &targets, &[1.0, 3.0]).unwrap();
        assert_eq!(via_functional, chi_w);
        assert!(chi_re(&targets, &[1.0], 2).is_err());
    }

    #[test]
    fn weights_normalize_to_count() {
        let w = normalized_weights(&[20.0, 1.0, 1.0]).unwrap();
        assert!((w[0] - 60.0 / 22.0).abs() < 1e-15);
        assert!((w[1] - 3.0 / 22.0).abs() < 1e-15);
        assert!((w.iter().sum::<f64>() - 3.0).abs() < 1e-14);
        assert_eq!(normalized_weights(&[1.0, 1.0]).unwrap(), vec![1.0, 1.0]);
        assert!(normalized_weights(&[0.0, 0.0]).is_err());
        assert!(normalized_weights(&[-1.0, 2.0]).is_err());
    }

    #[test]
    fn zero_weight_removes_objective() {
        let e0 = QuantumState::basis(2, 0).unwrap();
        let e1 = QuantumState::basis(2, 1).unwrap();
        let chi = JTss.chi(&[e0.clone(), e1.clone()], &[e0.clone(), e0.clone()], &[1.0, 0.0]).unwrap();
        assert_eq!(chi[1], e0.zeros_like());
        let j = JTss.evaluate(&[e0.clone(), e1.clone()], &[e0.clone(), e0.clone()], &[1.0, 0.0]).unwrap();
        // normalized weights (2, 0): J = 1 − (2·1 + 0)/2
        assert_eq!(j, 0.0);
    }

    #[test]
    fn global_phase_sensitivity() {
        let t = [state(&[(0.6, 0.0), (0.0, 0.8)]), QuantumState::basis(2, 1).unwrap()];
        let s = [state(&[(0.8, 0.0), (0.0, 0.6)]), state(&[(0.0, 0.6), (0.8, 0.0)])];
        let rotated: Vec<_> = s.iter().map(|x| x.scale(c(-1.0, 0.0))).collect();
        let w = [1.0, 1.0];
        let j = JTre.evaluate(&s, &t, &w).unwrap();
        let j_pi = JTre.evaluate(&rotated, &t, &w).unwrap();
        assert!((j_pi - (2.0 - j)).abs() < 1e-15);
        let theta = c(0.0, 0.7).exp();
        let phased: Vec<_> = s.iter().map(|x| x.scale(theta)).collect();
        let ss = JTss.evaluate(&s, &t, &w).unwrap();
        assert!((JTss.evaluate(&phased, &t, &w).unwrap() - ss).abs() < 1e-15);
    }

    #[test]
    fn blackman_endpoints_and_center() {
        for (t0, t1) in [(0.0, 0.6), (4.4, 5.0), (0.3, 1.7)] {
            assert_eq!(blackman(t0, t0, t1), 0.0);
            assert_eq!(blackman(t1, t0, t1), 0.0);
            assert!((blackman(0.5 * (t0 + t1), t0, t1) - 1.0).abs() < 1e-15);
        }
        assert_eq!(blackman(0.3, 0.0, 0.6), 1.0);
    }

    #[test]
    fn flattop_shape_properties() {
        let grid = TimeGrid::linspace(5.0, 500).unwrap();
        let s = flattop_shape(&grid, 0.3, 0.3).unwrap();
        assert!(s.samples().iter().all(|&x| (0.0..=1.0).contains(&x)));
        let ramp_on = &s.samples()[..30];
        assert!(ramp_on.windows(2).all(|w| w[0] <= w[1]));
        let ramp_off = &s.samples()[470..];
        assert!(ramp_off.windows(2).all(|w| w[0] >= w[1]));
        assert!(s.samples()[30..470].iter().all(|&x| x == 1.0));
        assert_eq!(flattop(0.0, 5.0, 0.3, 0.3), 0.0);
        assert_eq!(flattop(5.0, 5.0, 0.3, 0.3), 0.0);

        let flat = flattop_shape(&grid, 0.0, 0.0).unwrap();
        assert!(flat.samples().iter().all(|&x| x == 1.0));
        assert!(flattop_shape(&grid, 3.0, 2.5).is_err());
        assert!(flattop_shape(&grid, -0.1, 0.0).is_err());
    }

    #[test]
    fn update_shape_rejects_out_of_range() {
        assert!(UpdateShape::new(vec![0.0, 1.0, 1.0001]).is_err());
        assert!(UpdateShape::new(vec![-1e-9]).is_err());
    }

    #[test]
    fn g_a_integral_examples() {
        let grid = TimeGrid::linspace(2.0, 40).unwrap();
        let s1 = UpdateShape::constant(40, 1.0).unwrap();
        assert_eq!(g_a_integral(&ControlField::zeros(40), &s1, 5.0, &grid).unwrap(), 0.0);
        let c0 = 0.1;
        let de = ControlField::new(vec![c0; 40]).unwrap();
        let v = g_a_integral(&de, &s1, 5.0, &grid).unwrap();
        assert!((v - 5.0 * c0 * c0 * 2.0).abs() < 1e-14);

        let mut samples = vec![1.0; 40];
        let mut deltas = vec![c0; 40];
        for n in 0..5 {
            samples[n] = 0.0;
            deltas[n] = 0.0;
        }
        let shape = UpdateShape::new(samples).unwrap();
        let v = g_a_integral(&ControlField::new(deltas.clone()).unwrap(), &shape, 5.0, &grid).unwrap();
        assert!((v - 5.0 * c0 * c0 * 35.0 * grid.dt()).abs() < 1e-14);

        deltas[2] = 1e-3;
        let err = g_a_integral(&ControlField::new(deltas).unwrap(), &shape, 5.0, &grid).unwrap_err();
        assert_eq!(err, KrotovError::CorruptedUpdate { interval: 2, delta: 1e-3 });
        assert!(g_a_integral(&de, &s1, 0.0, &grid).is_err());
    }

    #[test]
    fn delta_j_examples() {
        assert_eq!(delta_j(-0.1, &[0.0]), -0.1);
        assert!((delta_j(-0.1, &[0.03]) - -0.07).abs() < 1e-16);
        assert!((delta_j(-0.1, &[0.01, 0.02]) - -0.07).abs() < 1e-16);
    }

    #[test]
    fn functional_lookup() {
        assert_eq!(functional_by_name("ss").unwrap().name(), "J_T_ss");
        assert_eq!(functional_by_name("re").unwrap().name(), "J_T_re");
        assert!(functional_by_name("pe").is_none());
    }
}
