//! Second-order contribution to the pulse update.

use log::warn;
use num_complex::Complex64;

use crate::error::{KrotovError, Result};
use crate::quantum::{apply, inner, Operator, QuantumState};

/// Data handed to [`SigmaModel::refresh`] at the end of an iteration.
pub struct SigmaRefresh<'a> {
    /// Forward trajectories under the guess controls, `[k][n]`.
    pub forward_before: &'a [Vec<QuantumState>],
    /// Forward trajectories under the updated controls, `[k][n]`.
    pub forward_after: &'a [Vec<QuantumState>],
    /// Un-normalized `χ_k(T)` of the iteration.
    pub chis_t: &'a [QuantumState],
    pub j_t_before: f64,
    pub j_t_after: f64,
}

/// The scalar function `σ(t)` weighting the second-order term.
pub trait SigmaModel: Send + Sync {
    fn value(&self, t: f64) -> f64;

    /// Update internal parameters after an iteration. The default does nothing.
    fn refresh(&mut self, _data: &SigmaRefresh<'_>) -> Result<()> {
        Ok(())
    }
}

/// Constant `σ(t) ≡ value`.
#[derive(Debug, Clone, Copy)]
pub struct ConstantSigma(pub f64);

impl SigmaModel for ConstantSigma {
    fn value(&self, _t: f64) -> f64 {
        self.0
    }
}

/// `σ(t) ≡ −max(ε_A, 2A + ε_A)` with `A` re-estimated after every iteration.
#[derive(Debug, Clone, Copy)]
pub struct NumericalASigma {
    pub a: f64,
    pub eps_a: f64,
}

impl NumericalASigma {
    pub fn new(a: f64, eps_a: f64) -> Self {
        Self { a, eps_a }
    }
}

/// `−max(ε_A, 2A + ε_A)`.
pub fn sigma_from_a(a: f64, eps_a: f64) -> f64 {
    -eps_a.max(2.0 * a + eps_a)
}

impl SigmaModel for NumericalASigma {
    fn value(&self, _t: f64) -> f64 {
        sigma_from_a(self.a, self.eps_a)
    }

    fn refresh(&mut self, data: &SigmaRefresh<'_>) -> Result<()> {
        let delta_phis: Vec<QuantumState> = data
            .forward_after
            .iter()
            .zip(data.forward_before)
            .map(|(after, before)| {
                let (a, b) = (after.last(), before.last());
                match (a, b) {
                    (Some(a), Some(b)) => a.sub(b),
                    _ => Err(KrotovError::InvalidArgument("empty trajectory".into())),
                }
            })
            .collect::<Result<_>>()?;
        let delta_j_t = data.j_t_after - data.j_t_before;
        self.a = match numerical_estimate_a(data.chis_t, &delta_phis, delta_j_t) {
            Ok(a) => a,
            Err(KrotovError::UndefinedA) => {
                warn!("final states did not change; setting A = 0");
                0.0
            }
            Err(e) => return Err(e),
        };
        Ok(())
    }
}

/// `A = [Σ_k 2 Re⟨χ_k(T)|Δφ_k(T)⟩ + ΔJ_T] / Σ_k ‖Δφ_k(T)‖²`.
pub fn numerical_estimate_a(chis_t: &[QuantumState], delta_phis_t: &[QuantumState], delta_j_t: f64) -> Result<f64> {
    if chis_t.len() != delta_phis_t.len() {
        return Err(KrotovError::InvalidArgument(format!(
            "{} χ states, {} Δφ states",
            chis_t.len(),
            delta_phis_t.len()
        )));
    }
    let mut numerator = delta_j_t;
    let mut denominator = 0.0;
    for (chi, dphi) in chis_t.iter().zip(delta_phis_t) {
        numerator += 2.0 * inner(chi, dphi)?.re;
        denominator += dphi.norm().powi(2);
    }
    if denominator == 0.0 {
        return Err(KrotovError::UndefinedA);
    }
    Ok(numerator / denominator)
}

/// `(S/λ_a) · Im[½ σ ⟨Δφ|μ|φ⟩]` for a single objective.
pub fn second_order_term(
    phi: &QuantumState,
    delta_phi: &QuantumState,
    mu: &Operator,
    sigma: f64,
    shape: f64,
    lambda_a: f64,
) -> Result<f64> {
    let overlap = inner(delta_phi, &apply(mu, phi)?)?;
    Ok(shape / lambda_a * (Complex64::new(0.5 * sigma, 0.0) * overlap).im)
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
    fn estimate_a_orthogonal_and_arithmetic() {
        let chi = state(&[(1.0, 0.0), (0.0, 0.0)]);
        let dphi = state(&[(0.0, 0.0), (0.3, 0.4)]);
        assert_eq!(numerical_estimate_a(&[chi], &[dphi], 0.0).unwrap(), 0.0);

        let chi = state(&[(0.5, 0.0), (0.0, 0.0)]);
        let dphi = state(&[(1.0, 0.0), (0.0, 0.0)]);
        let a = numerical_estimate_a(&[chi], &[dphi], -0.2).unwrap();
        assert_eq!(a, 0.8);
        let eps_a = 1e-6;
        assert_eq!(sigma_from_a(a, eps_a), -(eps_a.max(1.6 + eps_a)));
    }

    #[test]
    fn estimate_a_zero_denominator() {
        let chi = state(&[(1.0, 0.0)]);
        let zero = state(&[(0.0, 0.0)]);
        assert_eq!(numerical_estimate_a(&[chi], &[zero], -0.1), Err(KrotovError::UndefinedA));
    }

    #[test]
    fn sigma_rule_clamps_negative_a() {
        assert_eq!(sigma_from_a(-5.0, 0.01), -0.01);
        assert_eq!(sigma_from_a(0.0, 0.0), 0.0);
    }

    #[test]
    fn second_order_term_examples() {
        let mu = Operator::real(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let phi = state(&[(0.6, 0.0), (0.0, 0.8)]);
        let dphi = state(&[(0.1, -0.2), (0.05, 0.3)]);
        assert_eq!(second_order_term(&phi, &dphi, &mu, 0.0, 1.0, 5.0).unwrap(), 0.0);
        assert_eq!(second_order_term(&phi, &phi.zeros_like(), &mu, -1.0, 1.0, 5.0).unwrap(), 0.0);

        // direct expansion: ⟨Δφ|μ|φ⟩ = Σ_ij conj(Δφ_i) μ_ij φ_j
        let (sigma, s, lambda) = (-0.7, 0.4, 2.5);
        let d = dphi.data();
        let p = phi.data();
        let m = mu.matrix();
        let mut overlap = c(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                overlap += d[i].conj() * m[[i, j]] * p[j];
            }
        }
        let expected = s / lambda * 0.5 * sigma * overlap.im;
        let got = second_order_term(&phi, &dphi, &mu, sigma, s, lambda).unwrap();
        assert!((got - expected).abs() < 1e-16);
    }

    #[test]
    fn refresh_updates_a() {
        let before = vec![vec![state(&[(1.0, 0.0), (0.0, 0.0)]), state(&[(1.0, 0.0), (0.0, 0.0)])]];
        let after = vec![vec![state(&[(1.0, 0.0), (0.0, 0.0)]), state(&[(2.0, 0.0), (0.0, 0.0)])]];
        let chis = [state(&[(0.5, 0.0), (0.0, 0.0)])];
        let mut sigma = NumericalASigma::new(0.0, 1e-3);
        sigma
            .refresh(&SigmaRefresh {
                forward_before: &before,
                forward_after: &after,
                chis_t: &chis,
                j_t_before: 0.5,
                j_t_after: 0.3,
            })
            .unwrap();
        assert!((sigma.a - 0.8).abs() < 1e-15);
        // unchanged final states fall back to A = 0
        sigma
            .refresh(&SigmaRefresh {
                forward_before: &before,
                forward_after: &before,
                chis_t: &chis,
                j_t_before: 0.5,
                j_t_after: 0.5,
            })
            .unwrap();
        assert_eq!(sigma.a, 0.0);
    }
}
