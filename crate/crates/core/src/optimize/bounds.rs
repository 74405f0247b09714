//! Lower bound on the inverse step width `λ_a` from the Cauchy–Schwarz inequality.

use crate::error::{KrotovError, Result};
use crate::linalg::{frobenius_norm, spectral_norm};
use crate::propagation::ControlField;
use crate::quantum::{Operator, QuantumState};

/// Which operator norm stands in for `‖∂H/∂ε‖_∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OperatorNorm {
    /// Frobenius norm, a cheap upper bound of the spectral norm.
    #[default]
    Frobenius,
    Spectral,
}

impl OperatorNorm {
    pub fn of(&self, op: &Operator) -> f64 {
        match self {
            OperatorNorm::Frobenius => frobenius_norm(op.matrix()),
            OperatorNorm::Spectral => spectral_norm(op.matrix()),
        }
    }
}

/// `(1/‖ε‖_∞) · [Σ_k max_n ‖χ_k(t_n)‖] · ‖μ‖`.
pub fn lambda_a_lower_bound(
    guess: &ControlField,
    chis: &[Vec<QuantumState>],
    mu: &Operator,
    norm: OperatorNorm,
) -> Result<f64> {
    let eps_max = guess.sup_norm();
    if eps_max == 0.0 {
        return Err(KrotovError::ZeroGuess);
    }
    let chi_sum: f64 = chis
        .iter()
        .map(|traj| traj.iter().map(QuantumState::norm).fold(0.0, f64::max))
        .sum();
    Ok(chi_sum * norm.of(mu) / eps_max)
}
