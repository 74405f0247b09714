//! Stopping criteria evaluated on the iteration history.

use super::IterationInfo;

/// Why a convergence check stopped the optimization.
#[derive(Debug, Clone, PartialEq)]
pub enum Stop {
    Converged(String),
    /// The check detected a failure (e.g. loss of monotonic convergence).
    Error(String),
}

pub type ConvergenceCheck = Box<dyn Fn(&[IterationInfo]) -> Option<Stop> + Send + Sync>;

/// Fires when the latest `J_T` is below `threshold`.
pub fn value_below(threshold: f64) -> ConvergenceCheck {
    Box::new(move |history| {
        let last = history.last()?;
        (last.j_t < threshold).then(|| Stop::Converged(format!("J_T < {threshold:e}")))
    })
}

/// Fires when `|ΔJ_T|` of the latest iteration is below `threshold`.
pub fn delta_below(threshold: f64) -> ConvergenceCheck {
    Box::new(move |history| {
        let delta = history.last()?.delta_j_t?;
        (delta.abs() < threshold).then(|| Stop::Converged(format!("|ΔJ_T| < {threshold:e}")))
    })
}

/// Reports an error as soon as `J_T` increases from one iteration to the next.
pub fn check_monotonic_error() -> ConvergenceCheck {
    Box::new(|history| {
        let [.., prev, last] = history else {
            return None;
        };
        (last.j_t > prev.j_t).then(|| {
            Stop::Error(format!(
                "loss of monotonic convergence: J_T increased from {:e} to {:e} in iteration {}",
                prev.j_t, last.j_t, last.iteration
            ))
        })
    })
}

/// The first member that fires decides.
pub fn or_chain(checks: Vec<ConvergenceCheck>) -> ConvergenceCheck {
    Box::new(move |history| checks.iter().find_map(|check| check(history)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn history(values: &[f64]) -> Vec<IterationInfo> {
        values
            .iter()
            .enumerate()
            .map(|(i, &j_t)| IterationInfo {
                iteration: i,
                j_t,
                delta_j_t: (i > 0).then(|| j_t - values[i - 1]),
                ..IterationInfo::default()
            })
            .collect()
    }

    #[test]
    fn value_below_stops_after_third_entry() {
        let h = history(&[0.9, 0.5, 2e-4]);
        let check = value_below(1e-3);
        assert_eq!(check(&h[..1]), None);
        assert_eq!(check(&h[..2]), None);
        assert!(matches!(check(&h), Some(Stop::Converged(_))));
    }

    #[test]
    fn monotonic_check() {
        let check = check_monotonic_error();
        let decreasing = history(&[0.9, 0.7, 0.5, 0.1]);
        for i in 1..=decreasing.len() {
            assert_eq!(check(&decreasing[..i]), None);
        }
        assert!(matches!(check(&history(&[0.5, 0.6])), Some(Stop::Error(_))));
    }

    #[test]
    fn delta_below_ignores_iteration_zero() {
        let check = delta_below(1e-2);
        assert_eq!(check(&history(&[0.5])), None);
        assert!(check(&history(&[0.5, 0.495])).is_some());
        assert!(check(&history(&[0.5, 0.4])).is_none());
    }

    #[test]
    fn or_chain_distinguishes_outcomes() {
        let chain = or_chain(vec![value_below(1e-3), check_monotonic_error()]);
        assert!(matches!(chain(&history(&[0.5, 0.6])), Some(Stop::Error(_))));
        assert!(matches!(chain(&history(&[0.5, 1e-4])), Some(Stop::Converged(_))));
        assert_eq!(chain(&history(&[0.5, 0.4])), None);
        assert_eq!(or_chain(vec![])(&history(&[0.1])), None);
    }
}
