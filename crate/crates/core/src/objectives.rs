//! Control objectives and the builders that produce lists of them.

use crate::error::{KrotovError, Result};
use crate::functionals::normalized_weights;
use crate::quantum::{apply, inner, Generator, Operator, QuantumState};

const ORTHONORMAL_TOL: f64 = 1e-10;

/// One `(initial state, target, generator, weight)` entry of a control problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub initial_state: QuantumState,
    pub target: QuantumState,
    pub generator: Generator,
    pub weight: f64,
}

impl Objective {
    pub fn new(initial_state: QuantumState, target: QuantumState, generator: Generator) -> Result<Self> {
        Self::weighted(initial_state, target, generator, 1.0)
    }

    pub fn weighted(
        initial_state: QuantumState,
        target: QuantumState,
        generator: Generator,
        weight: f64,
    ) -> Result<Self> {
        let space = generator.space();
        if initial_state.space() != space || target.space() != space {
            return Err(KrotovError::SpaceMismatch(format!(
                "initial state in {}, target in {}, generator in {space}",
                initial_state.space(),
                target.space()
            )));
        }
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(KrotovError::InvalidObjectives(format!("weight {weight} must be ≥ 0")));
        }
        Ok(Self { initial_state, target, generator, weight })
    }
}

/// Check the invariants a list of objectives must satisfy as a whole.
pub fn validate_objectives(objectives: &[Objective]) -> Result<()> {
    let first = objectives
        .first()
        .ok_or_else(|| KrotovError::InvalidObjectives("no objectives".into()))?;
    let space = first.generator.space();
    if let Some((k, o)) = objectives.iter().enumerate().find(|(_, o)| o.generator.space() != space) {
        return Err(KrotovError::SpaceMismatch(format!(
            "objective {k} lives in {}, objective 0 in {space}",
            o.generator.space()
        )));
    }
    if objectives.iter().all(|o| o.weight == 0.0) {
        return Err(KrotovError::InvalidObjectives("all objective weights are zero".into()));
    }
    Ok(())
}

/// One objective per basis state with target `gate · basis_k` and unit weight.
pub fn gate_objectives(basis: &[QuantumState], gate: &Operator, generator: &Generator) -> Result<Vec<Objective>> {
    if basis.is_empty() {
        return Err(KrotovError::InvalidObjectives("empty basis".into()));
    }
    check_orthonormal(basis, "basis")?;
    let targets: Vec<QuantumState> = basis.iter().map(|b| apply(gate, b)).collect::<Result<_>>()?;
    check_orthonormal(&targets, "gate image of the basis (gate not unitary on its span)")?;
    basis
        .iter()
        .zip(targets)
        .map(|(b, t)| Objective::new(b.clone(), t, generator.clone()))
        .collect()
}

fn check_orthonormal(states: &[QuantumState], what: &str) -> Result<()> {
    for (i, a) in states.iter().enumerate() {
        for (j, b) in states.iter().enumerate().skip(i) {
            let overlap = inner(a, b)?;
            let expected = if i == j { 1.0 } else { 0.0 };
            if (overlap.re - expected).abs() > ORTHONORMAL_TOL || overlap.im.abs() > ORTHONORMAL_TOL {
                return Err(KrotovError::InvalidObjectives(format!(
                    "{what}: ⟨{i}|{j}⟩ = {overlap} is not orthonormal"
                )));
            }
        }
    }
    Ok(())
}

/// `base` followed by one copy of every base objective per ensemble generator.
///
/// All copies share the controls of the base problem, so every ensemble
/// generator must reference exactly the base generators' control indices.
pub fn ensemble_objectives(base: &[Objective], ensemble_generators: &[Generator]) -> Result<Vec<Objective>> {
    let mut out = base.to_vec();
    if ensemble_generators.is_empty() {
        return Ok(out);
    }
    let reference = base
        .first()
        .ok_or_else(|| KrotovError::InvalidObjectives("empty base objective list".into()))?;
    let controls = reference.generator.control_indices();
    for (m, g) in ensemble_generators.iter().enumerate() {
        if g.space() != reference.generator.space() {
            return Err(KrotovError::SpaceMismatch(format!(
                "ensemble generator {m} in {}, base objectives in {}",
                g.space(),
                reference.generator.space()
            )));
        }
        if g.control_indices() != controls {
            return Err(KrotovError::InvalidObjectives(format!(
                "ensemble generator {m} controls {:?}, base controls {:?}",
                g.control_indices(),
                controls
            )));
        }
        for o in base {
            out.push(Objective { generator: g.clone(), ..o.clone() });
        }
    }
    Ok(out)
}

/// Attach weights and rescale them so they sum to the number of objectives.
pub fn weighted_objectives(objectives: &[Objective], weights: &[f64]) -> Result<Vec<Objective>> {
    if objectives.len() != weights.len() {
        return Err(KrotovError::InvalidObjectives(format!(
            "{} objectives, {} weights",
            objectives.len(),
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| **w < 0.0) {
        return Err(KrotovError::InvalidObjectives(format!("negative weight {w}")));
    }
    let w = normalized_weights(weights).map_err(|e| KrotovError::InvalidObjectives(e.to_string()))?;
    Ok(objectives
        .iter()
        .zip(w)
        .map(|(o, weight)| Objective { weight, ..o.clone() })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{Functional, JTre, JTss};
    use proptest::prelude::*;

    fn sigma_x() -> Operator {
        Operator::real(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    fn two_level() -> Generator {
        let h0 = Operator::real(&[&[-0.5, 0.0], &[0.0, 0.5]]).unwrap();
        Generator::hilbert(h0, vec![(sigma_x(), 0)]).unwrap()
    }

    fn basis(d: usize) -> Vec<QuantumState> {
        (0..d).map(|i| QuantumState::basis(d, i).unwrap()).collect()
    }

    #[test]
    fn identity_gate_targets_are_initial_states() {
        let objs = gate_objectives(&basis(2), &Operator::identity(2), &two_level()).unwrap();
        assert!(objs.iter().all(|o| o.initial_state == o.target && o.weight == 1.0));
        let states: Vec<_> = objs.iter().map(|o| o.initial_state.clone()).collect();
        let targets: Vec<_> = objs.iter().map(|o| o.target.clone()).collect();
        assert_eq!(JTre.evaluate(&states, &targets, &[1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn pauli_x_gate_swaps_targets() {
        let b = basis(2);
        let objs = gate_objectives(&b, &sigma_x(), &two_level()).unwrap();
        assert_eq!(objs[0].target, b[1]);
        assert_eq!(objs[1].target, b[0]);
    }

    #[test]
    fn two_qubit_basis_gives_four_objectives() {
        let g = Generator::hilbert(Operator::zeros(4), vec![]).unwrap();
        assert_eq!(gate_objectives(&basis(4), &Operator::identity(4), &g).unwrap().len(), 4);
    }

    #[test]
    fn gate_objectives_validation() {
        let mut b = basis(2);
        b[1] = b[0].clone();
        assert!(gate_objectives(&b, &Operator::identity(2), &two_level()).is_err());
        let not_unitary = Operator::real(&[&[1.0, 0.0], &[0.0, 2.0]]).unwrap();
        let err = gate_objectives(&basis(2), &not_unitary, &two_level()).unwrap_err();
        assert!(err.to_string().contains("not unitary"));
    }

    #[test]
    fn ensemble_cardinality_and_copies() {
        let base = gate_objectives(&basis(2), &sigma_x(), &two_level()).unwrap();
        assert_eq!(ensemble_objectives(&base, &[]).unwrap(), base);
        let perturbed: Vec<Generator> = (1..=3)
            .map(|m| {
                let h0 = Operator::real(&[&[-0.5 - 0.01 * m as f64, 0.0], &[0.0, 0.5]]).unwrap();
                Generator::hilbert(h0, vec![(sigma_x(), 0)]).unwrap()
            })
            .collect();
        let ens = ensemble_objectives(&base, &perturbed).unwrap();
        assert_eq!(ens.len(), 8);
        for (i, o) in ens.iter().enumerate() {
            assert_eq!(o.initial_state, base[i % 2].initial_state);
            assert_eq!(o.target, base[i % 2].target);
        }
        assert_eq!(ens[2].generator, perturbed[0]);
    }

    #[test]
    fn ensemble_rejects_control_mismatch() {
        let base = gate_objectives(&basis(2), &sigma_x(), &two_level()).unwrap();
        let other = Generator::hilbert(Operator::zeros(2), vec![(sigma_x(), 1)]).unwrap();
        assert!(ensemble_objectives(&base, &[other]).is_err());
    }

    #[test]
    fn weighted_objectives_normalization() {
        let objs = gate_objectives(&basis(3), &Operator::identity(3), &Generator::hilbert(Operator::zeros(3), vec![]).unwrap())
            .unwrap();
        let w = weighted_objectives(&objs, &[20.0, 1.0, 1.0]).unwrap();
        let weights: Vec<f64> = w.iter().map(|o| o.weight).collect();
        let expected = [60.0 / 22.0, 3.0 / 22.0, 3.0 / 22.0];
        for (a, b) in weights.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        let unit = weighted_objectives(&objs, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(unit, objs);
        assert!(weighted_objectives(&objs, &[1.0, -1.0, 1.0]).is_err());
        assert!(weighted_objectives(&objs, &[0.0, 0.0, 0.0]).is_err());
        assert!(weighted_objectives(&objs, &[1.0]).is_err());
    }

    #[test]
    fn zero_weight_objective_has_no_influence() {
        let b = basis(2);
        let objs = gate_objectives(&b, &Operator::identity(2), &two_level()).unwrap();
        let w = weighted_objectives(&objs, &[1.0, 0.0]).unwrap();
        let states = [b[0].clone(), b[0].clone()];
        let targets: Vec<_> = w.iter().map(|o| o.target.clone()).collect();
        let weights: Vec<_> = w.iter().map(|o| o.weight).collect();
        let chi = JTss.chi(&states, &targets, &weights).unwrap();
        assert!(chi[1].norm() == 0.0);
        // second objective is fully wrong but carries no weight
        assert_eq!(JTss.evaluate(&states, &targets, &weights).unwrap(), 0.0);
    }

    #[test]
    fn objective_rejects_space_mismatch() {
        let err = Objective::new(QuantumState::basis(3, 0).unwrap(), QuantumState::basis(2, 0).unwrap(), two_level());
        assert!(err.is_err());
        let state = QuantumState::basis(2, 0).unwrap();
        assert!(Objective::weighted(state.clone(), state, two_level(), -1.0).is_err());
    }

    #[test]
    fn validate_rejects_all_zero_weights() {
        let objs = gate_objectives(&basis(2), &Operator::identity(2), &two_level()).unwrap();
        let zeroed: Vec<_> = objs.into_iter().map(|o| Objective { weight: 0.0, ..o }).collect();
        assert!(validate_objectives(&zeroed).is_err());
        assert!(validate_objectives(&[]).is_err());
    }

    proptest! {
        #[test]
        fn ensemble_cardinality_formula(n_base in 1usize..=6, n_ens in 0usize..=6) {
            let g = two_level();
            let state = QuantumState::basis(2, 0).unwrap();
            let base: Vec<Objective> = (0..n_base)
                .map(|_| Objective::new(state.clone(), state.clone(), g.clone()).unwrap())
                .collect();
            let gens: Vec<Generator> = (0..n_ens)
                .map(|m| g.clone().evaluate(&[m as f64]).map(|h| Generator::hilbert(h, vec![(sigma_x(), 0)]).unwrap()).unwrap())
                .collect();
            let out = ensemble_objectives(&base, &gens).unwrap();
            prop_assert_eq!(out.len(), n_base * (1 + n_ens));
        }
    }
}
