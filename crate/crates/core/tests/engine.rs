//! Whole-run properties of the optimizer.

use krotov_core::optimize::value_below;
use krotov_core::quantum::{superop, ControlTerm};
use krotov_core::{
    flattop, flattop_shape, ControlField, Generator, JTre, KrotovOptimizer, Objective, Operator, PulseOptions,
    QuantumState, Space, TimeGrid,
};

const T: f64 = 5.0;

fn sigma_x() -> Operator {
    Operator::real(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
}

fn drift() -> Operator {
    Operator::real(&[&[-0.5, 0.0], &[0.0, 0.5]]).unwrap()
}

fn guess(grid: &TimeGrid) -> Vec<ControlField> {
    vec![ControlField::sample(grid, |t| 0.2 * flattop(t, T, 0.3, 0.3)).unwrap()]
}

fn hilbert_run(n_t: usize, iterations: usize) -> krotov_core::OptResult {
    let grid = TimeGrid::linspace(T, n_t).unwrap();
    let g = Generator::hilbert(drift(), vec![(sigma_x(), 0)]).unwrap();
    let obj = Objective::new(QuantumState::basis(2, 0).unwrap(), QuantumState::basis(2, 1).unwrap(), g).unwrap();
    let opts = vec![PulseOptions::new(5.0, flattop_shape(&grid, 0.3, 0.3).unwrap()).unwrap()];
    KrotovOptimizer::new(vec![obj], opts, grid.clone())
        .unwrap()
        .max_iterations(iterations)
        .optimize_pulses(guess(&grid))
        .unwrap()
}

#[test]
fn reference_run_converges_monotonically() {
    let grid = TimeGrid::linspace(T, 500).unwrap();
    let g = Generator::hilbert(drift(), vec![(sigma_x(), 0)]).unwrap();
    let obj = Objective::new(QuantumState::basis(2, 0).unwrap(), QuantumState::basis(2, 1).unwrap(), g).unwrap();
    let opts = vec![PulseOptions::new(5.0, flattop_shape(&grid, 0.3, 0.3).unwrap()).unwrap()];
    let res = KrotovOptimizer::new(vec![obj], opts, grid.clone())
        .unwrap()
        .check_convergence(value_below(1e-3))
        .max_iterations(50)
        .optimize_pulses(guess(&grid))
        .unwrap();
    assert!(res.converged());
    assert_eq!(res.iterations.len() - 1, 18);
    for info in &res.iterations[1..] {
        assert!(info.delta_j.unwrap() <= 1e-10);
        assert!(info.delta_j_t.unwrap() <= 1e-10);
    }
    assert!(res.final_states[0].populations()[1] >= 0.999);
}

#[test]
fn first_iteration_converges_first_order_in_dt() {
    let d: Vec<f64> = [250, 500, 1000]
        .iter()
        .map(|&n| hilbert_run(n, 1).iterations[1].delta_j_t.unwrap())
        .collect();
    let ratio = (d[0] - d[1]).abs() / (d[1] - d[2]).abs();
    assert!((1.5..=2.5).contains(&ratio), "ratio {ratio}");
}

/// For a closed system, `J_T,re` on density matrices equals the Hilbert-space
/// `J_T,ss`. The updates agree on the first interval; later ones differ because
/// the Liouville-space update sees the overlap with the updated state instead
/// of the guess.
#[test]
fn liouville_space_agrees_with_hilbert_space_to_first_order() {
    let n_t = 200;
    let grid = TimeGrid::linspace(T, n_t).unwrap();
    let shape = flattop_shape(&grid, 0.3, 0.3).unwrap();
    let hilbert = {
        let g = Generator::hilbert(drift(), vec![(sigma_x(), 0)]).unwrap();
        let obj = Objective::new(QuantumState::basis(2, 0).unwrap(), QuantumState::basis(2, 1).unwrap(), g).unwrap();
        KrotovOptimizer::new(vec![obj], vec![PulseOptions::new(5.0, shape.clone()).unwrap()], grid.clone())
            .unwrap()
            .max_iterations(1)
            .optimize_pulses(guess(&grid))
            .unwrap()
    };
    let liouville = {
        let g = Generator::new(
            superop::commutator_liouvillian(&drift()),
            vec![ControlTerm { coupling: superop::commutator_liouvillian(&sigma_x()), control_index: 0 }],
            Space::Liouville(2),
        )
        .unwrap();
        let rho0 = QuantumState::pure_density(&QuantumState::basis(2, 0).unwrap()).unwrap();
        let rho1 = QuantumState::pure_density(&QuantumState::basis(2, 1).unwrap()).unwrap();
        let obj = Objective::new(rho0, rho1, g).unwrap();
        KrotovOptimizer::new(vec![obj], vec![PulseOptions::new(5.0, shape).unwrap()], grid.clone())
            .unwrap()
            .functional(Box::new(JTre))
            .max_iterations(1)
            .optimize_pulses(guess(&grid))
            .unwrap()
    };
    assert!((hilbert.iterations[0].j_t - liouville.iterations[0].j_t).abs() < 1e-12);
    let g = guess(&grid);
    let update = |r: &krotov_core::OptResult| -> Vec<f64> {
        r.optimized_controls[0].values().iter().zip(g[0].values()).map(|(a, b)| a - b).collect()
    };
    let (dh, dl) = (update(&hilbert), update(&liouville));
    assert!((dh[0] - dl[0]).abs() < 1e-14 * dh[0].abs().max(1.0));
    let scale = dh.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let gap = dh.iter().zip(&dl).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(gap < 0.5 * scale, "gap {gap:e}, update {scale:e}");
    assert!(liouville.iterations[1].delta_j.unwrap() < 0.0);
}

/// With dephasing the guess transfer gets worse, but the optimization still
/// decreases the functional monotonically.
#[test]
fn dissipative_liouville_run_is_monotonic() {
    let grid = TimeGrid::linspace(T, 200).unwrap();
    let sz = Operator::real(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap();
    let l0 = superop::lindblad(&drift(), &[sz.scale(num_complex::Complex64::new(0.1, 0.0))]).unwrap();
    let g = Generator::new(
        l0,
        vec![ControlTerm { coupling: superop::commutator_liouvillian(&sigma_x()), control_index: 0 }],
        Space::Liouville(2),
    )
    .unwrap();
    let rho0 = QuantumState::pure_density(&QuantumState::basis(2, 0).unwrap()).unwrap();
    let rho1 = QuantumState::pure_density(&QuantumState::basis(2, 1).unwrap()).unwrap();
    let obj = Objective::new(rho0, rho1, g).unwrap();
    let res = KrotovOptimizer::new(
        vec![obj],
        vec![PulseOptions::new(5.0, flattop_shape(&grid, 0.3, 0.3).unwrap()).unwrap()],
        grid.clone(),
    )
    .unwrap()
    .functional(Box::new(JTre))
    .max_iterations(5)
    .optimize_pulses(guess(&grid))
    .unwrap();
    for info in &res.iterations[1..] {
        assert!(info.delta_j.unwrap() <= 1e-10);
    }
    let rho = res.final_states[0].density_matrix().unwrap();
    assert!((rho[[0, 0]] + rho[[1, 1]] - 1.0).norm() < 1e-10);
}
