//! Refinement behavior of the backward solver on the closed-form linear
//! driver: doubling the step count must not degrade the max-node RMSE.

use gbsde::brownian::{BrownianBatch, SeedSpec};
use gbsde::generator::GeneratorSpec;
use gbsde::grid::TimeGrid;
use gbsde::reduce::det_rms;
use gbsde::regression::RegressionBasis;
use gbsde::solver::{solve_backward, TerminalSpec};

fn max_node_rmse(steps: usize, paths: usize, seed: u64) -> f64 {
    let mu = 0.5;
    let grid = TimeGrid::uniform(1.0, steps).unwrap();
    let batch = BrownianBatch::simulate(grid.clone(), 1, paths, SeedSpec::new(seed)).unwrap();
    let sol = solve_backward(
        &batch,
        &GeneratorSpec::linear_z(mu),
        &TerminalSpec::terminal_brownian(),
        RegressionBasis::polynomial(3),
        3,
    )
    .unwrap();
    let values = batch.values_flat();
    let node_count = grid.node_count();
    let mut worst = 0.0_f64;
    for i in 0..node_count {
        let t = grid.node(i);
        let devs: Vec<f64> = (0..paths)
            .map(|p| sol.y(p, i) - (values[p * node_count + i] + mu * (1.0 - t)))
            .collect();
        worst = worst.max(det_rms(&devs));
    }
    worst
}

#[test]
fn doubling_steps_does_not_increase_error() {
    let paths = 100_000;
    let coarse = max_node_rmse(50, paths, 20_001);
    let fine = max_node_rmse(100, paths, 20_001);
    assert!(
        fine <= 1.05 * coarse,
        "max-node RMSE went from {coarse:.5} (N = 50) to {fine:.5} (N = 100)"
    );
}
