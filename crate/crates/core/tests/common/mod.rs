#![allow(dead_code)]

use druid_core::harness::{build_problem, partition, synthetic_classification, ProblemKind};
use druid_core::topology::random_connected_graph;
use druid_core::{Druid, Graph, Hyperparams, LocalObjective, Problem, Regularizer, Scheme};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn uniform_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
}

/// Least squares with dense uniform features, one block of `rows` per agent.
pub fn least_squares_problem(seed: u64, m: usize, d: usize, rows: usize, reg: Regularizer) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let locals = (0..m)
        .map(|_| {
            let a = uniform_matrix(&mut rng, rows, d);
            let b = DVector::from_fn(rows, |_, _| rng.gen_range(-1.0..1.0));
            LocalObjective::least_squares(a, b).unwrap()
        })
        .collect();
    Problem::new(locals, reg).unwrap()
}

/// Smallest `ε` strictly above half the largest local smoothness constant.
pub fn epsilon_above_half(problem: &Problem, margin: f64) -> f64 {
    0.5 * problem.smoothness().unwrap().big_m_f * margin
}

/// Five-agent, three-dimensional LASSO used by the equivalence, fixed-point
/// and monotonicity checks.
pub fn small_lasso(scheme: Scheme) -> Druid {
    let p = least_squares_problem(1, 5, 3, 4, Regularizer::L1(0.1));
    let g = random_connected_graph(5, 0.5, 1).unwrap();
    let hp = Hyperparams { epsilon: epsilon_above_half(&p, 1.2), scheme, ..Default::default() };
    Druid::new(p, g, hp).unwrap()
}

/// Ten agents, `d = 4`, eight rows each. Every local Gram matrix has the
/// spectrum `{0.5, 1, 1.5, 2}` (features are orthonormal columns rescaled),
/// so `m_f = 0.5`, `M_f = 2` and `κ = 4`.
pub fn ridge_instance() -> (Problem, Graph) {
    let (m, d, rows) = (10, 4, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let truth = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
    let spectrum = DVector::from_fn(d, |k, _| 0.5 + 1.5 * k as f64 / (d - 1) as f64);
    let locals = (0..m)
        .map(|_| {
            let q = uniform_matrix(&mut rng, rows, d).qr().q();
            let a = q * DMatrix::from_diagonal(&spectrum.map(f64::sqrt));
            let b = &a * &truth + DVector::from_fn(rows, |_, _| 0.5 * rng.gen_range(-1.0..1.0));
            LocalObjective::least_squares(a, b).unwrap()
        })
        .collect();
    let p = Problem::new(locals, Regularizer::SquaredL2(0.1)).unwrap();
    (p, random_connected_graph(m, 0.5, 3).unwrap())
}

/// Hyperparameters meeting the linear-rate conditions on [`ridge_instance`]:
/// `μ_z = 2μ_θ` and `ε = 21 > c_max²(m_f + M_f)/(2 m_f M_f) = 20`.
pub fn ridge_linear_hyper(scheme: Scheme) -> Hyperparams {
    Hyperparams { mu_z: 2.0, mu_theta: 1.0, epsilon: 21.0, scheme, ..Default::default() }
}

/// Logistic loss with an l1 penalty on synthetic separable-with-noise data.
pub fn logistic_instance(scheme: Scheme) -> Druid {
    let ds = synthetic_classification(120, 5, 0.3, 4);
    let parts = partition(ds.len(), 6, 4).unwrap();
    let p = build_problem(ProblemKind::LogisticL1, 0.01, &ds, &parts).unwrap();
    let g = random_connected_graph(6, 0.5, 4).unwrap();
    let hp = Hyperparams { epsilon: epsilon_above_half(&p, 1.2), scheme, ..Default::default() };
    Druid::new(p, g, hp).unwrap()
}

/// Largest absolute entry difference.
pub fn max_dev(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax()
}
