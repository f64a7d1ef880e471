use nalgebra::DVector;

use crate::error::{DruidError, Result};
use crate::problems::Problem;

pub const DEFAULT_REFERENCE_TOL: f64 = 1e-12;
pub const DEFAULT_REFERENCE_MAX_ITER: usize = 500_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub x_star: DVector<f64>,
    pub cost_star: f64,
    /// Fixed-point residual `‖x − prox_{g/L}(x − ∇F̂(x)/L)‖` at `x_star`.
    pub residual: f64,
    pub iterations: usize,
}

fn prox_grad_map(problem: &Problem, lip: f64, y: &DVector<f64>) -> Result<DVector<f64>> {
    let v = y - problem.smooth_gradient(y) / lip;
    problem.regularizer.prox(lip, &v)
}

/// Minimizes `Σ f_i + g` by accelerated proximal gradient with step `1/L`
/// and gradient-based adaptive restart.
pub fn centralized_reference(problem: &Problem, tol: f64, max_iter: usize) -> Result<ReferenceSolution> {
    if !(tol > 0.0) {
        return Err(DruidError::InvalidParameter(format!("reference tolerance {tol} must be positive")));
    }
    let lip = problem.centralized_lipschitz()?;
    if !(lip > 0.0) {
        return Err(DruidError::InvalidParameter("smooth part has zero curvature".into()));
    }
    let mut x = DVector::zeros(problem.dim());
    let mut y = x.clone();
    let mut k = 1.0_f64;
    let mut residual = f64::INFINITY;
    for it in 0..max_iter {
        let px = prox_grad_map(problem, lip, &x)?;
        residual = (&x - &px).norm();
        if residual <= tol {
            return Ok(ReferenceSolution { cost_star: problem.global_cost(&x), x_star: x, residual, iterations: it });
        }
        let next = prox_grad_map(problem, lip, &y)?;
        if (&y - &next).dot(&(&next - &x)) > 0.0 {
            // Momentum points uphill: restart from a plain step.
            k = 1.0;
            y = px.clone();
            x = px;
            continue;
        }
        let k_next = 0.5 * (1.0 + (1.0 + 4.0 * k * k).sqrt());
        y = &next + (&next - &x) * ((k - 1.0) / k_next);
        x = next;
        k = k_next;
    }
    Err(DruidError::ConvergenceFailure { iterations: max_iter, residual })
}
