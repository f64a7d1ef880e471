//! Predicted versus observed linear rate on ridge regression.

use druid_core::analysis::{centralized_reference, log_linear_fit, rate_constants, DEFAULT_REFERENCE_MAX_ITER};
use druid_core::harness::{build_problem, partition, synthetic_regression, ProblemKind};
use druid_core::topology::random_connected_graph;
use druid_core::{Druid, Hyperparams, Scheme};

fn main() -> anyhow::Result<()> {
    let ds = synthetic_regression(200, 5, 0.1, 3);
    let problem = build_problem(ProblemKind::Ridge, 0.1, &ds, &partition(ds.len(), 8, 3)?)?;
    let graph = random_connected_graph(8, 0.5, 3)?;
    let sm = problem.smoothness()?;
    println!("m_f = {:.3}, M_f = {:.3}", sm.m_f, sm.big_m_f);

    for scheme in [Scheme::Gradient, Scheme::Newton] {
        let probe = Druid::new(problem.clone(), graph.clone(), Hyperparams { scheme, ..Default::default() })?;
        let rc0 = rate_constants(&probe, None, None)?;
        // Smallest ε that clears the linear-rate threshold, with margin.
        let eps = 1.05 * rc0.c_max.powi(2) * (sm.m_f + sm.big_m_f) / (2.0 * sm.m_f * sm.big_m_f);
        let hp = Hyperparams { scheme, mu_z: 2.0, mu_theta: 1.0, epsilon: eps.max(0.6 * sm.big_m_f), ..Default::default() };
        let net = Druid::new(problem.clone(), graph.clone(), hp)?;
        let rc = rate_constants(&net, None, None)?;
        let r = centralized_reference(&net.problem, 1e-13, DEFAULT_REFERENCE_MAX_ITER)?;

        let mut ns = net.init();
        let (mut ts, mut errs) = (Vec::new(), Vec::new());
        for t in 1..=3000 {
            net.sync_step(&mut ns)?;
            let e: f64 = ns.agents.iter().map(|a| (&a.x - &r.x_star).norm_squared()).sum::<f64>().sqrt();
            if e < 1e-9 {
                break;
            }
            ts.push(t as f64);
            errs.push(e);
        }
        let fit = log_linear_fit(&ts, &errs);
        println!(
            "{scheme:?}: ε = {:.2}, linear conditions {}, bound factor {:?}, observed factor {:.5} (R² {:.4})",
            net.hp.epsilon,
            rc.conditions.linear(),
            rc.contraction_factor().ok(),
            fit.slope.exp(),
            fit.r_squared
        );
    }
    Ok(())
}
