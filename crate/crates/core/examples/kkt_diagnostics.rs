//! KKT residuals along a run, the optimal dual pair, and the per-step
//! primal error against its bound.

use druid_core::analysis::{
    centralized_reference, default_tau, error_term, kkt_residuals, project_dual, DEFAULT_REFERENCE_MAX_ITER,
};
use druid_core::harness::{build_problem, partition, synthetic_classification, ProblemKind};
use druid_core::topology::random_connected_graph;
use druid_core::{Druid, Hyperparams, Scheme};

fn main() -> anyhow::Result<()> {
    let ds = synthetic_classification(150, 4, 1.0, 2);
    let problem = build_problem(ProblemKind::LogisticL1, 0.01, &ds, &partition(ds.len(), 5, 2)?)?;
    let sm = problem.smoothness()?;
    let hp = Hyperparams { scheme: Scheme::Newton, epsilon: 0.6 * sm.big_m_f, ..Default::default() };
    let net = Druid::new(problem, random_connected_graph(5, 0.6, 2)?, hp)?;

    let r = centralized_reference(&net.problem, 1e-12, DEFAULT_REFERENCE_MAX_ITER)?;
    let dual = project_dual(&r.x_star, &net, 1e-8)?;
    println!("x* = {:.4?}", r.x_star.as_slice());
    println!("λ* = {:.4?}", dual.lambda.as_slice());

    let tau = default_tau(&net.hp, sm.big_m_f, sm.l_f);
    let mut ns = net.init();
    for t in 1..=300 {
        let before = ns.clone();
        net.sync_step(&mut ns)?;
        let rep = error_term(&net, &before, &ns)?;
        if t % 50 == 0 {
            let k = kkt_residuals(&net, &ns);
            println!(
                "t = {t:>3}: r_opt {:.2e} r_cons {:.2e} r_reg {:.2e}  ‖e‖ {:.2e} ≤ τ‖Δx‖ {:.2e}: {}",
                k.r_opt,
                k.r_cons,
                k.r_reg,
                rep.norm_e,
                tau * rep.step_norm,
                rep.bound_satisfied
            );
        }
    }
    Ok(())
}
