//! The agent-level iteration tracks the three-block edge formulation it is
//! derived from, to rounding error.

use druid_core::analysis::{full_admm_oracle_step, FullAdmmState};
use druid_core::harness::{build_problem, partition, synthetic_regression, ProblemKind};
use druid_core::topology::random_connected_graph;
use druid_core::{Druid, Hyperparams, Scheme};

fn main() -> anyhow::Result<()> {
    let ds = synthetic_regression(60, 4, 0.1, 9);
    let problem = build_problem(ProblemKind::Lasso, 0.05, &ds, &partition(ds.len(), 6, 9)?)?;
    let eps = problem.smoothness()?.big_m_f;
    for scheme in Scheme::ALL {
        let hp = Hyperparams { scheme, epsilon: eps, ..Default::default() };
        let net = Druid::new(problem.clone(), random_connected_graph(6, 0.5, 9)?, hp)?;
        let mut ns = net.init();
        let mut st = FullAdmmState::zero(&net);
        let mut dev = 0.0f64;
        for _ in 0..200 {
            net.sync_step(&mut ns)?;
            full_admm_oracle_step(&mut st, &net)?;
            let phi = st.phi(&net.graph);
            for (i, a) in ns.agents.iter().enumerate() {
                dev = dev.max((&a.x - st.x.row(i).transpose()).amax());
                dev = dev.max((&a.phi - phi.row(i).transpose()).amax());
            }
        }
        println!(
            "{scheme:?}: max deviation {dev:.2e}, dual sum defect {:.2e}, manifold defect {:.2e}",
            st.dual_sum_defect(),
            st.manifold_defect()
        );
    }
    Ok(())
}
