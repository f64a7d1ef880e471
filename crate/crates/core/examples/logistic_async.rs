//! Sparse logistic regression with randomly activated agents. Lower
//! activation probabilities trade iterations for communication.

use druid_core::harness::{DataSource, Experiment, ExperimentConfig, Mode, ProblemKind};
use druid_core::Scheme;

fn main() -> anyhow::Result<()> {
    let mut cfg = ExperimentConfig {
        problem: ProblemKind::LogisticL1,
        data: DataSource::Synthetic { rows: 300, dim: 8, noise: 1.0, seed: 1 },
        ..Default::default()
    };
    cfg.hyper.scheme = Scheme::Newton;
    let big_m = Experiment::from_config(&cfg)?.net.problem.smoothness()?.big_m_f;
    cfg.hyper.epsilon = 0.6 * big_m;
    for p in [1.0, 0.5, 0.2] {
        cfg.mode = Mode::Async { p: Some(p), count: None, seed: 7 };
        let exp = Experiment::from_config(&cfg)?;
        let last = *exp.run(1500, 1500)?.last().unwrap();
        println!(
            "p = {p:.1}: dist_err {:.3e}, cost_err {:.3e}, scalars sent {}",
            last.dist_err, last.cost_err, last.comm_scalars
        );
    }
    Ok(())
}
