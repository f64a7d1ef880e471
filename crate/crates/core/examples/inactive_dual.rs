//! Compares the two rules for inactive neighbours' duals under random
//! activation. Only the edge-consistent rule keeps `Σφ = 0`.

use druid_core::harness::{DataSource, Experiment, ExperimentConfig, Mode};
use druid_core::InactiveDual;
use nalgebra::DVector;

fn main() -> anyhow::Result<()> {
    let mut cfg = ExperimentConfig {
        data: DataSource::Synthetic { rows: 100, dim: 5, noise: 0.1, seed: 5 },
        agents: 8,
        mode: Mode::Async { p: Some(0.5), count: None, seed: 11 },
        ..Default::default()
    };
    for rule in [InactiveDual::EdgeConsistent, InactiveDual::Frozen] {
        cfg.hyper.inactive_dual = rule;
        let exp = Experiment::from_config(&cfg)?;
        let sampler = exp.sampler.clone().unwrap();
        let mut ns = exp.net.init();
        exp.net.run_async(&mut ns, &sampler, 3000)?;
        let sum = ns.phis().iter().fold(DVector::zeros(exp.net.dim()), |acc, p| acc + p);
        let r = exp.record(&ns);
        println!("{rule:?}: ‖Σφ‖ {:.3e}, dist_err {:.3e}", sum.norm(), r.dist_err);
    }
    Ok(())
}
