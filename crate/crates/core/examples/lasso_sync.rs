//! Synchronous LASSO on synthetic data with all three primal schemes.

use druid_core::harness::{Experiment, ExperimentConfig};
use druid_core::Scheme;

fn main() -> anyhow::Result<()> {
    let mut cfg = ExperimentConfig::default();
    println!("{:<8} {:>6} {:>12} {:>12}", "scheme", "t", "cost_err", "dist_err");
    for scheme in Scheme::ALL {
        cfg.hyper.scheme = scheme;
        let exp = Experiment::from_config(&cfg)?;
        for r in exp.run(400, 100)? {
            println!("{:<8} {:>6} {:>12.3e} {:>12.3e}", format!("{scheme:?}"), r.t, r.cost_err, r.dist_err);
        }
    }
    Ok(())
}
