//! Runs the experiment described by a TOML file, as the `druid` binary does.
//! Defaults to the bundled LIBSVM sample.

use std::path::PathBuf;

use druid_core::harness::{read_trace, run_experiment, ExperimentConfig};

fn main() -> anyhow::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data/sample.toml"));
    let mut cfg = ExperimentConfig::from_file(&path)?;
    cfg.output = std::env::temp_dir().join("druid_libsvm_trace.csv");
    let out = run_experiment(&cfg)?;
    let trace = read_trace(&std::fs::read_to_string(&out)?)?;
    for r in trace.iter().step_by(5) {
        println!("t = {:>4}: cost_err {:.3e}  r_cons {:.3e}", r.t, r.cost_err, r.r_cons);
    }
    println!("trace written to {}", out.display());
    Ok(())
}
