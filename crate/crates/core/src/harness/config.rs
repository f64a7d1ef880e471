use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::DEFAULT_REFERENCE_TOL;
use crate::curvature::{Hyperparams, Scheme};
use crate::druid_async::{ActivationMode, ActivationSampler};
use crate::error::{DruidError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// Least squares with `γ‖x‖₁`.
    Lasso,
    /// Logistic loss with `γ‖x‖₁`.
    LogisticL1,
    /// Least squares with `γ‖x‖²`.
    Ridge,
}

impl ProblemKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemKind::Lasso => "lasso",
            ProblemKind::LogisticL1 => "logistic_l1",
            ProblemKind::Ridge => "ridge",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    Libsvm { path: PathBuf },
    Synthetic { rows: usize, dim: usize, noise: f64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mode {
    Sync,
    /// Exactly one of `p` (independent activation probability) or `count`
    /// (uniform subset size) must be set.
    Async {
        #[serde(default)]
        p: Option<f64>,
        #[serde(default)]
        count: Option<usize>,
        #[serde(default)]
        seed: u64,
    },
}

/// Which iterate enters the relative cost error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostIterate {
    Average,
    Agent(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub gamma: f64,
    pub data: DataSource,
    pub agents: usize,
    pub edge_prob: f64,
    pub graph_seed: u64,
    /// Edge-list file used instead of a random graph.
    pub graph_file: Option<PathBuf>,
    pub partition_seed: u64,
    pub hyper: Hyperparams,
    pub mode: Mode,
    pub iterations: usize,
    pub cadence: usize,
    pub output: PathBuf,
    pub reference_tol: f64,
    pub cost_iterate: CostIterate,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problem: ProblemKind::Lasso,
            gamma: 0.01,
            data: DataSource::Synthetic { rows: 200, dim: 10, noise: 0.1, seed: 0 },
            agents: 10,
            edge_prob: 0.5,
            graph_seed: 0,
            graph_file: None,
            partition_seed: 0,
            // ε above half the largest local smoothness constant of the
            // default synthetic data (about 19).
            hyper: Hyperparams { epsilon: 12.0, ..Hyperparams::default() },
            mode: Mode::Sync,
            iterations: 500,
            cadence: 10,
            output: PathBuf::from("trace.csv"),
            reference_tol: DEFAULT_REFERENCE_TOL,
            cost_iterate: CostIterate::Average,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| DruidError::Configuration(e.to_string()))
    }

    /// Loads a TOML file. Relative data and graph paths are taken relative
    /// to the file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_toml_str(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let DataSource::Libsvm { path: p } = &mut cfg.data {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(g) = &mut cfg.graph_file {
            if g.is_relative() {
                *g = base.join(&*g);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(DruidError::Configuration(msg));
        if self.iterations < 1 {
            return bad("iterations must be at least 1".into());
        }
        if self.cadence < 1 {
            return bad("cadence must be at least 1".into());
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma = {} must be >= 0", self.gamma));
        }
        if self.agents < 1 {
            return bad("need at least one agent".into());
        }
        if self.graph_file.is_none() && !(self.edge_prob > 0.0 && self.edge_prob <= 1.0) {
            return bad(format!("edge_prob = {} outside (0, 1]", self.edge_prob));
        }
        if !(self.reference_tol > 0.0) {
            return bad(format!("reference_tol = {} must be positive", self.reference_tol));
        }
        if let CostIterate::Agent(i) = self.cost_iterate {
            if i >= self.agents {
                return bad(format!("cost iterate agent {i} out of range"));
            }
        }
        self.hyper.validate(self.agents)?;
        self.sampler()?;
        Ok(())
    }

    pub fn sampler(&self) -> Result<Option<ActivationSampler>> {
        match &self.mode {
            Mode::Sync => Ok(None),
            Mode::Async { p: Some(p), count: None, seed } => ActivationSampler::uniform(*p, self.agents, *seed).map(Some),
            Mode::Async { p: None, count: Some(k), seed } => {
                ActivationSampler::new(ActivationMode::FixedCount(*k), self.agents, *seed).map(Some)
            }
            Mode::Async { .. } => {
                Err(DruidError::Configuration("async mode needs exactly one of `p` or `count`".into()))
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.scheme {
            self.hyper.scheme = s;
        }
        if let Some(v) = o.mu_z {
            self.hyper.mu_z = v;
        }
        if let Some(v) = o.mu_theta {
            self.hyper.mu_theta = v;
        }
        if let Some(v) = o.epsilon {
            self.hyper.epsilon = v;
        }
        if let Some(v) = o.agents {
            self.agents = v;
        }
        if let Some(v) = o.edge_prob {
            self.edge_prob = v;
        }
        if let Some(v) = o.iters {
            self.iterations = v;
        }
        if let Some(seed) = o.seed {
            self.graph_seed = seed;
            self.partition_seed = seed;
            if let Mode::Async { seed: s, .. } = &mut self.mode {
                *s = seed;
            }
        }
        if let Some(p) = o.async_p {
            let seed = match self.mode {
                Mode::Async { seed, .. } => seed,
                Mode::Sync => self.graph_seed,
            };
            self.mode = Mode::Async { p: Some(p), count: None, seed };
        }
        if let Some(out) = &o.output {
            self.output = out.clone();
        }
    }
}

/// Command-line overrides of a loaded configuration.
#[derive(Debug, Clone, Default, PartialEq, clap::Args)]
pub struct Overrides {
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: Option<Scheme>,
    #[arg(long)]
    pub mu_z: Option<f64>,
    #[arg(long)]
    pub mu_theta: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub agents: Option<usize>,
    #[arg(long)]
    pub edge_prob: Option<f64>,
    #[arg(long)]
    pub iters: Option<usize>,
    /// Sets the graph, partition and activation seeds.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Switches to asynchronous mode with this activation probability.
    #[arg(long)]
    pub async_p: Option<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_scheme(s: &str) -> std::result::Result<Scheme, String> {
    s.parse().map_err(|e: DruidError| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig {
            mode: Mode::Async { p: Some(0.5), count: None, seed: 3 },
            cost_iterate: CostIterate::Agent(2),
            ..Default::default()
        };
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_file_uses_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            "problem = \"ridge\"\ngamma = 0.5\n[hyper]\nmu_z = 2.0\nmu_theta = 1.0\nepsilon = 3.0\nscheme = \"newton\"\n[data]\nsource = \"libsvm\"\npath = \"x.svm\"\n",
        )
        .unwrap();
        assert_eq!(cfg.problem, ProblemKind::Ridge);
        assert_eq!(cfg.hyper.scheme, Scheme::Newton);
        assert_eq!(cfg.iterations, 500);
        assert!(matches!(cfg.data, DataSource::Libsvm { .. }));
        assert!(ExperimentConfig::from_toml_str("bogus = 1").is_err());
    }

    #[test]
    fn overrides() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply(&Overrides {
            scheme: Some(Scheme::Bfgs),
            epsilon: Some(4.0),
            iters: Some(7),
            seed: Some(9),
            async_p: Some(0.25),
            output: Some("o.csv".into()),
            ..Default::default()
        });
        assert_eq!(cfg.hyper.scheme, Scheme::Bfgs);
        assert_eq!(cfg.hyper.epsilon, 4.0);
        assert_eq!((cfg.iterations, cfg.graph_seed, cfg.partition_seed), (7, 9, 9));
        assert_eq!(cfg.mode, Mode::Async { p: Some(0.25), count: None, seed: 9 });
        assert_eq!(cfg.output, PathBuf::from("o.csv"));
    }

    #[test]
    fn validation() {
        let ok = ExperimentConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            ExperimentConfig { iterations: 0, ..ok.clone() },
            ExperimentConfig { cadence: 0, ..ok.clone() },
            ExperimentConfig { edge_prob: 0.0, ..ok.clone() },
            ExperimentConfig { mode: Mode::Async { p: None, count: None, seed: 0 }, ..ok.clone() },
            ExperimentConfig { mode: Mode::Async { p: Some(0.5), count: Some(2), seed: 0 }, ..ok.clone() },
            ExperimentConfig { cost_iterate: CostIterate::Agent(10), ..ok.clone() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }
}
