use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use crate::analysis::{centralized_reference, kkt_residuals, ReferenceSolution, DEFAULT_REFERENCE_MAX_ITER};
use crate::druid_async::ActivationSampler;
use crate::druid_sync::{Druid, NetworkState};
use crate::error::{DruidError, Result};
use crate::problems::{LocalObjective, Problem, Regularizer};
use crate::topology::{random_connected_graph, Graph};

use super::config::{CostIterate, DataSource, ExperimentConfig, ProblemKind};
use super::data::{parse_libsvm, partition, synthetic_classification, synthetic_regression, Dataset};

pub const TRACE_HEADER: [&str; 7] = ["t", "cost_err", "dist_err", "r_opt", "r_cons", "r_reg", "comm_scalars"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: usize,
    /// `(G(x̄) − G*) / (G(0) − G*)`
    pub cost_err: f64,
    /// `‖x − 1⊗x*‖ / ‖1⊗x*‖`
    pub dist_err: f64,
    pub r_opt: f64,
    pub r_cons: f64,
    pub r_reg: f64,
    pub comm_scalars: u64,
}

pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    match &cfg.data {
        DataSource::Libsvm { path } => parse_libsvm(BufReader::new(File::open(path)?)),
        DataSource::Synthetic { rows, dim, noise, seed } => Ok(match cfg.problem {
            ProblemKind::LogisticL1 => synthetic_classification(*rows, *dim, *noise, *seed),
            ProblemKind::Lasso | ProblemKind::Ridge => synthetic_regression(*rows, *dim, *noise, *seed),
        }),
    }
}

/// One local objective per part of the row partition.
pub fn build_problem(kind: ProblemKind, gamma: f64, ds: &Dataset, parts: &[Vec<usize>]) -> Result<Problem> {
    let d = ds.require_dim()?;
    let binary = match kind {
        ProblemKind::LogisticL1 => Some(ds.binary_labels()?),
        _ => None,
    };
    let locals = parts
        .iter()
        .map(|rows| {
            let a = ds.dense_features(rows, d);
            match &binary {
                Some(y) => LocalObjective::logistic(a, rows.iter().map(|&i| y[i]).collect::<Vec<_>>().into()),
                None => LocalObjective::least_squares(a, ds.labels(rows)),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let reg = match kind {
        ProblemKind::Lasso | ProblemKind::LogisticL1 => Regularizer::L1(gamma),
        ProblemKind::Ridge => Regularizer::SquaredL2(gamma),
    };
    Problem::new(locals, reg)
}

pub fn build_graph(cfg: &ExperimentConfig) -> Result<Graph> {
    match &cfg.graph_file {
        Some(path) => {
            let g = Graph::from_edge_list(&std::fs::read_to_string(path)?)?;
            if g.num_agents() != cfg.agents {
                return Err(DruidError::Configuration(format!(
                    "graph file has {} agents, config asks for {}",
                    g.num_agents(),
                    cfg.agents
                )));
            }
            Ok(g)
        }
        None => random_connected_graph(cfg.agents, cfg.edge_prob, cfg.graph_seed),
    }
}

/// A configured network together with its centralized reference.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub net: Druid,
    pub reference: ReferenceSolution,
    pub sampler: Option<ActivationSampler>,
    pub cost_iterate: CostIterate,
    cost_scale: f64,
    dist_scale: f64,
}

impl Experiment {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let ds = load_dataset(cfg)?;
        let parts = partition(ds.len(), cfg.agents, cfg.partition_seed)?;
        let problem = build_problem(cfg.problem, cfg.gamma, &ds, &parts)?;
        let net = Druid::new(problem, build_graph(cfg)?, cfg.hyper)?;
        let reference = centralized_reference(&net.problem, cfg.reference_tol, DEFAULT_REFERENCE_MAX_ITER)?;
        Self::new(net, reference, cfg.sampler()?, cfg.cost_iterate)
    }

    pub fn new(
        net: Druid,
        reference: ReferenceSolution,
        sampler: Option<ActivationSampler>,
        cost_iterate: CostIterate,
    ) -> Result<Self> {
        let d = net.dim();
        let cost_scale = net.problem.global_cost(&nalgebra::DVector::zeros(d)) - reference.cost_star;
        let dist_scale = (net.num_agents() as f64).sqrt() * reference.x_star.norm();
        if !(cost_scale > 0.0 && dist_scale > 0.0) {
            return Err(DruidError::Configuration(
                "the optimum is the zero initialization; relative errors are undefined".into(),
            ));
        }
        Ok(Experiment { net, reference, sampler, cost_iterate, cost_scale, dist_scale })
    }

    pub fn record(&self, ns: &NetworkState) -> TraceRecord {
        let x = match self.cost_iterate {
            CostIterate::Average => ns.average_x(),
            CostIterate::Agent(i) => ns.agents[i].x.clone(),
        };
        let cost = self.net.problem.global_cost(&x);
        let dist: f64 = ns.agents.iter().map(|a| (&a.x - &self.reference.x_star).norm_squared()).sum();
        let k = kkt_residuals(&self.net, ns);
        TraceRecord {
            t: ns.t,
            cost_err: (cost - self.reference.cost_star) / self.cost_scale,
            dist_err: dist.sqrt() / self.dist_scale,
            r_opt: k.r_opt,
            r_cons: k.r_cons,
            r_reg: k.r_reg,
            comm_scalars: ns.comm_scalars,
        }
    }

    pub fn step(&self, ns: &mut NetworkState) -> Result<()> {
        let t = ns.t;
        let res = match &self.sampler {
            None => self.net.sync_step(ns),
            Some(s) => self.net.async_step(ns, &s.sample(t)),
        };
        res.map_err(|e| DruidError::AtIteration { iteration: t, source: Box::new(e) })
    }

    /// Runs `iterations` steps from zero, recording `t = 0`, every
    /// `cadence`-th iteration and the last one.
    pub fn run(&self, iterations: usize, cadence: usize) -> Result<Vec<TraceRecord>> {
        let mut ns = self.net.init();
        let mut out = vec![self.record(&ns)];
        for _ in 0..iterations {
            self.step(&mut ns)?;
            if ns.t % cadence == 0 || ns.t == iterations {
                out.push(self.record(&ns));
            }
        }
        Ok(out)
    }
}

pub fn write_trace(records: &[TraceRecord], w: impl Write) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    let io = |e: csv::Error| DruidError::Io(e.into());
    csv.write_record(TRACE_HEADER).map_err(io)?;
    for r in records {
        csv.write_record([
            r.t.to_string(),
            format!("{:e}", r.cost_err),
            format!("{:e}", r.dist_err),
            format!("{:e}", r.r_opt),
            format!("{:e}", r.r_cons),
            format!("{:e}", r.r_reg),
            r.comm_scalars.to_string(),
        ])
        .map_err(io)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_trace(text: &str) -> Result<Vec<TraceRecord>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| DruidError::Io(e.into()))?.clone();
    if header.iter().ne(TRACE_HEADER) {
        return Err(DruidError::Parse { line: 1, message: "unexpected trace header".into() });
    }
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| DruidError::Parse { line, message: e.to_string() })?;
        let f = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|_| DruidError::Parse { line, message: format!("bad number `{}`", &rec[i]) })
        };
        let u = |i: usize| -> Result<u64> {
            rec[i].parse().map_err(|_| DruidError::Parse { line, message: format!("bad integer `{}`", &rec[i]) })
        };
        out.push(TraceRecord {
            t: u(0)? as usize,
            cost_err: f(1)?,
            dist_err: f(2)?,
            r_opt: f(3)?,
            r_cons: f(4)?,
            r_reg: f(5)?,
            comm_scalars: u(6)?,
        });
    }
    Ok(out)
}

/// Builds, runs and writes the trace CSV; returns the output path.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let exp = Experiment::from_config(cfg)?;
    let records = exp.run(cfg.iterations, cfg.cadence)?;
    if let Some(dir) = cfg.output.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(&cfg.output)?);
    write_trace(&records, &mut w)?;
    w.flush()?;
    Ok(cfg.output.clone())
}
