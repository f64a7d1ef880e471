//! Synchronous iteration over a simulated network.
//!
//! Each agent holds `(x_i, φ_i)`, the last received copy of every
//! neighbor's `x_j`, and its curvature model. The designated agent also
//! holds `(θ, λ)`. One iteration: curvature refresh, local direction solve
//! and primal step for every agent against the current buffers, one
//! broadcast round, dual updates, then the BFGS pair update.

use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::curvature::{CurvatureState, Hyperparams, Scheme};
use crate::druid_async::InactiveDual;
use crate::error::{DruidError, Result};
use crate::problems::Problem;
use crate::topology::Graph;

#[derive(Debug, Clone, PartialEq)]
pub struct RegularizerBlock {
    pub theta: DVector<f64>,
    pub lambda: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub x: DVector<f64>,
    pub phi: DVector<f64>,
    /// Last received `x_j` for each neighbor `j`.
    pub buffer: BTreeMap<usize, DVector<f64>>,
    pub curvature: CurvatureState,
    /// `∇f_i(x_i)` at the current iterate.
    pub grad: DVector<f64>,
    pub reg: Option<RegularizerBlock>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub agents: Vec<AgentState>,
    pub t: usize,
    /// Scalars sent over all links so far.
    pub comm_scalars: u64,
}

impl NetworkState {
    fn reg(&self) -> &RegularizerBlock {
        self.agents
            .iter()
            .find_map(|a| a.reg.as_ref())
            .expect("network state without a designated agent")
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.reg().theta
    }

    pub fn lambda(&self) -> &DVector<f64> {
        &self.reg().lambda
    }

    pub fn xs(&self) -> Vec<DVector<f64>> {
        self.agents.iter().map(|a| a.x.clone()).collect()
    }

    pub fn phis(&self) -> Vec<DVector<f64>> {
        self.agents.iter().map(|a| a.phi.clone()).collect()
    }

    pub fn average_x(&self) -> DVector<f64> {
        let d = self.agents[0].x.len();
        let sum = self.agents.iter().fold(DVector::zeros(d), |acc, a| acc + &a.x);
        sum / self.agents.len() as f64
    }
}

/// Problem, graph and hyperparameters of one run.
#[derive(Debug, Clone)]
pub struct Druid {
    pub problem: Problem,
    pub graph: Graph,
    pub hp: Hyperparams,
}

impl Druid {
    pub fn new(problem: Problem, graph: Graph, hp: Hyperparams) -> Result<Self> {
        if problem.num_agents() != graph.num_agents() {
            return Err(DruidError::Configuration(format!(
                "{} local objectives for {} agents",
                problem.num_agents(),
                graph.num_agents()
            )));
        }
        hp.validate(graph.num_agents())?;
        if hp.scheme == Scheme::Bfgs && hp.bfgs_bounding {
            let c = (0..graph.num_agents())
                .map(|i| hp.shift(graph.degree(i), i == hp.designated))
                .fold(0.0, f64::max);
            if hp.psi <= c {
                return Err(DruidError::Configuration(format!(
                    "psi = {} must exceed the largest block shift {c} when bounding is on",
                    hp.psi
                )));
            }
        }
        Ok(Druid { problem, graph, hp })
    }

    pub fn num_agents(&self) -> usize {
        self.graph.num_agents()
    }

    pub fn dim(&self) -> usize {
        self.problem.dim()
    }

    /// Zero initialization of every variable and buffer.
    pub fn init(&self) -> NetworkState {
        let d = self.dim();
        let zero = DVector::zeros(d);
        let agents = (0..self.num_agents())
            .map(|i| {
                let obj = &self.problem.locals[i];
                let grad = obj.gradient(&zero);
                let is_l = i == self.hp.designated;
                AgentState {
                    x: zero.clone(),
                    phi: zero.clone(),
                    buffer: self.graph.neighbors(i).iter().map(|&j| (j, zero.clone())).collect(),
                    curvature: CurvatureState::new(&self.hp, obj, self.graph.degree(i), is_l, &zero, &grad),
                    grad,
                    reg: is_l.then(|| RegularizerBlock { theta: zero.clone(), lambda: zero.clone() }),
                }
            })
            .collect();
        NetworkState { agents, t: 0, comm_scalars: 0 }
    }

    /// Gradient of the augmented Lagrangian with respect to `x_i`, read from
    /// agent `i`'s own buffers.
    pub fn local_gradient(&self, i: usize, ns: &NetworkState) -> DVector<f64> {
        let a = &ns.agents[i];
        let mut coupling = DVector::zeros(a.x.len());
        for xj in a.buffer.values() {
            coupling += &a.x - xj;
        }
        let mut h = &a.grad + &a.phi + coupling * (0.5 * self.hp.mu_z);
        if let Some(reg) = &a.reg {
            h += (&a.x - &reg.theta) * self.hp.mu_theta + &reg.lambda;
        }
        h
    }

    /// Next primal iterate of agent `i`. The curvature model must already be
    /// refreshed at the current iterate.
    pub fn primal_update(&self, i: usize, ns: &NetworkState) -> Result<DVector<f64>> {
        let h = self.local_gradient(i, ns);
        let u = ns.agents[i].curvature.solve(&h)?;
        Ok(&ns.agents[i].x - u)
    }

    /// `φ_i` updates for the given agents from their refreshed buffers,
    /// followed by the `(θ, λ)` update if the designated agent is among them.
    pub fn dual_updates(&self, ns: &mut NetworkState, active: &[usize]) -> Result<()> {
        let half_mu = 0.5 * self.hp.mu_z;
        for &i in active {
            let a = &mut ns.agents[i];
            let mut coupling = DVector::zeros(a.x.len());
            for xj in a.buffer.values() {
                coupling += &a.x - xj;
            }
            a.phi += coupling * half_mu;
            if let Some(reg) = &mut a.reg {
                let v = &a.x + &reg.lambda / self.hp.mu_theta;
                reg.theta = self.problem.regularizer.prox(self.hp.mu_theta, &v)?;
                reg.lambda += (&a.x - &reg.theta) * self.hp.mu_theta;
            }
        }
        Ok(())
    }

    /// One iteration restricted to `active` (sorted, distinct agents).
    /// Inactive agents keep `x`, curvature and `(θ, λ)`; their buffers
    /// receive the broadcasts of active neighbors, and `φ` moves only under
    /// [`InactiveDual::EdgeConsistent`].
    pub(crate) fn step_agents(&self, ns: &mut NetworkState, active: &[usize]) -> Result<()> {
        for &i in active {
            let obj = &self.problem.locals[i];
            let a = &mut ns.agents[i];
            a.curvature.refresh(obj, &a.x);
        }
        let next: Vec<DVector<f64>> =
            active.iter().map(|&i| self.primal_update(i, ns)).collect::<Result<_>>()?;
        let d = self.dim() as u64;
        for (&i, x) in active.iter().zip(next) {
            for &j in self.graph.neighbors(i) {
                ns.agents[j].buffer.insert(i, x.clone());
            }
            ns.agents[i].x = x;
            ns.comm_scalars += self.graph.degree(i) as u64 * d;
        }
        self.dual_updates(ns, active)?;
        if self.hp.inactive_dual == InactiveDual::EdgeConsistent && active.len() < self.num_agents() {
            let mut is_active = vec![false; self.num_agents()];
            for &i in active {
                is_active[i] = true;
            }
            let half_mu = 0.5 * self.hp.mu_z;
            for &i in active {
                for &j in self.graph.neighbors(i) {
                    if !is_active[j] {
                        let delta = (&ns.agents[j].x - &ns.agents[i].x) * half_mu;
                        ns.agents[j].phi += delta;
                    }
                }
            }
        }
        for &i in active {
            let obj = &self.problem.locals[i];
            let a = &mut ns.agents[i];
            a.grad = obj.gradient(&a.x);
            a.curvature.record_step(&a.x, &a.grad)?;
        }
        ns.t += 1;
        Ok(())
    }

    pub fn sync_step(&self, ns: &mut NetworkState) -> Result<()> {
        let all: Vec<usize> = (0..self.num_agents()).collect();
        self.step_agents(ns, &all)
    }

    pub fn run_sync(&self, ns: &mut NetworkState, iterations: usize) -> Result<()> {
        for _ in 0..iterations {
            self.sync_step(ns)?;
        }
        Ok(())
    }

    /// Every buffered `x_j` equals agent `j`'s current iterate.
    pub fn buffers_consistent(&self, ns: &NetworkState) -> bool {
        ns.agents.iter().all(|a| a.buffer.iter().all(|(&j, xj)| *xj == ns.agents[j].x))
    }
}
