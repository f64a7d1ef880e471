use nalgebra::{DMatrix, DVector};

use crate::druid_sync::{Druid, NetworkState};
use crate::error::{DruidError, Result};
use crate::topology::{build_matrices, Graph};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    /// `‖∇F(x) + φ + Sλ‖`
    pub r_opt: f64,
    /// `‖E_s x‖`
    pub r_cons: f64,
    /// `‖x_l − θ‖`
    pub r_reg: f64,
}

pub fn kkt_residuals(net: &Druid, ns: &NetworkState) -> KktResiduals {
    let l = net.hp.designated;
    let mut opt = 0.0;
    for (i, a) in ns.agents.iter().enumerate() {
        let mut r = net.problem.locals[i].gradient(&a.x) + &a.phi;
        if i == l {
            r += ns.lambda();
        }
        opt += r.norm_squared();
    }
    let cons: f64 = net
        .graph
        .edges()
        .iter()
        .map(|&(i, j)| (&ns.agents[i].x - &ns.agents[j].x).norm_squared())
        .sum();
    KktResiduals {
        r_opt: opt.sqrt(),
        r_cons: cons.sqrt(),
        r_reg: (&ns.agents[l].x - ns.theta()).norm(),
    }
}

/// Optimal primal-dual tuple at consensus.
#[derive(Debug, Clone, PartialEq)]
pub struct DualReference {
    pub x_star: DVector<f64>,
    /// Edge duals, one row per edge.
    pub alpha: DMatrix<f64>,
    pub lambda: DVector<f64>,
}

impl DualReference {
    pub fn theta(&self) -> &DVector<f64> {
        &self.x_star
    }

    /// `φ* = E_sᵀ α*`, one row per agent.
    pub fn phi(&self, graph: &Graph) -> DMatrix<f64> {
        edge_divergence(graph, &self.alpha)
    }
}

/// `E_sᵀ α` for edge values stored row-wise.
pub(crate) fn edge_divergence(graph: &Graph, alpha: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(graph.num_agents(), alpha.ncols());
    for (k, &(i, j)) in graph.edges().iter().enumerate() {
        let row = alpha.row(k).into_owned();
        let mut ri = out.row_mut(i);
        ri += &row;
        let mut rj = out.row_mut(j);
        rj -= &row;
    }
    out
}

/// Least-norm dual pair in the column space of `C = [E_s; Sᵀ]` solving
/// `∇F(x*) + E_sᵀα* + Sλ* = 0`, checked against the tolerance together
/// with `λ* ∈ ∂g(x*)`.
pub fn project_dual(x_star: &DVector<f64>, net: &Druid, tol: f64) -> Result<DualReference> {
    let graph = &net.graph;
    let m = graph.num_agents();
    let d = x_star.len();
    let l = net.hp.designated;
    let tm = build_matrices(graph);
    let mut ctc = tm.signed_laplacian.clone();
    ctc[(l, l)] += 1.0;
    let chol = ctc
        .cholesky()
        .ok_or_else(|| DruidError::Numerical("L_s + e_l e_lᵀ is not positive definite".into()))?;
    let mut grads = DMatrix::zeros(m, d);
    for (i, obj) in net.problem.locals.iter().enumerate() {
        grads.set_row(i, &obj.gradient(x_star).transpose());
    }
    let scale = 1.0 + grads.norm();
    let r = chol.solve(&(-&grads));
    let alpha = &tm.signed_incidence * &r;
    let lambda = r.row(l).transpose();

    let mut resid = grads + edge_divergence(graph, &alpha);
    {
        let mut rl = resid.row_mut(l);
        rl += lambda.transpose();
    }
    let kkt = resid.norm();
    if kkt > tol * scale {
        return Err(DruidError::InconsistentReference(format!("stationarity residual {kkt:e}")));
    }
    if !net.problem.regularizer.contains_subgradient(x_star, &lambda, tol) {
        return Err(DruidError::InconsistentReference("λ* is not a subgradient of g at x*".into()));
    }
    Ok(DualReference { x_star: x_star.clone(), alpha, lambda })
}

impl Druid {
    /// Network state sitting at the given optimal tuple: `x_i = θ = x*`,
    /// `φ = E_sᵀα*`, `λ = λ*`, buffers and gradients consistent.
    pub fn state_at(&self, dual: &DualReference) -> NetworkState {
        let mut ns = self.init();
        let phi = dual.phi(&self.graph);
        for (i, a) in ns.agents.iter_mut().enumerate() {
            let obj = &self.problem.locals[i];
            a.x = dual.x_star.clone();
            a.phi = phi.row(i).transpose();
            a.grad = obj.gradient(&a.x);
            for b in a.buffer.values_mut() {
                *b = dual.x_star.clone();
            }
            a.curvature = crate::curvature::CurvatureState::new(
                &self.hp,
                obj,
                self.graph.degree(i),
                i == self.hp.designated,
                &a.x,
                &a.grad,
            );
            if let Some(reg) = &mut a.reg {
                reg.theta = dual.x_star.clone();
                reg.lambda = dual.lambda.clone();
            }
        }
        ns
    }
}
