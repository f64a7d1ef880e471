use nalgebra::{DMatrix, DVector};

use crate::curvature::{CurvatureState, Scheme};
use crate::druid_sync::{Druid, NetworkState};
use crate::error::{DruidError, Result};
use crate::topology::{build_matrices, Graph};

use super::kkt::{edge_divergence, DualReference};

/// Iterate of the undeflated three-block method: every edge carries its
/// own `z`, `α` (source side) and `β` (destination side). Blocks are
/// stored row-wise, one row per agent or edge.
#[derive(Debug, Clone, PartialEq)]
pub struct FullAdmmState {
    pub x: DMatrix<f64>,
    pub z: DMatrix<f64>,
    pub alpha: DMatrix<f64>,
    pub beta: DMatrix<f64>,
    pub theta: DVector<f64>,
    pub lambda: DVector<f64>,
    pub curvature: Vec<CurvatureState>,
    pub grads: Vec<DVector<f64>>,
    pub t: usize,
    /// `A = [A_s; A_d]`
    a: DMatrix<f64>,
    /// `B = [I; I]`
    b: DMatrix<f64>,
}

impl FullAdmmState {
    pub fn zero(net: &Druid) -> Self {
        let (m, n, d) = (net.num_agents(), net.graph.num_edges(), net.dim());
        let tm = build_matrices(&net.graph);
        let mut a = DMatrix::zeros(2 * n, m);
        a.rows_mut(0, n).copy_from(&tm.source);
        a.rows_mut(n, n).copy_from(&tm.destination);
        let mut b = DMatrix::zeros(2 * n, n);
        b.rows_mut(0, n).fill_with_identity();
        b.rows_mut(n, n).fill_with_identity();
        let zero = DVector::zeros(d);
        let (curvature, grads) = (0..m)
            .map(|i| {
                let obj = &net.problem.locals[i];
                let g = obj.gradient(&zero);
                let c = CurvatureState::new(&net.hp, obj, net.graph.degree(i), i == net.hp.designated, &zero, &g);
                (c, g)
            })
            .unzip();
        FullAdmmState {
            x: DMatrix::zeros(m, d),
            z: DMatrix::zeros(n, d),
            alpha: DMatrix::zeros(n, d),
            beta: DMatrix::zeros(n, d),
            theta: zero.clone(),
            lambda: zero,
            curvature,
            grads,
            t: 0,
            a,
            b,
        }
    }

    fn y(&self) -> DMatrix<f64> {
        let n = self.alpha.nrows();
        let mut y = DMatrix::zeros(2 * n, self.alpha.ncols());
        y.rows_mut(0, n).copy_from(&self.alpha);
        y.rows_mut(n, n).copy_from(&self.beta);
        y
    }

    /// `φ = E_sᵀ α`
    pub fn phi(&self, graph: &Graph) -> DMatrix<f64> {
        edge_divergence(graph, &self.alpha)
    }

    /// `max ‖α + β‖` entry.
    pub fn dual_sum_defect(&self) -> f64 {
        (&self.alpha + &self.beta).amax()
    }

    /// `max |z − ½E_u x|` entry.
    pub fn manifold_defect(&self) -> f64 {
        let n = self.z.nrows();
        let eu = self.a.rows(0, n) + self.a.rows(n, n);
        (&self.z - eu * &self.x * 0.5).amax()
    }
}

/// One iteration of the three-block method with the approximated primal
/// step, exact `θ` and `z` minimizations, and dual ascent on `y` and `λ`.
pub fn full_admm_oracle_step(st: &mut FullAdmmState, net: &Druid) -> Result<()> {
    let hp = &net.hp;
    let l = hp.designated;
    let m = st.x.nrows();

    let mut grad_l = DMatrix::zeros(m, st.x.ncols());
    for i in 0..m {
        grad_l.set_row(i, &st.grads[i].transpose());
    }
    let resid = &st.a * &st.x - &st.b * &st.z;
    grad_l += st.a.transpose() * (st.y() + resid * hp.mu_z);
    let xl = st.x.row(l).transpose();
    let coupling = &st.lambda + (&xl - &st.theta) * hp.mu_theta;
    {
        let mut row = grad_l.row_mut(l);
        row += coupling.transpose();
    }

    for i in 0..m {
        let obj = &net.problem.locals[i];
        let xi = st.x.row(i).transpose();
        st.curvature[i].refresh(obj, &xi);
        let u = st.curvature[i].solve(&grad_l.row(i).transpose())?;
        st.x.set_row(i, &(xi - u).transpose());
    }

    let xl = st.x.row(l).transpose();
    st.theta = net.problem.regularizer.prox(hp.mu_theta, &(&xl + &st.lambda / hp.mu_theta))?;

    let btb = st.b.transpose() * &st.b;
    let rhs = st.b.transpose() * (st.y() / hp.mu_z + &st.a * &st.x);
    st.z = btb
        .cholesky()
        .ok_or_else(|| DruidError::Numerical("BᵀB is singular".into()))?
        .solve(&rhs);

    let n = st.z.nrows();
    let dy = (&st.a * &st.x - &st.b * &st.z) * hp.mu_z;
    st.alpha += dy.rows(0, n);
    st.beta += dy.rows(n, n);
    st.lambda += (&xl - &st.theta) * hp.mu_theta;

    for i in 0..m {
        let xi = st.x.row(i).transpose();
        st.grads[i] = net.problem.locals[i].gradient(&xi);
        st.curvature[i].record_step(&xi, &st.grads[i])?;
    }
    st.t += 1;
    Ok(())
}

/// Edge duals reconstructed alongside a reduced run:
/// `α_k += (μ_z/2)(x_i − x_j)` for edge `k = (i, j)` after every
/// synchronous step.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaTracker {
    pub alpha: DMatrix<f64>,
}

impl AlphaTracker {
    pub fn new(net: &Druid) -> Self {
        AlphaTracker { alpha: DMatrix::zeros(net.graph.num_edges(), net.dim()) }
    }

    pub fn update(&mut self, net: &Druid, ns: &NetworkState) {
        let half = 0.5 * net.hp.mu_z;
        for (k, &(i, j)) in net.graph.edges().iter().enumerate() {
            let diff = (&ns.agents[i].x - &ns.agents[j].x) * half;
            let mut row = self.alpha.row_mut(k);
            row += diff.transpose();
        }
    }
}

/// `v_α = [x; z; α; θ; λ]` with blocks stored row-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct VAlpha {
    pub x: DMatrix<f64>,
    pub z: DMatrix<f64>,
    pub alpha: DMatrix<f64>,
    pub theta: DVector<f64>,
    pub lambda: DVector<f64>,
}

fn half_unsigned(graph: &Graph, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut z = DMatrix::zeros(graph.num_edges(), x.ncols());
    for (k, &(i, j)) in graph.edges().iter().enumerate() {
        z.set_row(k, &((x.row(i) + x.row(j)) * 0.5));
    }
    z
}

impl VAlpha {
    pub fn from_admm(st: &FullAdmmState) -> Self {
        VAlpha {
            x: st.x.clone(),
            z: st.z.clone(),
            alpha: st.alpha.clone(),
            theta: st.theta.clone(),
            lambda: st.lambda.clone(),
        }
    }

    /// Needs the edge duals, which a reduced run only carries when tracked.
    pub fn from_network(net: &Druid, ns: &NetworkState, tracker: Option<&AlphaTracker>) -> Result<Self> {
        let tracker = tracker
            .ok_or_else(|| DruidError::UnsupportedDiagnostic("edge duals are not tracked in this run".into()))?;
        let d = net.dim();
        let mut x = DMatrix::zeros(net.num_agents(), d);
        for (i, a) in ns.agents.iter().enumerate() {
            x.set_row(i, &a.x.transpose());
        }
        Ok(VAlpha {
            z: half_unsigned(&net.graph, &x),
            x,
            alpha: tracker.alpha.clone(),
            theta: ns.theta().clone(),
            lambda: ns.lambda().clone(),
        })
    }

    pub fn optimal(graph: &Graph, dual: &DualReference) -> Self {
        let m = graph.num_agents();
        let x = DMatrix::from_fn(m, dual.x_star.len(), |_, k| dual.x_star[k]);
        VAlpha {
            z: half_unsigned(graph, &x),
            x,
            alpha: dual.alpha.clone(),
            theta: dual.x_star.clone(),
            lambda: dual.lambda.clone(),
        }
    }
}

/// Scalar weights of a block-diagonal Lyapunov metric on `v_α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovWeights {
    pub x: f64,
    pub z: f64,
    pub alpha: f64,
    pub theta: f64,
    pub lambda: f64,
}

impl LyapunovWeights {
    pub const IDENTITY: LyapunovWeights = LyapunovWeights { x: 1.0, z: 1.0, alpha: 1.0, theta: 1.0, lambda: 1.0 };

    /// `diag[ε, 2μ_z, 2/μ_z, μ_θ, 1/μ_θ]`
    pub fn h(hp: &crate::curvature::Hyperparams) -> Self {
        LyapunovWeights {
            x: hp.epsilon,
            z: 2.0 * hp.mu_z,
            alpha: 2.0 / hp.mu_z,
            theta: hp.mu_theta,
            lambda: 1.0 / hp.mu_theta,
        }
    }

    /// The time-varying weight with `J + εI` in the `x` block; constant
    /// (and equal to `h`) only for the gradient scheme.
    pub fn g(hp: &crate::curvature::Hyperparams) -> Result<Self> {
        match hp.scheme {
            Scheme::Gradient => Ok(Self::h(hp)),
            s => Err(DruidError::UnsupportedDiagnostic(format!(
                "the {} scheme has an iteration-dependent x weight",
                s.name()
            ))),
        }
    }
}

/// `‖v − v*‖²` in the weighted metric.
pub fn lyapunov_norm(v: &VAlpha, star: &VAlpha, w: &LyapunovWeights) -> f64 {
    w.x * (&v.x - &star.x).norm_squared()
        + w.z * (&v.z - &star.z).norm_squared()
        + w.alpha * (&v.alpha - &star.alpha).norm_squared()
        + w.theta * (&v.theta - &star.theta).norm_squared()
        + w.lambda * (&v.lambda - &star.lambda).norm_squared()
}
