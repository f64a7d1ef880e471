//! Per-agent curvature models for the block-diagonal primal preconditioner
//! `H_ii = J_ii + (μ_z|N_i| + δ_il μ_θ + ε) I` and the local direction solve
//! `H_ii u_i = h_i`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::druid_async::InactiveDual;
use crate::error::{DruidError, Result};
use crate::problems::LocalObjective;

/// Pairs with `qᵀs ≤ BFGS_SKIP_TOL·‖q‖‖s‖` leave the estimate unchanged.
pub const BFGS_SKIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Gradient,
    Newton,
    Bfgs,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Gradient, Scheme::Newton, Scheme::Bfgs];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Gradient => "gradient",
            Scheme::Newton => "newton",
            Scheme::Bfgs => "bfgs",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = DruidError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gradient" => Ok(Scheme::Gradient),
            "newton" => Ok(Scheme::Newton),
            "bfgs" => Ok(Scheme::Bfgs),
            other => Err(DruidError::InvalidParameter(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub mu_z: f64,
    pub mu_theta: f64,
    pub epsilon: f64,
    pub scheme: Scheme,
    /// 0-based index of the agent holding `(θ, λ)`.
    pub designated: usize,
    /// Upper bound on the BFGS Hessian estimate.
    pub psi: f64,
    pub bfgs_bounding: bool,
    pub inactive_dual: InactiveDual,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            mu_z: 1.0,
            mu_theta: 1.0,
            epsilon: 1.0,
            scheme: Scheme::Gradient,
            designated: 0,
            psi: 1e6,
            bfgs_bounding: false,
            inactive_dual: InactiveDual::EdgeConsistent,
        }
    }
}

impl Hyperparams {
    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        for (name, v) in [("mu_z", self.mu_z), ("mu_theta", self.mu_theta), ("epsilon", self.epsilon), ("psi", self.psi)]
        {
            if !(v > 0.0 && v.is_finite()) {
                return Err(DruidError::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        if self.designated >= m {
            return Err(DruidError::InvalidParameter(format!(
                "designated agent {} out of range for {m} agents",
                self.designated
            )));
        }
        Ok(())
    }

    /// Constant diagonal part of agent `i`'s block.
    pub fn shift(&self, degree: usize, is_designated: bool) -> f64 {
        self.mu_z * degree as f64 + if is_designated { self.mu_theta } else { 0.0 } + self.epsilon
    }
}

/// Diagonal value of the gradient-scheme block.
pub fn block_diag_value(hp: &Hyperparams, degree: usize, is_designated: bool) -> f64 {
    hp.shift(degree, is_designated)
}

pub fn newton_block(
    obj: &LocalObjective,
    x: &DVector<f64>,
    hp: &Hyperparams,
    degree: usize,
    is_designated: bool,
) -> DMatrix<f64> {
    let mut h = obj.hessian(x);
    let c = hp.shift(degree, is_designated);
    for k in 0..h.nrows() {
        h[(k, k)] += c;
    }
    h
}

/// Curvature pair `(s, q)` of the local augmented Lagrangian block.
pub fn bfgs_pair(
    x_prev: &DVector<f64>,
    grad_prev: &DVector<f64>,
    x_new: &DVector<f64>,
    grad_new: &DVector<f64>,
    shift: f64,
) -> (DVector<f64>, DVector<f64>) {
    let s = x_new - x_prev;
    let q = grad_new - grad_prev + &s * shift;
    (s, q)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InverseUpdate {
    pub inverse: DMatrix<f64>,
    pub accepted: bool,
}

/// Rank-two BFGS update of an inverse Hessian estimate:
/// `(I − ρ s qᵀ) B (I − ρ q sᵀ) + ρ s sᵀ`, `ρ = 1/qᵀs`.
pub fn bfgs_inverse_update(
    b: &DMatrix<f64>,
    s: &DVector<f64>,
    q: &DVector<f64>,
    skip_tol: f64,
) -> Result<InverseUpdate> {
    if b.iter().chain(s.iter()).chain(q.iter()).any(|v| !v.is_finite()) {
        return Err(DruidError::Numerical("non-finite input to BFGS update".into()));
    }
    let qs = q.dot(s);
    let s_norm = s.norm();
    if s_norm == 0.0 || qs <= skip_tol * q.norm() * s_norm {
        return Ok(InverseUpdate { inverse: b.clone(), accepted: false });
    }
    let rho = 1.0 / qs;
    // Expanded form: B − ρ(s (Bq)ᵀ + (Bq) sᵀ) + (ρ² qᵀBq + ρ) s sᵀ.
    let bq = b * q;
    let qbq = q.dot(&bq);
    let mut next = b - (s * bq.transpose() + &bq * s.transpose()) * rho;
    next += s * s.transpose() * (rho * rho * qbq + rho);
    let sym = (&next + next.transpose()) * 0.5;
    Ok(InverseUpdate { inverse: sym, accepted: true })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsState {
    /// Pure BFGS estimate of the inverse block (without the ψ bound).
    pub inverse: DMatrix<f64>,
    pub x_prev: DVector<f64>,
    pub grad_prev: DVector<f64>,
    pub last_pair: Option<(DVector<f64>, DVector<f64>)>,
    pub last_accepted: bool,
    pub accepted: usize,
    pub skipped: usize,
    /// `1/ψ` when bounding is enabled.
    pub floor: Option<f64>,
}

impl BfgsState {
    /// The inverse actually applied to `h`: the BFGS estimate plus `I/ψ`
    /// when bounding is on.
    pub fn effective_inverse(&self) -> DMatrix<f64> {
        match self.floor {
            None => self.inverse.clone(),
            Some(f) => {
                let mut b = self.inverse.clone();
                for k in 0..b.nrows() {
                    b[(k, k)] += f;
                }
                b
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CurvatureModel {
    Gradient { diag: f64 },
    Newton { block: DMatrix<f64> },
    Bfgs(BfgsState),
}

/// Curvature owned by one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureState {
    pub shift: f64,
    pub model: CurvatureModel,
}

impl CurvatureState {
    /// Initial state at `x0` with local gradient `grad0`. The BFGS estimate
    /// starts at `I / shift`, the exact inverse of the constant block.
    pub fn new(
        hp: &Hyperparams,
        obj: &LocalObjective,
        degree: usize,
        is_designated: bool,
        x0: &DVector<f64>,
        grad0: &DVector<f64>,
    ) -> Self {
        let shift = hp.shift(degree, is_designated);
        let d = x0.len();
        let model = match hp.scheme {
            Scheme::Gradient => CurvatureModel::Gradient { diag: shift },
            Scheme::Newton => CurvatureModel::Newton { block: newton_block(obj, x0, hp, degree, is_designated) },
            Scheme::Bfgs => CurvatureModel::Bfgs(BfgsState {
                inverse: DMatrix::identity(d, d) / shift,
                x_prev: x0.clone(),
                grad_prev: grad0.clone(),
                last_pair: None,
                last_accepted: false,
                accepted: 0,
                skipped: 0,
                floor: hp.bfgs_bounding.then(|| 1.0 / hp.psi),
            }),
        };
        CurvatureState { shift, model }
    }

    /// Recomputes the Newton block at the current iterate; no-op otherwise.
    pub fn refresh(&mut self, obj: &LocalObjective, x: &DVector<f64>) {
        if let CurvatureModel::Newton { block } = &mut self.model {
            *block = obj.hessian(x);
            for k in 0..block.nrows() {
                block[(k, k)] += self.shift;
            }
        }
    }

    /// BFGS update with the pair formed from the completed primal step.
    pub fn record_step(&mut self, x_new: &DVector<f64>, grad_new: &DVector<f64>) -> Result<()> {
        if let CurvatureModel::Bfgs(st) = &mut self.model {
            let (s, q) = bfgs_pair(&st.x_prev, &st.grad_prev, x_new, grad_new, self.shift);
            let up = bfgs_inverse_update(&st.inverse, &s, &q, BFGS_SKIP_TOL)?;
            st.inverse = up.inverse;
            st.last_accepted = up.accepted;
            if up.accepted {
                st.accepted += 1;
            } else {
                st.skipped += 1;
            }
            st.last_pair = Some((s, q));
            st.x_prev.copy_from(x_new);
            st.grad_prev.copy_from(grad_new);
        }
        Ok(())
    }

    /// Dense `H_ii` currently in use. For BFGS this inverts the estimate.
    pub fn block(&self) -> Result<DMatrix<f64>> {
        match &self.model {
            CurvatureModel::Gradient { diag } => Ok(DMatrix::identity(1, 1) * *diag),
            CurvatureModel::Newton { block } => Ok(block.clone()),
            CurvatureModel::Bfgs(st) => st
                .effective_inverse()
                .try_inverse()
                .ok_or_else(|| DruidError::Numerical("singular BFGS estimate".into())),
        }
    }

    pub fn solve(&self, h: &DVector<f64>) -> Result<DVector<f64>> {
        solve_direction(self, h)
    }
}

/// Solves `H_ii u = h` with the agent's curvature model.
pub fn solve_direction(curvature: &CurvatureState, h: &DVector<f64>) -> Result<DVector<f64>> {
    match &curvature.model {
        CurvatureModel::Gradient { diag } => Ok(h / *diag),
        CurvatureModel::Newton { block } => {
            let chol = block
                .clone()
                .cholesky()
                .ok_or_else(|| DruidError::Numerical("Newton block is not positive definite".into()))?;
            let u = chol.solve(h);
            let resid = (block * &u - h).norm();
            if resid > 1e-10 * h.norm() + f64::MIN_POSITIVE {
                return Err(DruidError::Numerical(format!("Newton solve residual {resid:e}")));
            }
            Ok(u)
        }
        CurvatureModel::Bfgs(st) => Ok(match st.floor {
            None => &st.inverse * h,
            Some(f) => &st.inverse * h + h * f,
        }),
    }
}
