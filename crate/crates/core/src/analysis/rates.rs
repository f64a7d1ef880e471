use nalgebra::{DMatrix, DVector};

use crate::curvature::{CurvatureModel, Hyperparams, Scheme};
use crate::druid_sync::{Druid, NetworkState};
use crate::error::{DruidError, Result};
use crate::topology::{build_matrices, spectral_constants, symmetric_eigenvalues, SpectralConstants};

/// Largest dimension for which BFGS blocks are inverted to reconstruct `J`.
pub const BFGS_RECONSTRUCTION_CAP: usize = 64;
/// Slack added to the error bound.
pub const ERROR_BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// `e = ∇F(x^t) − ∇F(x^{t+1}) + J^t (x^{t+1} − x^t)`, one entry per agent.
    pub e: Vec<DVector<f64>>,
    pub norm_e: f64,
    pub step_norm: f64,
    pub tau: f64,
    pub bound_satisfied: bool,
}

fn bfgs_hessian(model: &CurvatureModel, shift: f64) -> Result<DMatrix<f64>> {
    match model {
        CurvatureModel::Bfgs(st) => {
            let mut h = st
                .effective_inverse()
                .try_inverse()
                .ok_or_else(|| DruidError::Numerical("singular BFGS estimate".into()))?;
            for k in 0..h.nrows() {
                h[(k, k)] -= shift;
            }
            Ok(h)
        }
        _ => Err(DruidError::UnsupportedDiagnostic("expected a BFGS curvature model".into())),
    }
}

fn spectral_norm(a: &DMatrix<f64>) -> Result<f64> {
    let sym = (a + a.transpose()) * 0.5;
    Ok(symmetric_eigenvalues(&sym)?.amax())
}

/// Error of the one-step primal update between two consecutive states.
/// `before` must hold the curvature used to produce `after`, as it does
/// when the two bracket a single `sync_step` or `async_step`.
pub fn error_term(net: &Druid, before: &NetworkState, after: &NetworkState) -> Result<ErrorReport> {
    let d = net.dim();
    let sm = net.problem.smoothness()?;
    if net.hp.scheme == Scheme::Bfgs && d > BFGS_RECONSTRUCTION_CAP {
        return Err(DruidError::UnsupportedDiagnostic(format!(
            "BFGS reconstruction capped at d = {BFGS_RECONSTRUCTION_CAP}"
        )));
    }
    let mut e = Vec::with_capacity(net.num_agents());
    let mut step_sq = 0.0;
    let mut bfgs_tau: f64 = 0.0;
    for (i, (a0, a1)) in before.agents.iter().zip(&after.agents).enumerate() {
        let obj = &net.problem.locals[i];
        let dx = &a1.x - &a0.x;
        step_sq += dx.norm_squared();
        let mut ei = obj.gradient(&a0.x) - obj.gradient(&a1.x);
        match net.hp.scheme {
            Scheme::Gradient => {}
            Scheme::Newton => ei += obj.hessian(&a0.x) * &dx,
            Scheme::Bfgs => {
                let j0 = bfgs_hessian(&a0.curvature.model, a0.curvature.shift)?;
                let j1 = bfgs_hessian(&a1.curvature.model, a1.curvature.shift)?;
                ei += &j0 * &dx;
                bfgs_tau = bfgs_tau.max(spectral_norm(&(j0 - j1))?);
            }
        }
        e.push(ei);
    }
    let step_norm = step_sq.sqrt();
    let tau = match net.hp.scheme {
        Scheme::Gradient => sm.big_m_f,
        Scheme::Newton => (2.0 * sm.big_m_f).min(0.5 * sm.l_f * step_norm),
        Scheme::Bfgs => bfgs_tau,
    };
    let norm_e = e.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt();
    Ok(ErrorReport { bound_satisfied: norm_e <= tau * step_norm + ERROR_BOUND_SLACK, e, norm_e, step_norm, tau })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremConditions {
    /// `ε > M_f / 2`
    pub epsilon_above_half_mf: bool,
    /// `ε > c_max² (m_f + M_f) / (2 m_f M_f)`
    pub epsilon_above_cmax: bool,
    /// `μ_z = 2 μ_θ`
    pub mu_ratio: bool,
    /// `μ_z ε < ψ²`, evaluated for BFGS only.
    pub psi_bound: Option<bool>,
}

impl TheoremConditions {
    /// Conditions of the sublinear result.
    pub fn sublinear(&self) -> bool {
        self.epsilon_above_half_mf && self.psi_bound.unwrap_or(true)
    }

    /// Conditions of the linear result.
    pub fn linear(&self) -> bool {
        self.sublinear() && self.epsilon_above_cmax && self.mu_ratio
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateConstants {
    pub scheme: Scheme,
    pub m_bar: f64,
    pub rho: f64,
    pub m_f: f64,
    pub big_m_f: f64,
    pub kappa: f64,
    pub tau: f64,
    pub c_max: f64,
    /// `∞` when `τ = 0`.
    pub zeta: f64,
    /// `None` when `m_f = 0` or the admissible interval for `ζ` is empty.
    pub eta: Option<f64>,
    pub eta_exact: Option<f64>,
    pub spectral: SpectralConstants,
    pub conditions: TheoremConditions,
}

impl RateConstants {
    pub fn require_eta(&self) -> Result<f64> {
        if self.m_f <= 0.0 {
            return Err(DruidError::InapplicableTheorem("η needs strongly convex local objectives".into()));
        }
        self.eta.ok_or_else(|| {
            DruidError::InapplicableTheorem("ε/τ² does not exceed (m_f+M_f)/(2m_fM_f); no admissible ζ".into())
        })
    }

    pub fn contraction_factor(&self) -> Result<f64> {
        Ok(1.0 / (1.0 + self.require_eta()?))
    }
}

/// Error-bound input used when none is given: the worst case per scheme.
pub fn default_tau(hp: &Hyperparams, m_f_big: f64, l_f: f64) -> f64 {
    match hp.scheme {
        Scheme::Gradient => m_f_big,
        Scheme::Newton if l_f == 0.0 => 0.0,
        Scheme::Newton => 2.0 * m_f_big,
        Scheme::Bfgs => 2.0 * hp.psi,
    }
}

/// Contraction constants of the selected scheme. `tau` and `zeta` default
/// to the scheme's worst-case error bound and the midpoint of the
/// admissible interval for `ζ`.
pub fn rate_constants(net: &Druid, tau: Option<f64>, zeta: Option<f64>) -> Result<RateConstants> {
    let hp = &net.hp;
    let sm = net.problem.smoothness()?;
    let (m_f, big_m) = (sm.m_f, sm.big_m_f);
    let sc = spectral_constants(&build_matrices(&net.graph), hp.designated)?;
    let (eps, mu_t, mu_z) = (hp.epsilon, hp.mu_theta, hp.mu_z);

    let base = mu_z * sc.d_max as f64 + eps + mu_t;
    let m_bar = match hp.scheme {
        Scheme::Gradient => base,
        Scheme::Newton => base + big_m,
        Scheme::Bfgs => hp.psi,
    };
    let rho = (2.0 * eps * mu_t / (m_bar * m_bar)).max(sc.sigma_max_ls) + 2.0;
    let c_max = match hp.scheme {
        Scheme::Bfgs => 2.0 * big_m.max(hp.psi),
        _ => 2.0 * big_m,
    };
    let tau = tau.unwrap_or_else(|| default_tau(hp, big_m, sm.l_f));
    if !(tau >= 0.0) {
        return Err(DruidError::InvalidParameter(format!("τ = {tau} must be nonnegative")));
    }

    let strongly_convex = m_f > 0.0;
    let harmonic = if strongly_convex { 2.0 * m_f * big_m / (m_f + big_m) } else { 0.0 };
    let conditions = TheoremConditions {
        epsilon_above_half_mf: eps > 0.5 * big_m,
        epsilon_above_cmax: strongly_convex && eps > c_max * c_max / harmonic,
        mu_ratio: (mu_z - 2.0 * mu_t).abs() <= 1e-12 * mu_z,
        psi_bound: (hp.scheme == Scheme::Bfgs).then(|| mu_z * eps < hp.psi * hp.psi),
    };

    let lu = sc.sigma_max_lu;
    let sp = sc.sigma_min_plus_cct;
    let t2 = 0.5;
    let t3 = 0.4 * mu_t * sp / (m_f + big_m);
    let t5 = sp / (5.0 * lu.max(1.0));
    let (zeta, eta, eta_exact) = if strongly_convex {
        let lo = 1.0 / harmonic;
        let hi = if tau == 0.0 { f64::INFINITY } else { eps / (tau * tau) };
        let zeta = match zeta {
            Some(z) if z > lo && z < hi => z,
            Some(z) => {
                return Err(DruidError::InvalidParameter(format!("ζ = {z} outside ({lo}, {hi})")));
            }
            None if hi.is_infinite() => f64::INFINITY,
            None => 0.5 * (lo + hi),
        };
        let eta = (hi > lo).then(|| {
            let t1 = (harmonic - 1.0 / zeta) / (eps + mu_t * (lu + 2.0));
            let t4 = if tau == 0.0 {
                mu_t * sp / (5.0 * eps)
            } else {
                mu_t * sp * (eps - zeta * tau * tau) / (5.0 * (tau * tau + eps * eps))
            };
            t1.min(t2).min(t3).min(t4).min(t5)
        });
        let t1_exact = harmonic / (mu_t * (lu + 2.0));
        (zeta, eta, Some(t1_exact.min(t2).min(t3).min(t5)))
    } else {
        (f64::NAN, None, None)
    };

    Ok(RateConstants {
        scheme: hp.scheme,
        m_bar,
        rho,
        m_f,
        big_m_f: big_m,
        kappa: if strongly_convex { big_m / m_f } else { f64::INFINITY },
        tau,
        c_max,
        zeta,
        eta,
        eta_exact,
        spectral: sc,
        conditions,
    })
}
