//! Verification oracles and diagnostics.

mod admm;
mod kkt;
mod reference;
mod rates;

pub use admm::{full_admm_oracle_step, lyapunov_norm, AlphaTracker, FullAdmmState, LyapunovWeights, VAlpha};
pub use kkt::{kkt_residuals, project_dual, DualReference, KktResiduals};
pub use rates::{
    default_tau, error_term, rate_constants, ErrorReport, RateConstants, TheoremConditions,
    BFGS_RECONSTRUCTION_CAP, ERROR_BOUND_SLACK,
};
pub use reference::{centralized_reference, ReferenceSolution, DEFAULT_REFERENCE_MAX_ITER, DEFAULT_REFERENCE_TOL};

/// Ordinary least-squares line through `(x, y)` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    LineFit { slope, intercept: my - slope * mx, r_squared }
}

/// Fit of `ln y` against `t`.
pub fn log_linear_fit(ts: &[f64], ys: &[f64]) -> LineFit {
    let logs: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_fit(ts, &logs)
}

/// Fit of `ln y` against `ln t`.
pub fn log_log_fit(ts: &[f64], ys: &[f64]) -> LineFit {
    let lt: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    log_linear_fit(&lt, ys)
}

/// `(1/T) Σ_{t≤T} y_t` for every prefix.
pub fn running_average(ys: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    ys.iter()
        .enumerate()
        .map(|(k, y)| {
            acc += y;
            acc / (k + 1) as f64
        })
        .collect()
}
