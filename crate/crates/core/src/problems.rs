//! Local smooth losses `f_i` and the regularizer `g`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{DruidError, Result};
use crate::topology::symmetric_eigenvalues;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    LeastSquares,
    Logistic,
}

/// One agent's data and loss. Rows of `features` are the data points.
///
/// Least squares: `½ Σ (aᵀx − b)²`.
/// Logistic: `Σ ln(1 + e^{−wᵀx}) + (1 − y) wᵀx` with labels `y ∈ {0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalObjective {
    kind: LossKind,
    features: DMatrix<f64>,
    targets: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalEvaluation {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessConstants {
    /// Strong convexity modulus.
    pub m_f: f64,
    /// Gradient Lipschitz constant.
    pub big_m_f: f64,
    /// Hessian Lipschitz constant.
    pub l_f: f64,
}

impl SmoothnessConstants {
    /// Uniform constants over a family of local objectives.
    pub fn combine(items: impl IntoIterator<Item = SmoothnessConstants>) -> SmoothnessConstants {
        items.into_iter().fold(
            SmoothnessConstants { m_f: f64::INFINITY, big_m_f: 0.0, l_f: 0.0 },
            |acc, c| SmoothnessConstants {
                m_f: acc.m_f.min(c.m_f),
                big_m_f: acc.big_m_f.max(c.big_m_f),
                l_f: acc.l_f.max(c.l_f),
            },
        )
    }

    pub fn condition_number(&self) -> f64 {
        self.big_m_f / self.m_f
    }
}

impl LocalObjective {
    pub fn least_squares(features: DMatrix<f64>, targets: DVector<f64>) -> Result<Self> {
        Self::checked(LossKind::LeastSquares, features, targets)
    }

    pub fn logistic(features: DMatrix<f64>, labels: DVector<f64>) -> Result<Self> {
        if labels.iter().any(|&y| y != 0.0 && y != 1.0) {
            return Err(DruidError::Configuration("logistic labels must be 0 or 1".into()));
        }
        Self::checked(LossKind::Logistic, features, labels)
    }

    /// An objective without data (identically zero).
    pub fn empty(kind: LossKind, dim: usize) -> Self {
        LocalObjective { kind, features: DMatrix::zeros(0, dim), targets: DVector::zeros(0) }
    }

    fn checked(kind: LossKind, features: DMatrix<f64>, targets: DVector<f64>) -> Result<Self> {
        if features.nrows() != targets.len() {
            return Err(DruidError::Configuration(format!(
                "{} feature rows but {} targets",
                features.nrows(),
                targets.len()
            )));
        }
        if features.ncols() == 0 {
            return Err(DruidError::Configuration("feature dimension must be positive".into()));
        }
        if features.iter().chain(targets.iter()).any(|v| !v.is_finite()) {
            return Err(DruidError::Configuration("non-finite data value".into()));
        }
        Ok(LocalObjective { kind, features, targets })
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn num_points(&self) -> usize {
        self.features.nrows()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn targets(&self) -> &DVector<f64> {
        &self.targets
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        let z = &self.features * x;
        match self.kind {
            LossKind::LeastSquares => 0.5 * (z - &self.targets).norm_squared(),
            LossKind::Logistic => z
                .iter()
                .zip(self.targets.iter())
                .map(|(&z, &y)| softplus(-z) + (1.0 - y) * z)
                .sum(),
        }
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let z = &self.features * x;
        let residual = match self.kind {
            LossKind::LeastSquares => z - &self.targets,
            LossKind::Logistic => z.zip_map(&self.targets, |z, y| sigmoid(z) - y),
        };
        self.features.tr_mul(&residual)
    }

    pub fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        match self.kind {
            LossKind::LeastSquares => self.features.tr_mul(&self.features),
            LossKind::Logistic => {
                let z = &self.features * x;
                let weights = z.map(|z| {
                    let s = sigmoid(z);
                    s * (1.0 - s)
                });
                let mut scaled = self.features.clone();
                for (mut row, w) in scaled.row_iter_mut().zip(weights.iter()) {
                    row *= *w;
                }
                self.features.tr_mul(&scaled)
            }
        }
    }

    pub fn evaluate(&self, x: &DVector<f64>) -> LocalEvaluation {
        LocalEvaluation { value: self.value(x), gradient: self.gradient(x), hessian: self.hessian(x) }
    }

    pub fn smoothness_constants(&self) -> Result<SmoothnessConstants> {
        if self.num_points() == 0 {
            return Ok(SmoothnessConstants { m_f: 0.0, big_m_f: 0.0, l_f: 0.0 });
        }
        let gram = self.features.tr_mul(&self.features);
        let ev = symmetric_eigenvalues(&gram)?;
        Ok(match self.kind {
            LossKind::LeastSquares => {
                SmoothnessConstants { m_f: ev.min().max(0.0), big_m_f: ev.max(), l_f: 0.0 }
            }
            LossKind::Logistic => {
                // |σ''| ≤ 1/(6√3) bounds the third derivative of softplus.
                let cubes: f64 = self.features.row_iter().map(|r| r.norm().powi(3)).sum();
                SmoothnessConstants {
                    m_f: 0.0,
                    big_m_f: 0.25 * ev.max(),
                    l_f: cubes / (6.0 * 3f64.sqrt()),
                }
            }
        })
    }
}

pub fn evaluate_local(obj: &LocalObjective, x: &DVector<f64>) -> LocalEvaluation {
    obj.evaluate(x)
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "gamma", rename_all = "snake_case")]
pub enum Regularizer {
    Zero,
    /// `γ‖x‖₁`
    L1(f64),
    /// `γ‖x‖²`
    SquaredL2(f64),
}

impl Regularizer {
    pub fn weight(&self) -> f64 {
        match *self {
            Regularizer::Zero => 0.0,
            Regularizer::L1(g) | Regularizer::SquaredL2(g) => g,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.weight();
        if !(g >= 0.0 && g.is_finite()) {
            return Err(DruidError::InvalidParameter(format!("regularizer weight {g} must be >= 0")));
        }
        Ok(())
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match *self {
            Regularizer::Zero => 0.0,
            Regularizer::L1(g) => g * x.lp_norm(1),
            Regularizer::SquaredL2(g) => g * x.norm_squared(),
        }
    }

    /// `argmin_θ g(θ) + (μ/2)‖θ − v‖²`.
    pub fn prox(&self, mu: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
        if !(mu > 0.0) {
            return Err(DruidError::InvalidParameter(format!("prox parameter {mu} must be > 0")));
        }
        Ok(match *self {
            Regularizer::Zero => v.clone(),
            Regularizer::L1(g) => {
                let t = g / mu;
                v.map(|vk| vk.signum() * (vk.abs() - t).max(0.0))
            }
            Regularizer::SquaredL2(g) => v * (mu / (mu + 2.0 * g)),
        })
    }

    /// Whether `λ ∈ ∂g(θ)` up to `tol`.
    pub fn contains_subgradient(&self, theta: &DVector<f64>, lambda: &DVector<f64>, tol: f64) -> bool {
        match *self {
            Regularizer::Zero => lambda.norm() <= tol,
            Regularizer::L1(g) => theta.iter().zip(lambda.iter()).all(|(&t, &l)| {
                if t != 0.0 {
                    (l - g * t.signum()).abs() <= tol
                } else {
                    l.abs() <= g + tol
                }
            }),
            Regularizer::SquaredL2(g) => (lambda - theta * (2.0 * g)).norm() <= tol,
        }
    }
}

pub fn prox(g: &Regularizer, mu_theta: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
    g.prox(mu_theta, v)
}

pub fn subgradient_membership(g: &Regularizer, theta: &DVector<f64>, lambda: &DVector<f64>, tol: f64) -> bool {
    g.contains_subgradient(theta, lambda, tol)
}

/// The network problem: one local objective per agent plus the regularizer.
#[derive(Debug, Clone)]
pub struct Problem {
    pub locals: Vec<LocalObjective>,
    pub regularizer: Regularizer,
}

impl Problem {
    pub fn new(locals: Vec<LocalObjective>, regularizer: Regularizer) -> Result<Self> {
        let d = locals
            .first()
            .map(LocalObjective::dim)
            .ok_or_else(|| DruidError::Configuration("problem has no agents".into()))?;
        if let Some(bad) = locals.iter().position(|o| o.dim() != d) {
            return Err(DruidError::Configuration(format!(
                "agent {bad} has dimension {} but agent 0 has {d}",
                locals[bad].dim()
            )));
        }
        regularizer.validate()?;
        Ok(Problem { locals, regularizer })
    }

    pub fn dim(&self) -> usize {
        self.locals[0].dim()
    }

    pub fn num_agents(&self) -> usize {
        self.locals.len()
    }

    /// `Σ f_i(x) + g(x)` at a common point.
    pub fn global_cost(&self, x: &DVector<f64>) -> f64 {
        self.smooth_value(x) + self.regularizer.value(x)
    }

    pub fn smooth_value(&self, x: &DVector<f64>) -> f64 {
        self.locals.iter().map(|o| o.value(x)).sum()
    }

    pub fn smooth_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.locals.iter().fold(DVector::zeros(self.dim()), |acc, o| acc + o.gradient(x))
    }

    /// Network-wide smoothness constants (uniform over agents).
    pub fn smoothness(&self) -> Result<SmoothnessConstants> {
        let each: Result<Vec<_>> = self.locals.iter().map(LocalObjective::smoothness_constants).collect();
        Ok(SmoothnessConstants::combine(each?))
    }

    /// Gradient Lipschitz constant of the centralized smooth sum.
    pub fn centralized_lipschitz(&self) -> Result<f64> {
        let d = self.dim();
        let mut gram = DMatrix::zeros(d, d);
        let mut scale: f64 = 0.0;
        for o in &self.locals {
            gram += o.features().tr_mul(o.features());
            scale = scale.max(match o.kind() {
                LossKind::LeastSquares => 1.0,
                LossKind::Logistic => 0.25,
            });
        }
        // Mixed kinds are bounded conservatively by the larger curvature scale.
        Ok(scale * symmetric_eigenvalues(&gram)?.max())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn random_objective(kind: LossKind, rows: usize, d: usize, rng: &mut ChaCha8Rng) -> LocalObjective {
        let a = DMatrix::from_fn(rows, d, |_, _| rng.gen_range(-1.0..1.0));
        match kind {
            LossKind::LeastSquares => {
                LocalObjective::least_squares(a, DVector::from_fn(rows, |_, _| rng.gen_range(-2.0..2.0))).unwrap()
            }
            LossKind::Logistic => {
                LocalObjective::logistic(a, DVector::from_fn(rows, |_, _| rng.gen_range(0..2) as f64)).unwrap()
            }
        }
    }

    #[test]
    fn least_squares_single_point() {
        let obj = LocalObjective::least_squares(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), dv(&[2.0])).unwrap();
        let e = obj.evaluate(&dv(&[0.0, 0.0]));
        assert_eq!(e.value, 2.0);
        assert_eq!(e.gradient, dv(&[-2.0, 0.0]));
        assert_eq!(e.hessian, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn logistic_single_point_at_origin() {
        let obj = LocalObjective::logistic(DMatrix::from_row_slice(1, 1, &[1.0]), dv(&[1.0])).unwrap();
        let e = obj.evaluate(&dv(&[0.0]));
        assert!((e.value - 2f64.ln()).abs() < 1e-15);
        assert!((e.gradient[0] + 0.5).abs() < 1e-15);
        assert!((e.hessian[(0, 0)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn logistic_is_finite_for_huge_margins() {
        let obj =
            LocalObjective::logistic(DMatrix::from_row_slice(2, 1, &[1.0, -1.0]), dv(&[1.0, 0.0])).unwrap();
        for x in [-1e4, -50.0, 50.0, 1e4] {
            let e = obj.evaluate(&dv(&[x]));
            assert!(e.value.is_finite() && e.gradient[0].is_finite() && e.hessian[(0, 0)].is_finite());
        }
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1.0)
    }

    #[test]
    fn derivatives_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let h = 1e-6;
        for kind in [LossKind::LeastSquares, LossKind::Logistic] {
            for _ in 0..100 {
                let obj = random_objective(kind, 6, 3, &mut rng);
                let x = DVector::from_fn(3, |_, _| rng.gen_range(-2.0..2.0));
                let g = obj.gradient(&x);
                let hess = obj.hessian(&x);
                for k in 0..3 {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[k] += h;
                    xm[k] -= h;
                    let fd = (obj.value(&xp) - obj.value(&xm)) / (2.0 * h);
                    assert!(rel_err(g[k], fd) <= 1e-5, "{kind:?} gradient {k}: {} vs {fd}", g[k]);
                    let gd = (obj.gradient(&xp) - obj.gradient(&xm)) / (2.0 * h);
                    for r in 0..3 {
                        assert!(rel_err(hess[(r, k)], gd[r]) <= 1e-5);
                    }
                }
            }
        }
    }

    #[test]
    fn least_squares_hessian_is_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let obj = random_objective(LossKind::LeastSquares, 5, 4, &mut rng);
        assert_eq!(obj.hessian(&DVector::zeros(4)), obj.hessian(&DVector::from_element(4, 3.0)));
    }

    #[test]
    fn smoothness_by_hand() {
        let ls = LocalObjective::least_squares(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]), dv(&[0.0, 0.0]))
            .unwrap();
        let c = ls.smoothness_constants().unwrap();
        assert!((c.m_f - 1.0).abs() < 1e-12 && (c.big_m_f - 4.0).abs() < 1e-12 && c.l_f == 0.0);
        let lg = LocalObjective::logistic(DMatrix::from_row_slice(1, 1, &[2.0]), dv(&[1.0])).unwrap();
        let c = lg.smoothness_constants().unwrap();
        assert_eq!(c.m_f, 0.0);
        assert!((c.big_m_f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reported_smoothness_bounds_gradient_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let obj = random_objective(LossKind::LeastSquares, 8, 3, &mut rng);
        let c = obj.smoothness_constants().unwrap();
        for _ in 0..100 {
            let x = DVector::from_fn(3, |_, _| rng.gen_range(-3.0..3.0));
            let y = DVector::from_fn(3, |_, _| rng.gen_range(-3.0..3.0));
            let ratio = (obj.gradient(&x) - obj.gradient(&y)).norm() / (&x - &y).norm();
            assert!(c.big_m_f * (1.0 + 1e-12) >= ratio);
            assert!(ratio >= c.m_f * (1.0 - 1e-12));
        }
    }

    #[test]
    fn prox_closed_forms() {
        let v = dv(&[1.0, -0.25, 0.0]);
        assert_eq!(Regularizer::L1(1.0).prox(2.0, &v).unwrap(), dv(&[0.5, 0.0, 0.0]));
        assert_eq!(Regularizer::Zero.prox(2.0, &v).unwrap(), v);
        assert_eq!(Regularizer::SquaredL2(1.0).prox(2.0, &dv(&[4.0])).unwrap(), dv(&[2.0]));
        assert!(Regularizer::L1(1.0).prox(0.0, &v).is_err());
        assert!(Regularizer::L1(1.0).prox(-1.0, &v).is_err());
    }

    #[test]
    fn membership_examples() {
        let g = Regularizer::L1(1.0);
        assert!(g.contains_subgradient(&dv(&[2.0, 0.0]), &dv(&[1.0, 0.3]), 1e-9));
        assert!(!g.contains_subgradient(&dv(&[2.0]), &dv(&[0.5]), 1e-9));
        assert!(Regularizer::Zero.contains_subgradient(&dv(&[5.0]), &dv(&[0.0]), 0.0));
        assert!(Regularizer::SquaredL2(0.5).contains_subgradient(&dv(&[3.0]), &dv(&[3.0]), 1e-12));
    }

    #[test]
    fn prox_output_satisfies_optimality() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mu = 1.7;
        for g in [Regularizer::Zero, Regularizer::L1(0.8), Regularizer::SquaredL2(0.6)] {
            for _ in 0..100 {
                let v = DVector::from_fn(4, |_, _| rng.gen_range(-3.0..3.0));
                let theta = g.prox(mu, &v).unwrap();
                let lambda = (&v - &theta) * mu;
                assert!(g.contains_subgradient(&theta, &lambda, 1e-10), "{g:?}");
            }
        }
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let a = LocalObjective::empty(LossKind::LeastSquares, 2);
        let b = LocalObjective::empty(LossKind::LeastSquares, 3);
        assert!(matches!(Problem::new(vec![a, b], Regularizer::Zero), Err(DruidError::Configuration(_))));
        assert!(LocalObjective::logistic(DMatrix::zeros(1, 1), dv(&[0.5])).is_err());
    }
}
