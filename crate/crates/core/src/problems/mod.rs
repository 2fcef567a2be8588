//! Convex objective corpus.
//!
//! Every [`Objective`] carries its gradient, its minimum value and the
//! minimal-norm element `x*` of its argmin set, together with a solver for
//! points of the Tikhonov curve `x_ε = argmin g + (ε/2)‖·‖²`.

mod corpus;
mod lse;
mod quadratic;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

pub use corpus::{default_offset, Corpus, CorpusMember, CORPUS_SCHEMA_VERSION};
pub use lse::LogSumExp;
pub use quadratic::QuadraticObjective;

pub type Point = DVector<f64>;

/// Default tolerance on `‖∇g(x) + εx‖` for Tikhonov points.
pub const TIKHONOV_TOL: f64 = 1e-12;
/// Iteration cap of the damped Newton solver.
pub const NEWTON_MAX_ITER: usize = 200;

/// Serializable description of a corpus member.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveDef {
    Quadratic {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        #[serde(default)]
        c: f64,
    },
    LogSumExp {
        rows: Vec<Vec<f64>>,
        offsets: Vec<f64>,
    },
}

/// Shape of `argmin g`.
#[derive(Clone, Debug)]
pub enum ArgminSet {
    UniquePoint(Point),
    /// `base + span(directions)`, directions orthonormal.
    Affine { base: Point, directions: Vec<Point> },
}

impl ArgminSet {
    /// A point of the argmin set: `base + Σ cᵢ dᵢ`.
    pub fn point(&self, coeffs: &[f64]) -> Point {
        match self {
            ArgminSet::UniquePoint(p) => p.clone(),
            ArgminSet::Affine { base, directions } => {
                let mut y = base.clone();
                for (d, c) in directions.iter().zip(coeffs) {
                    y += d * *c;
                }
                y
            }
        }
    }

    pub fn is_unique(&self) -> bool {
        matches!(self, ArgminSet::UniquePoint(_))
    }
}

#[derive(Clone, Debug)]
enum Model {
    Quadratic(QuadraticObjective),
    LogSumExp(LogSumExp),
}

/// A smooth convex objective with known minimum and minimal-norm minimizer.
#[derive(Clone, Debug)]
pub struct Objective {
    id: String,
    def: ObjectiveDef,
    model: Model,
    min_value: f64,
    argmin: ArgminSet,
    x_star: Point,
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err(Error::InvalidInput(format!("{what} must be non-empty")));
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidInput(format!("{what} has ragged rows")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl Objective {
    pub fn from_def(id: impl Into<String>, def: ObjectiveDef) -> Result<Self> {
        let id = id.into();
        match &def {
            ObjectiveDef::Quadratic { a, b, c } => {
                let a = matrix_from_rows(a, "quadratic matrix")?;
                let quad = QuadraticObjective::new(a, DVector::from_column_slice(b), *c)?;
                let x_star = quad.least_norm_solution();
                let directions = quad.null_directions();
                // g* = c − ½⟨b, x*⟩ since A x* = b
                let min_value = quad.constant() - 0.5 * quad.linear().dot(&x_star);
                let argmin = if directions.is_empty() {
                    ArgminSet::UniquePoint(x_star.clone())
                } else {
                    ArgminSet::Affine { base: x_star.clone(), directions }
                };
                Ok(Self { id, def, model: Model::Quadratic(quad), min_value, argmin, x_star })
            }
            ObjectiveDef::LogSumExp { rows, offsets } => {
                let rows = matrix_from_rows(rows, "log-sum-exp rows")?;
                let lse = LogSumExp::new(rows, DVector::from_column_slice(offsets))?;
                let dim = lse.dim();
                let model = Model::LogSumExp(lse);
                // min value and minimizer are computed once, by the same damped
                // Newton solver at ε = 0; this needs a strictly convex member.
                let mut obj = Self {
                    id,
                    def,
                    model,
                    min_value: f64::NAN,
                    argmin: ArgminSet::UniquePoint(DVector::zeros(dim)),
                    x_star: DVector::zeros(dim),
                };
                let x_star = newton_minimize(&obj, 0.0, &DVector::zeros(dim), TIKHONOV_TOL)
                    .map_err(|e| {
                        Error::InvalidInput(format!(
                            "log-sum-exp objective `{}` has no computable unique minimizer: {e}",
                            obj.id
                        ))
                    })?;
                let h_min = obj.hessian(&x_star).symmetric_eigenvalues().min();
                if h_min <= 1e-10 {
                    return Err(Error::InvalidInput(format!(
                        "log-sum-exp objective `{}` is not strictly convex at its minimizer",
                        obj.id
                    )));
                }
                obj.min_value = obj.value(&x_star);
                obj.argmin = ArgminSet::UniquePoint(x_star.clone());
                obj.x_star = x_star;
                Ok(obj)
            }
        }
    }

    /// `g(x) = ½⟨Ax, x⟩ − ⟨b, x⟩ + c`.
    pub fn quadratic(id: impl Into<String>, a: DMatrix<f64>, b: DVector<f64>, c: f64) -> Result<Self> {
        let rows = a.row_iter().map(|r| r.iter().copied().collect()).collect();
        Self::from_def(id, ObjectiveDef::Quadratic { a: rows, b: b.iter().copied().collect(), c })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn def(&self) -> &ObjectiveDef {
        &self.def
    }

    pub fn dim(&self) -> usize {
        match &self.model {
            Model::Quadratic(q) => q.dim(),
            Model::LogSumExp(l) => l.dim(),
        }
    }

    pub fn min_value(&self) -> f64 {
        self.min_value
    }

    pub fn argmin(&self) -> &ArgminSet {
        &self.argmin
    }

    pub fn as_quadratic(&self) -> Option<&QuadraticObjective> {
        match &self.model {
            Model::Quadratic(q) => Some(q),
            Model::LogSumExp(_) => None,
        }
    }

    /// `g(x)` and `∇g(x)` at the same point, with a dimension check.
    pub fn eval(&self, x: &Point) -> Result<(f64, Point)> {
        check_dim(self.dim(), x.len())?;
        Ok(match &self.model {
            Model::Quadratic(q) => (q.value(x), q.gradient(x)),
            Model::LogSumExp(l) => l.value_and_gradient(x),
        })
    }

    /// Unchecked value; panics on dimension mismatch.
    pub fn value(&self, x: &Point) -> f64 {
        match &self.model {
            Model::Quadratic(q) => q.value(x),
            Model::LogSumExp(l) => l.value(x),
        }
    }

    /// Unchecked gradient; panics on dimension mismatch.
    pub fn gradient(&self, x: &Point) -> Point {
        match &self.model {
            Model::Quadratic(q) => q.gradient(x),
            Model::LogSumExp(l) => l.gradient(x),
        }
    }

    pub fn hessian(&self, x: &Point) -> DMatrix<f64> {
        match &self.model {
            Model::Quadratic(q) => q.matrix().clone(),
            Model::LogSumExp(l) => l.hessian(x),
        }
    }

    /// `g(x) − min g`. For quadratics this is evaluated as `½(x−x*)ᵀA(x−x*)`,
    /// which does not cancel catastrophically near the minimum.
    pub fn gap(&self, x: &Point) -> f64 {
        match &self.model {
            Model::Quadratic(q) => {
                let d = x - &self.x_star;
                0.5 * d.dot(&(q.matrix() * &d))
            }
            Model::LogSumExp(l) => l.value(x) - self.min_value,
        }
    }

    /// The projection of the origin onto `argmin g`.
    pub fn minimal_norm_minimizer(&self) -> &Point {
        &self.x_star
    }

    /// Point `x_ε` of the Tikhonov curve with `‖∇g(x_ε) + εx_ε‖ ≤ tol`.
    pub fn tikhonov_point(&self, eps: f64, tol: f64) -> Result<Point> {
        self.tikhonov_point_from(eps, tol, None)
    }

    /// As [`Objective::tikhonov_point`], warm-started from `start` for the
    /// iterative solver.
    pub fn tikhonov_point_from(&self, eps: f64, tol: f64, start: Option<&Point>) -> Result<Point> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidInput(format!("Tikhonov parameter must be positive, got {eps}")));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
        }
        if let Some(s) = start {
            check_dim(self.dim(), s.len())?;
        }
        match &self.model {
            Model::Quadratic(q) => {
                let x = q.regularized_solve(eps).ok_or(Error::NotConverged {
                    iterations: 0,
                    residual: f64::INFINITY,
                })?;
                let residual = (q.gradient(&x) + &x * eps).norm();
                if residual <= tol {
                    Ok(x)
                } else {
                    Err(Error::NotConverged { iterations: 1, residual })
                }
            }
            Model::LogSumExp(_) => {
                let zero = DVector::zeros(self.dim());
                let start = start.unwrap_or(&self.x_star);
                let start = if start.iter().all(|v| v.is_finite()) { start } else { &zero };
                newton_minimize(self, eps, start, tol)
            }
        }
    }
}

/// Levenberg-damped Newton iteration on `g + (ε/2)‖·‖²`.
fn newton_minimize(obj: &Objective, eps: f64, start: &Point, tol: f64) -> Result<Point> {
    let n = obj.dim();
    let f = |x: &Point| obj.value(x) + 0.5 * eps * x.norm_squared();
    let grad = |x: &Point| obj.gradient(x) + x * eps;

    let mut x = start.clone();
    let mut fx = f(&x);
    let mut r = grad(&x);
    let mut mu = 1e-3;
    for _ in 0..NEWTON_MAX_ITER {
        let rnorm = r.norm();
        if rnorm <= tol {
            return Ok(x);
        }
        let h = obj.hessian(&x) + DMatrix::identity(n, n) * (eps + mu);
        let step = match h.cholesky() {
            Some(c) => c.solve(&r),
            None => {
                mu = (mu * 10.0).max(1e-8);
                continue;
            }
        };
        let trial = &x - step;
        let ft = f(&trial);
        let rt = grad(&trial);
        let decreased = ft < fx;
        let flat = ft <= fx + 1e-13 * (1.0 + fx.abs()) && rt.norm() < rnorm;
        if decreased || flat {
            x = trial;
            fx = ft;
            r = rt;
            mu *= 0.1;
            if mu < 1e-14 {
                mu = 0.0;
            }
        } else {
            mu = (mu * 10.0).max(1e-8);
        }
    }
    let residual = r.norm();
    if residual <= tol {
        Ok(x)
    } else {
        Err(Error::NotConverged { iterations: NEWTON_MAX_ITER, residual })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::dvector;

    fn sphere() -> Objective {
        Objective::quadratic("sphere_2", DMatrix::identity(2, 2), DVector::zeros(2), 0.0).unwrap()
    }

    fn line() -> Objective {
        Corpus::builtin().get("quad_line_2").unwrap().clone()
    }

    #[test]
    fn eval_examples() {
        let (v, g) = sphere().eval(&dvector![0.0, 0.0]).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(g, dvector![0.0, 0.0]);

        let (v, g) = sphere().eval(&dvector![3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(v, 12.5, epsilon = 1e-15);
        assert_eq!(g, dvector![3.0, 4.0]);

        let (v, g) = line().eval(&dvector![5.0, 3.0]).unwrap();
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g, dvector![0.0, 2.0], epsilon = 1e-15);
    }

    #[test]
    fn eval_rejects_wrong_dimension() {
        let err = sphere().eval(&dvector![1.0, 2.0, 3.0]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, actual: 3 }));
    }

    #[test]
    fn minimal_norm_minimizer_examples() {
        assert_eq!(sphere().minimal_norm_minimizer(), &dvector![0.0, 0.0]);
        assert_abs_diff_eq!(line().minimal_norm_minimizer(), &dvector![0.0, 1.0], epsilon = 1e-15);
        let degenerate = Objective::quadratic(
            "diag01",
            DMatrix::from_diagonal(&dvector![0.0, 1.0]),
            dvector![0.0, 1.0],
            0.0,
        )
        .unwrap();
        assert_abs_diff_eq!(degenerate.minimal_norm_minimizer(), &dvector![0.0, 1.0], epsilon = 1e-15);
        assert!(!degenerate.argmin().is_unique());
    }

    #[test]
    fn tikhonov_point_examples() {
        let x = line().tikhonov_point(1.0, 1e-12).unwrap();
        assert_abs_diff_eq!(x, dvector![0.0, 0.5], epsilon = 1e-15);
        for eps in [1e-3, 0.5, 7.0] {
            assert_abs_diff_eq!(sphere().tikhonov_point(eps, 1e-12).unwrap(), dvector![0.0, 0.0]);
        }
        let mut last = 0.0;
        for eps in [1.0, 0.1, 0.01] {
            let x = line().tikhonov_point(eps, 1e-12).unwrap();
            assert_abs_diff_eq!(x, dvector![0.0, 1.0 / (1.0 + eps)], epsilon = 1e-14);
            assert!(x.norm() > last);
            last = x.norm();
        }
    }

    #[test]
    fn tikhonov_point_rejects_nonpositive_eps() {
        assert!(matches!(line().tikhonov_point(0.0, 1e-12), Err(Error::InvalidInput(_))));
        assert!(matches!(line().tikhonov_point(-1.0, 1e-12), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn tikhonov_point_reports_unreachable_tolerance() {
        let lse = Corpus::builtin().get("lse_5").unwrap().clone();
        match lse.tikhonov_point(1e-3, 1e-300) {
            Err(Error::NotConverged { residual, .. }) => assert!(residual > 0.0),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_b_outside_range() {
        let err = Objective::quadratic(
            "bad",
            DMatrix::from_diagonal(&dvector![0.0, 1.0]),
            dvector![1.0, 1.0],
            0.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn rejects_asymmetric_and_indefinite() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(Objective::quadratic("asym", asym, DVector::zeros(2), 0.0).is_err());
        let indef = DMatrix::from_diagonal(&dvector![1.0, -1.0]);
        assert!(Objective::quadratic("indef", indef, DVector::zeros(2), 0.0).is_err());
    }

    #[test]
    fn gap_matches_value_difference() {
        for obj in Corpus::builtin().members() {
            let x = DVector::from_fn(obj.dim(), |i, _| 0.3 * i as f64 - 0.7);
            let direct = obj.value(&x) - obj.min_value();
            assert_abs_diff_eq!(obj.gap(&x), direct, epsilon = 1e-12 * (1.0 + direct.abs()));
        }
    }
}
