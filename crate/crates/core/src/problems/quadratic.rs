use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

/// `g(x) = ½⟨Ax, x⟩ − ⟨b, x⟩ + c` with `A` symmetric positive semidefinite
/// and `b` in the range of `A`.
#[derive(Clone, Debug)]
pub struct QuadraticObjective {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: f64,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    zero_tol: f64,
}

const SYMMETRY_TOL: f64 = 1e-14;

impl QuadraticObjective {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: f64) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(Error::InvalidInput(format!(
                "quadratic matrix must be square and non-empty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        check_dim(a.nrows(), b.len())?;
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) || !c.is_finite() {
            return Err(Error::InvalidInput("quadratic coefficients must be finite".into()));
        }
        let asym = (&a - a.transpose()).amax();
        if asym > SYMMETRY_TOL {
            return Err(Error::InvalidInput(format!(
                "quadratic matrix is not symmetric (max |A - A^T| = {asym:e})"
            )));
        }
        let eig = a.clone().symmetric_eigen();
        let lambda_max = eig.eigenvalues.amax();
        let zero_tol = 1e-12 * lambda_max.max(1.0) * a.nrows() as f64;
        if let Some(neg) = eig.eigenvalues.iter().find(|&&l| l < -zero_tol) {
            return Err(Error::InvalidInput(format!(
                "quadratic matrix is not positive semidefinite (eigenvalue {neg:e})"
            )));
        }
        let quad = Self {
            a,
            b,
            c,
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
            zero_tol,
        };
        let xs = quad.least_norm_solution();
        let res = (&quad.a * &xs - &quad.b).norm();
        if res > 1e-10 * (1.0 + quad.b.norm()) {
            return Err(Error::InvalidInput(format!(
                "b is not in the range of A (least-squares residual {res:e}); argmin would be empty"
            )));
        }
        Ok(quad)
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn constant(&self) -> f64 {
        self.c
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.a * x)) - self.b.dot(x) + self.c
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x - &self.b
    }

    pub fn largest_eigenvalue(&self) -> f64 {
        self.eigenvalues.max()
    }

    /// Pseudoinverse solution of `Ax = b` through the eigendecomposition.
    pub fn least_norm_solution(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim());
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            if lambda > self.zero_tol {
                let u = self.eigenvectors.column(k);
                x += u * (u.dot(&self.b) / lambda);
            }
        }
        x
    }

    /// Orthonormal basis of ker A, i.e. the directions spanning argmin g.
    pub fn null_directions(&self) -> Vec<DVector<f64>> {
        self.eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &l)| l <= self.zero_tol)
            .map(|(k, _)| self.eigenvectors.column(k).into_owned())
            .collect()
    }

    /// Solves `(A + εI)x = b`.
    pub(crate) fn regularized_solve(&self, eps: f64) -> Option<DVector<f64>> {
        let n = self.dim();
        let shifted = &self.a + DMatrix::identity(n, n) * eps;
        let chol = shifted.clone().cholesky()?;
        let mut x = chol.solve(&self.b);
        // one round of iterative refinement
        let r = &self.b - &shifted * &x;
        x += chol.solve(&r);
        Some(x)
    }
}
