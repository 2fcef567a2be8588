use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `g(x) = log Σᵢ exp(⟨aᵢ, x⟩ + oᵢ)`.
#[derive(Clone, Debug)]
pub struct LogSumExp {
    rows: DMatrix<f64>,
    offsets: DVector<f64>,
}

impl LogSumExp {
    pub fn new(rows: DMatrix<f64>, offsets: DVector<f64>) -> Result<Self> {
        if rows.nrows() == 0 || rows.ncols() == 0 {
            return Err(Error::InvalidInput("log-sum-exp needs at least one row".into()));
        }
        if rows.nrows() != offsets.len() {
            return Err(Error::InvalidInput(format!(
                "log-sum-exp has {} rows but {} offsets",
                rows.nrows(),
                offsets.len()
            )));
        }
        if rows.iter().chain(offsets.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("log-sum-exp coefficients must be finite".into()));
        }
        Ok(Self { rows, offsets })
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn offsets(&self) -> &DVector<f64> {
        &self.offsets
    }

    fn affine(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.rows * x + &self.offsets
    }

    fn softmax(z: &DVector<f64>) -> (f64, DVector<f64>) {
        let zmax = z.max();
        let w = z.map(|v| (v - zmax).exp());
        let s = w.sum();
        (zmax + s.ln(), w / s)
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        Self::softmax(&self.affine(x)).0
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let (_, p) = Self::softmax(&self.affine(x));
        self.rows.tr_mul(&p)
    }

    pub fn value_and_gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let (v, p) = Self::softmax(&self.affine(x));
        (v, self.rows.tr_mul(&p))
    }

    /// `Aᵀ(diag p − p pᵀ)A`, the covariance of the rows under the softmax weights.
    pub fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let (_, p) = Self::softmax(&self.affine(x));
        let mean = self.rows.tr_mul(&p);
        let n = self.dim();
        let mut h = DMatrix::zeros(n, n);
        for (i, row) in self.rows.row_iter().enumerate() {
            let d = row.transpose() - &mean;
            h += &d * d.transpose() * p[i];
        }
        h
    }
}
