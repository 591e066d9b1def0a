//! Dense linear algebra for the linear part `z' = Az`: matrix exponentials,
//! spectral quantities, and certified decay envelopes.

mod envelope;
mod expm;

pub use envelope::{
    estimate_decay_envelope, estimate_decay_envelope_with, validate_envelope, validate_envelope_with, DecayEnvelope,
    EnvelopeOrigin, ValidationReport, DEFAULT_RATE_MARGIN,
};
pub use expm::mat_exp;

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

/// Largest dimension handled by the dense complex eigensolver.
pub const MAX_EIGEN_DIM: usize = 8;

/// A real square matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix(DMatrix<f64>);

impl SquareMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("matrix entry"));
        }
        Ok(SquareMatrix(m))
    }

    /// Builds a matrix from its rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.len() });
        }
        Self::new(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
    }

    pub fn identity(dim: usize) -> Self {
        SquareMatrix(DMatrix::identity(dim, dim))
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        let dim = d.len();
        Self::new(DMatrix::from_fn(dim, dim, |i, j| if i == j { d[i] } else { 0.0 }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|i| (0..self.dim()).map(|j| self.0[(i, j)]).collect()).collect()
    }

    /// Spectral (largest singular value) norm.
    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(&self.0)
    }

    pub fn eigenvalues(&self) -> Result<Vec<Complex<f64>>> {
        if self.dim() > MAX_EIGEN_DIM {
            return Err(Error::EnvelopeRequired(self.dim()));
        }
        Ok(self.0.complex_eigenvalues().iter().copied().collect())
    }

    /// `max Re(eigenvalue)`.
    pub fn spectral_abscissa(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
    }

    /// `out = self * x`.
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        mul_vec(&self.0, x, out)
    }
}

/// Spectral norm of a general matrix. Uses the closed form for 2x2.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 2 && m.ncols() == 2 {
        let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        let fro2 = a * a + b * b + c * c + d * d;
        let det = a * d - b * c;
        let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
        return ((fro2 + disc) / 2.0).sqrt();
    }
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Logarithmic norm for the spectral norm: largest eigenvalue of `(M + M^T)/2`.
pub fn log_norm(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) fn mul_vec(m: &DMatrix<f64>, x: &[f64], out: &mut [f64]) {
    let n = m.nrows();
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..m.ncols() {
            acc += m[(i, j)] * x[j];
        }
        out[i] = acc;
    }
}

/// `out += m * x`.
pub(crate) fn mul_vec_add(m: &DMatrix<f64>, x: &[f64], out: &mut [f64]) {
    for i in 0..m.nrows() {
        let mut acc = 0.0;
        for j in 0..m.ncols() {
            acc += m[(i, j)] * x[j];
        }
        out[i] += acc;
    }
}

pub(crate) fn vec_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn diff_norm(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}
