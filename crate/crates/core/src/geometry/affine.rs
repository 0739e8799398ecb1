//! Invertible affine maps `x -> A x + b` shared by branches and cylinders.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

pub const DET_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub matrix: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl AffineMap {
    pub fn new(matrix: DMatrix<f64>, offset: DVector<f64>) -> Result<AffineMap> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() != offset.len() {
            return Err(Error::DimensionMismatch {
                left: matrix.nrows(),
                right: offset.len(),
            });
        }
        Ok(AffineMap { matrix, offset })
    }

    pub fn identity(dim: usize) -> AffineMap {
        AffineMap {
            matrix: DMatrix::identity(dim, dim),
            offset: DVector::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn det(&self) -> f64 {
        self.matrix.determinant()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(x);
        (&self.matrix * v + &self.offset).iter().copied().collect()
    }

    /// `self ∘ other`: first `other`, then `self`.
    pub fn compose(&self, other: &AffineMap) -> AffineMap {
        AffineMap {
            matrix: &self.matrix * &other.matrix,
            offset: &self.matrix * &other.offset + &self.offset,
        }
    }

    pub fn inverse(&self) -> Result<AffineMap> {
        let det = self.det();
        if det.abs() <= DET_TOL {
            return Err(Error::SingularMatrix { det });
        }
        let inv = self
            .matrix
            .clone()
            .try_inverse()
            .ok_or(Error::SingularMatrix { det })?;
        let offset = -(&inv * &self.offset);
        Ok(AffineMap { matrix: inv, offset })
    }

    /// Smallest singular value (the paper-style expansion factor of the map).
    pub fn smallest_singular_value(&self) -> f64 {
        self.matrix
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn largest_singular_value(&self) -> f64 {
        self.matrix
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }

    /// Smallest modulus among the (complex) eigenvalues.
    pub fn min_eigenvalue_modulus(&self) -> f64 {
        self.matrix
            .clone()
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.dim();
        for i in 0..d {
            for j in 0..d {
                if i != j && self.matrix[(i, j)] != 0.0 {
                    return false;
                }
            }
        }
        true
    }
}
