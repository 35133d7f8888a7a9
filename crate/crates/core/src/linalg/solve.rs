use super::matrix::RealMatrix;
use crate::error::{shape, Error, Result};

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    // row-major lower triangle, full storage
    l: Vec<f64>,
}

impl Cholesky {
    /// Factors `a`. Pivots below `rel_tol · max diag` are treated as singular.
    pub fn factor(a: &RealMatrix, rel_tol: f64) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(shape(format!("Cholesky needs a square matrix, got {:?}", a.shape())));
        }
        let max_diag = (0..n).map(|i| a.get(i, i)).fold(0.0, f64::max);
        if max_diag <= 0.0 {
            return Err(Error::Singular);
        }
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if d <= rel_tol * max_diag {
                return Err(Error::Singular);
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(Self { n, l })
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    /// Solves `A X = B` column by column.
    pub fn solve(&self, b: &RealMatrix) -> Result<RealMatrix> {
        if b.rows() != self.n {
            return Err(shape(format!("rhs has {} rows, system has {}", b.rows(), self.n)));
        }
        let mut out = b.clone();
        for j in 0..out.cols() {
            self.solve_in_place(out.col_mut(j));
        }
        Ok(out)
    }
}
