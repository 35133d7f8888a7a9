//! Thin singular value decomposition by one-sided cyclic Jacobi (Hestenes).
//!
//! Columns of a working copy are rotated pairwise until every pair is
//! numerically orthogonal; the column norms are then the singular values and
//! the accumulated rotations the right singular vectors. Wide inputs are
//! handled through their transpose.

use super::matrix::{axpy, dot, RealMatrix};
use crate::error::Result;

const MAX_SWEEPS: usize = 80;

/// `M = left · diag(singular) · rightᵀ` with `k = min(rows, cols)` columns.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// rows × k, orthonormal columns.
    pub left: RealMatrix,
    /// Nonincreasing, nonnegative.
    pub singular: Vec<f64>,
    /// cols × k, orthonormal columns.
    pub right: RealMatrix,
}

impl SvdResult {
    /// `left · diag(singular) · rightᵀ`, optionally truncated to the leading `rank` triplets.
    pub fn reconstruct(&self, rank: Option<usize>) -> RealMatrix {
        let k = rank.unwrap_or(self.singular.len()).min(self.singular.len());
        let (m, n) = (self.left.rows(), self.right.rows());
        let mut out = RealMatrix::zeros(m, n);
        for i in 0..k {
            let s = self.singular[i];
            if s == 0.0 {
                continue;
            }
            let u = self.left.col(i);
            let v = self.right.col(i);
            for j in 0..n {
                axpy(s * v[j], u, out.col_mut(j));
            }
        }
        out
    }
}

/// Thin SVD of `m`.
pub fn svd(m: &RealMatrix) -> Result<SvdResult> {
    if m.rows() >= m.cols() {
        Ok(tall_svd(m))
    } else {
        let t = tall_svd(&m.transpose());
        Ok(SvdResult { left: t.right, singular: t.singular, right: t.left })
    }
}

fn tall_svd(m: &RealMatrix) -> SvdResult {
    let (rows, n) = m.shape();
    let mut a = m.clone();
    let mut v = RealMatrix::identity(n);
    let eps = f64::EPSILON;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(a.col(p), a.col(p));
                let beta = dot(a.col(q), a.col(q));
                let gamma = dot(a.col(p), a.col(q));
                if gamma == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..n).map(|j| dot(a.col(j), a.col(j)).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // ties keep column order
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let sigma_max = norms[order[0]];
    let cutoff = sigma_max * eps * rows.max(n) as f64;
    let mut singular = Vec::with_capacity(n);
    let mut left = RealMatrix::zeros(rows, n);
    let mut right = RealMatrix::zeros(n, n);
    let mut filled = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        right.col_mut(k).copy_from_slice(v.col(j));
        let s = norms[j];
        if s > cutoff && s > 0.0 {
            singular.push(s);
            for (dst, src) in left.col_mut(k).iter_mut().zip(a.col(j)) {
                *dst = src / s;
            }
            filled.push(k);
        } else {
            singular.push(0.0);
        }
    }
    complete_basis(&mut left, &filled);
    SvdResult { left, singular, right }
}

fn rotate(m: &mut RealMatrix, p: usize, q: usize, c: f64, s: f64) {
    let (cp, cq) = m.col_pair_mut(p, q);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Fills the columns of `m` not listed in `filled` with unit vectors
/// orthogonal to everything already present.
pub(crate) fn complete_basis(m: &mut RealMatrix, filled: &[usize]) {
    let rows = m.rows();
    let mut done: Vec<usize> = filled.to_vec();
    let mut candidate = 0usize;
    for k in 0..m.cols() {
        if filled.contains(&k) {
            continue;
        }
        loop {
            assert!(candidate < rows, "cannot complete an orthonormal basis");
            let mut e = vec![0.0; rows];
            e[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for &j in &done {
                    let proj = dot(m.col(j), &e);
                    axpy(-proj, m.col(j), &mut e);
                }
            }
            let norm = dot(&e, &e).sqrt();
            if norm > 0.5 {
                for (dst, src) in m.col_mut(k).iter_mut().zip(&e) {
                    *dst = src / norm;
                }
                done.push(k);
                break;
            }
        }
    }
}

/// Orthonormalizes the columns of `m` by modified Gram-Schmidt with one
/// reorthogonalization pass. Fails if the columns are numerically dependent.
pub fn orthonormalize_columns(m: &RealMatrix) -> Result<RealMatrix> {
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m.cols());
    for col in m.columns() {
        let mut w = col.to_vec();
        for _ in 0..2 {
            for q in &basis {
                let proj = dot(q, &w);
                axpy(-proj, q, &mut w);
            }
        }
        let norm = dot(&w, &w).sqrt();
        if norm <= 1e-12 * scale {
            return Err(crate::Error::Singular);
        }
        w.iter_mut().for_each(|v| *v /= norm);
        basis.push(w);
    }
    RealMatrix::from_columns(&basis)
}
