//! Dense helpers on top of nalgebra's SVD.

use nalgebra::{DMatrix, DVector};

/// Default relative cut-off for singular values.
pub const RANK_TOL: f64 = 1e-10;

/// Singular values in decreasing order and the matching right singular
/// vectors as rows. Wide matrices are padded with zero rows so every right
/// singular vector is returned.
fn full_svd(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let (m, n) = a.shape();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let padded = if m < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let rows = DMatrix::from_fn(order.len(), n, |r, c| v_t[(order[r], c)]);
    (values, rows)
}

fn numeric_rank(values: &[f64], rel_tol: f64) -> usize {
    let max = values.first().copied().unwrap_or(0.0);
    if max == 0.0 {
        return 0;
    }
    values.iter().filter(|&&s| s > rel_tol * max).count()
}

pub fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    if a.ncols() == 0 || a.nrows() == 0 {
        return 0;
    }
    let values = if a.nrows() >= a.ncols() {
        a.singular_values()
    } else {
        a.transpose().singular_values()
    };
    let mut v: Vec<f64> = values.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    numeric_rank(&v, rel_tol)
}

/// Orthonormal basis of the right nullspace, one vector per column.
pub fn nullspace(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = a.ncols();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    if a.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let (values, rows) = full_svd(a);
    let r = numeric_rank(&values, rel_tol);
    DMatrix::from_fn(n, n - r, |i, j| rows[(r + j, i)])
}

/// Orthonormal basis of the column span.
pub fn column_basis(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (m, n) = a.shape();
    if n == 0 || m == 0 {
        return DMatrix::zeros(m, 0);
    }
    let (values, rows) = full_svd(&a.transpose());
    let r = numeric_rank(&values, rel_tol);
    DMatrix::from_fn(m, r, |i, j| rows[(j, i)])
}

/// Incrementally grown orthonormal set used to test whether a new vector
/// adds a direction.
#[derive(Debug, Clone, Default)]
pub struct OrthoSet {
    basis: Vec<DVector<f64>>,
    rel_tol: f64,
}

impl OrthoSet {
    pub fn new(rel_tol: f64) -> Self {
        Self { basis: Vec::new(), rel_tol }
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    fn residual(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut r = v.clone();
        // Two passes of modified Gram-Schmidt.
        for _ in 0..2 {
            for q in &self.basis {
                let c = q.dot(&r);
                r.axpy(-c, q, 1.0);
            }
        }
        r
    }

    /// Relative norm of the part of `v` outside the span.
    pub fn distance(&self, v: &DVector<f64>) -> f64 {
        let norm = v.norm();
        if norm == 0.0 {
            return 0.0;
        }
        self.residual(v).norm() / norm
    }

    pub fn is_independent(&self, v: &DVector<f64>) -> bool {
        self.distance(v) > self.rel_tol
    }

    /// Adds `v` when it is independent of the set; returns whether it was.
    pub fn try_push(&mut self, v: &DVector<f64>) -> bool {
        let norm = v.norm();
        if norm == 0.0 {
            return false;
        }
        let r = self.residual(v);
        let rn = r.norm();
        if rn / norm <= self.rel_tol {
            return false;
        }
        self.basis.push(r / rn);
        true
    }
}
