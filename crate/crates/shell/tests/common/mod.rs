//! Independent numeric oracle: equilibrium matrices are assembled here from
//! raw coordinates and their nullspace is taken with a plain SVD.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use tensegrid_core::geom::Point;
use tensegrid_core::model::Structure;

/// Equilibrium matrix of `pairs` over `points`, node rows `2i, 2i+1`.
pub fn matrix(points: &[Point], pairs: &[(usize, usize)]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(2 * points.len(), pairs.len());
    for (col, &(i, j)) in pairs.iter().enumerate() {
        let dx = points[i].x - points[j].x;
        let dy = points[i].y - points[j].y;
        a[(2 * i, col)] += dx;
        a[(2 * i + 1, col)] += dy;
        a[(2 * j, col)] -= dx;
        a[(2 * j + 1, col)] -= dy;
    }
    a
}

/// Orthonormal nullspace of `a` via the eigen-decomposition of `AᵀA`
/// (kept distinct from the library's SVD route).
pub fn nullspace(a: &DMatrix<f64>) -> DMatrix<f64> {
    let ata = a.transpose() * a;
    let eig = ata.clone().symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cols: Vec<DVector<f64>> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() <= 1e-12 * top)
        .map(|(k, _)| eig.eigenvectors.column(k).into_owned())
        .collect();
    if cols.is_empty() {
        return DMatrix::zeros(a.ncols(), 0);
    }
    DMatrix::from_columns(&cols)
}

/// Nullspace by SVD with a relative singular value cutoff.
pub fn svd_nullity(a: &DMatrix<f64>) -> usize {
    let (r, c) = a.shape();
    let padded = if r < c { a.clone().resize_vertically(c, 0.0) } else { a.clone() };
    let sv = padded.singular_values();
    let top = sv.iter().fold(0.0f64, |m, v| m.max(*v));
    c - sv.iter().filter(|v| **v > 1e-10 * top).count()
}

/// Angle between `v` and the span of the orthonormal columns of `q`.
pub fn angle_to_span(q: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    let proj = q * (q.transpose() * v);
    let off = (v - &proj).norm();
    off.atan2(proj.norm())
}

/// Points and active member pairs (as point indices) of a structure, with
/// active members listed in id order.
pub fn active_framework(s: &Structure) -> (Vec<Point>, Vec<(usize, usize)>) {
    let points: Vec<Point> = s.nodes().iter().map(|n| n.point).collect();
    let pairs = s.active_members().map(|m| (m.ends.0.index(), m.ends.1.index())).collect();
    (points, pairs)
}

pub fn oracle_nullity(s: &Structure) -> usize {
    let (p, e) = active_framework(s);
    if e.is_empty() {
        return 0;
    }
    svd_nullity(&matrix(&p, &e))
}

/// Largest relative residual `|A w| / (|w|_max * longest member)`.
pub fn residual(points: &[Point], pairs: &[(usize, usize)], w: &[f64]) -> f64 {
    let a = matrix(points, pairs);
    let f = a * DVector::from_column_slice(w);
    let wmax = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let lmax = pairs.iter().map(|&(i, j)| points[i].distance(points[j])).fold(0.0f64, f64::max);
    f.amax() / (wmax * lmax)
}

/// Distance of every column of `b` from the span of `a` and back, both
/// spans orthonormalised first.
pub fn span_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let qa = a.clone().qr().q();
    let qb = b.clone().qr().q();
    let one = |q: &DMatrix<f64>, m: &DMatrix<f64>| {
        m.column_iter()
            .map(|c| {
                let v = c.into_owned() / c.norm();
                (&v - q * (q.transpose() * &v)).norm()
            })
            .fold(0.0f64, f64::max)
    };
    one(&qa, b).max(one(&qb, a))
}
