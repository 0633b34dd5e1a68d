//! Conform states: combinations of basis states whose signs match the
//! intended role of every member.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::StressBasis;
use crate::cells::MemberGroup;
use crate::error::{Error, Result};
use crate::model::Structure;

/// Required sign of a member's density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Tension,
    #[serde(rename = "-")]
    Compression,
    #[serde(rename = "free")]
    Free,
}

impl Sign {
    fn factor(self) -> Option<f64> {
        match self {
            Sign::Tension => Some(1.0),
            Sign::Compression => Some(-1.0),
            Sign::Free => None,
        }
    }

    /// Envelope members in tension, spokes and diagonals in compression.
    pub fn from_group(group: MemberGroup) -> Self {
        match group {
            MemberGroup::Envelope => Sign::Tension,
            MemberGroup::Spoke => Sign::Compression,
            MemberGroup::Unset => Sign::Free,
        }
    }
}

/// Typology of the active members derived from their cell groups.
pub fn typology_from_groups(structure: &Structure) -> Vec<Sign> {
    structure.active_members().map(|m| Sign::from_group(m.group)).collect()
}

/// `W T` for an invertible square `T`.
pub fn conform_transform(w: &DMatrix<f64>, t: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !t.is_square() {
        return Err(Error::SingularT);
    }
    if w.ncols() != t.nrows() {
        return Err(Error::DimensionMismatch(format!("W has {} columns, T has {} rows", w.ncols(), t.nrows())));
    }
    let scale: f64 = t.column_iter().map(|c| c.norm()).product();
    let det = t.determinant();
    if !(det.abs() > 1e-12 * scale) {
        return Err(Error::SingularT);
    }
    Ok(w * t)
}

/// Minimum relative margin of the returned state.
pub const CONFORM_MARGIN: f64 = 1e-6;

/// A state in the span of `basis` with the required signs, found by
/// maximising the smallest signed density over bounded coefficients.
pub fn find_conform_state(basis: &StressBasis, typology: &[Sign]) -> Option<Vec<f64>> {
    let (rows, cols) = basis.states.shape();
    if typology.len() != rows || cols == 0 {
        return None;
    }
    // Columns scaled to unit max so the bounds on coefficients are balanced.
    let scales: Vec<f64> = (0..cols).map(|j| basis.states.column(j).amax()).collect();
    if scales.contains(&0.0) {
        return None;
    }
    let w = DMatrix::from_fn(rows, cols, |i, j| basis.states[(i, j)] / scales[j]);
    if typology.iter().all(|s| *s == Sign::Free) {
        return Some(w.column(0).iter().copied().collect());
    }

    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let coeffs: Vec<_> = (0..cols).map(|_| problem.add_var(0.0, (-1.0, 1.0))).collect();
    let margin = problem.add_var(1.0, (f64::NEG_INFINITY, 1.0));
    for (i, sign) in typology.iter().enumerate() {
        let Some(s) = sign.factor() else { continue };
        let norm = w.row(i).norm();
        if norm == 0.0 {
            return None;
        }
        let mut expr: Vec<_> = coeffs.iter().enumerate().map(|(j, &c)| (c, s * w[(i, j)] / norm)).collect();
        expr.push((margin, -1.0));
        problem.add_constraint(expr.as_slice(), ComparisonOp::Ge, 0.0);
    }
    let solution = problem.solve().ok()?;
    if solution[margin] <= 0.0 {
        return None;
    }
    let c: Vec<f64> = coeffs.iter().map(|&v| solution[v]).collect();
    let state: Vec<f64> = (0..rows).map(|i| (0..cols).map(|j| w[(i, j)] * c[j]).sum()).collect();
    let max = state.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let ok = typology
        .iter()
        .zip(&state)
        .all(|(sign, v)| sign.factor().is_none_or(|s| s * v >= CONFORM_MARGIN * max));
    ok.then_some(state)
}
