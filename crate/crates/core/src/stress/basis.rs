//! Basis assembly: cell states, virtual-cell states, cancellation of removed
//! members, and certification.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::general::{search_general, GeneralOptions};
use super::linalg::{self, OrthoSet};
use super::wheel::search_wheels;
use super::{nullity, relative_residual, to_active, FullState, StateSource, StressBasis, RESIDUAL_TOL};
use crate::cells::cell_selfstress;
use crate::error::{Error, Result};
use crate::model::{CellId, CellRecord, Structure};

/// Relative distance below which a new state counts as dependent.
pub(crate) const INDEPENDENCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssembleOptions {
    pub seed: u64,
    pub candidate_cap: usize,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        Self { seed: 0, candidate_cap: 100_000 }
    }
}

/// State of an actual cell with `w1 = 1` over all members ever created.
pub(crate) fn cell_state_full(structure: &Structure, cell: &CellRecord) -> Result<FullState> {
    let pts: Vec<_> = cell.node_ids.iter().map(|&n| structure.point(n)).collect::<Result<_>>()?;
    let s = cell_selfstress(pts[0], pts[1], pts[2], pts[3], 1.0)?;
    let mut v = DVector::zeros(structure.members().len());
    for (k, m) in cell.member_ids.iter().enumerate() {
        v[m.index()] = s.w[k];
    }
    Ok(v)
}

/// `3 + |E| - 2|V|` over every member ever created and the nodes they touch.
pub(crate) fn historical_bound(structure: &Structure) -> usize {
    let mut touched = vec![false; structure.nodes().len()];
    for m in structure.members() {
        touched[m.ends.0.index()] = true;
        touched[m.ends.1.index()] = true;
    }
    let v = touched.iter().filter(|t| **t).count() as i64;
    if v < 2 {
        return 0;
    }
    (3 + structure.members().len() as i64 - 2 * v).max(0) as usize
}

fn is_nonzero(v: &FullState, index: usize) -> bool {
    v[index].abs() > 1e-12 * v.amax()
}

fn compensate(source: &mut StateSource, by: &StateSource) {
    let mut cells: Vec<CellId> = Vec::new();
    if let StateSource::Cell { cell, compensated_by } = by {
        cells.push(*cell);
        cells.extend(compensated_by.iter().copied());
    }
    if let Some(list) = source.compensations_mut() {
        for c in cells {
            if !list.contains(&c) {
                list.push(c);
            }
        }
        list.sort();
    }
}

/// Cancels every removed member: for each one a pivot state is consumed and
/// subtracted from every other state carrying that member.
fn eliminate_removed(structure: &Structure, states: &mut Vec<(FullState, StateSource)>) {
    for member in structure.members().iter().filter(|m| m.removed) {
        let i = member.id.index();
        let cell_of = |s: &StateSource| match s {
            StateSource::Cell { cell, .. } => Some(*cell),
            _ => None,
        };
        let fusing = states
            .iter()
            .enumerate()
            .filter(|(_, (v, s))| {
                is_nonzero(v, i)
                    && cell_of(s)
                        .and_then(|c| structure.cell(c))
                        .is_some_and(|c| c.removed_member_ids.contains(&member.id))
            })
            .max_by_key(|(_, (_, s))| cell_of(s))
            .map(|(k, _)| k);
        let any_cell = || {
            states
                .iter()
                .enumerate()
                .filter(|(_, (v, s))| is_nonzero(v, i) && s.is_cell())
                .max_by_key(|(_, (_, s))| cell_of(s))
                .map(|(k, _)| k)
        };
        let any = || states.iter().position(|(v, _)| is_nonzero(v, i));
        let Some(pivot) = fusing.or_else(any_cell).or_else(any) else {
            for (v, _) in states.iter_mut() {
                v[i] = 0.0;
            }
            continue;
        };
        let (p, psource) = states.remove(pivot);
        for (v, source) in states.iter_mut() {
            if is_nonzero(v, i) {
                let factor = v[i] / p[i];
                v.axpy(-factor, &p, 1.0);
                compensate(source, &psource);
            }
            v[i] = 0.0;
        }
    }
}

pub fn assemble_basis(structure: &Structure) -> Result<StressBasis> {
    assemble_basis_with(structure, &AssembleOptions::default())
}

/// Cell states, then wheel states from the history, then cancellation of
/// removed members, then the general search for any shortfall against the
/// dimension of the self-stress space. The result is certified.
pub fn assemble_basis_with(structure: &Structure, opts: &AssembleOptions) -> Result<StressBasis> {
    let member_ids = structure.active_member_ids();
    let mut states: Vec<(FullState, StateSource)> = Vec::new();
    let mut ortho = OrthoSet::new(INDEPENDENCE_TOL);
    for cell in structure.actual_cells() {
        let v = cell_state_full(structure, cell)?;
        if ortho.try_push(&v) {
            states.push((v, StateSource::Cell { cell: cell.id, compensated_by: Vec::new() }));
        }
    }
    let limit = historical_bound(structure).max(states.len()) - states.len();
    for (spec, v) in search_wheels(structure, &mut ortho, limit) {
        states.push((
            v,
            StateSource::VirtualWheel { center: spec.center, periphery: spec.periphery, compensated_by: Vec::new() },
        ));
    }
    eliminate_removed(structure, &mut states);

    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut sources = Vec::new();
    let mut active_ortho = OrthoSet::new(INDEPENDENCE_TOL);
    for (v, source) in states {
        let col = to_active(structure, &v);
        if active_ortho.try_push(&DVector::from_column_slice(&col)) {
            columns.push(col);
            sources.push(source);
        }
    }

    let target = nullity(structure);
    if columns.len() < target {
        let needed = target - columns.len();
        let general = GeneralOptions { seed: opts.seed, candidate_cap: opts.candidate_cap };
        let found = search_general(structure, &mut active_ortho, needed, &general).map_err(|e| match e {
            Error::SearchExhausted { found, .. } => Error::IncompleteBasis { achieved: columns.len() + found, target },
            other => other,
        })?;
        for found in found {
            columns.push(found.state);
            sources.push(StateSource::VirtualGeneral { members: found.members });
        }
    }
    let basis = StressBasis::from_columns(member_ids, &columns, sources);
    certify(structure, &basis)?;
    if basis.dim() != target {
        return Err(Error::IncompleteBasis { achieved: basis.dim(), target });
    }
    Ok(basis)
}

/// Rank equal to the column count and every column in equilibrium.
pub fn certify(structure: &Structure, basis: &StressBasis) -> Result<()> {
    let r = linalg::rank(&basis.states, linalg::RANK_TOL);
    if r != basis.dim() {
        return Err(Error::CertificationFailed(format!("rank {r} for {} columns", basis.dim())));
    }
    for k in 0..basis.dim() {
        let residual = relative_residual(structure, &basis.member_ids, &basis.column(k));
        if !(residual <= RESIDUAL_TOL) {
            return Err(Error::CertificationFailed(format!("column {k} residual {residual:e}")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub numeric_rank: usize,
    pub independent: bool,
    /// Every column was eliminated by repeatedly finding a member carried by
    /// a single remaining column.
    pub peeling_complete: bool,
}

pub fn verify_independence(basis: &StressBasis) -> IndependenceReport {
    let cols = basis.dim();
    let numeric_rank = linalg::rank(&basis.states, linalg::RANK_TOL);
    let peeling_complete = peel(&basis.states);
    IndependenceReport { numeric_rank, independent: numeric_rank == cols, peeling_complete }
}

/// A member carried by exactly one remaining state forces that state's
/// coefficient in any null combination to zero.
fn peel(states: &DMatrix<f64>) -> bool {
    let (rows, cols) = states.shape();
    let scale: Vec<f64> = (0..cols).map(|j| states.column(j).amax()).collect();
    let mut alive: Vec<bool> = (0..cols).map(|j| scale[j] > 0.0).collect();
    if alive.iter().any(|a| !a) {
        return false;
    }
    loop {
        let mut progressed = false;
        for i in 0..rows {
            let mut carrier = None;
            let mut count = 0;
            for j in 0..cols {
                if alive[j] && states[(i, j)].abs() > 1e-12 * scale[j] {
                    count += 1;
                    carrier = Some(j);
                }
            }
            if count == 1 {
                alive[carrier.unwrap_or(0)] = false;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    alive.iter().all(|a| !a)
}
