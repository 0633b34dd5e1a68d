//! General virtual-cell search for states that are not wheels.
//!
//! Cell states are first switched off by dropping one member used by a single
//! cell, pruning any node left with two members or fewer. In the remainder,
//! dropping `d - 1` members between nodes of degree at least 4 (where `d` is
//! the remainder's self-stress dimension) leaves a sub-structure with a
//! single self-stress state when the restricted nullspace block has full
//! rank.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linalg::{self, OrthoSet};
use super::{equilibrium_matrix_for, StressBasis};
use crate::error::{Error, Result};
use crate::model::{MemberId, NodeId, Structure};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralOptions {
    pub seed: u64,
    pub candidate_cap: usize,
}

impl Default for GeneralOptions {
    fn default() -> Self {
        Self { seed: 0, candidate_cap: 100_000 }
    }
}

/// A virtual cell found by the general search.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualGeneral {
    /// Members carrying a nonzero density.
    pub members: Vec<MemberId>,
    /// Members dropped from the remainder to isolate this state.
    pub dropped: Vec<MemberId>,
    /// Densities over the active members in id order.
    pub state: Vec<f64>,
}

fn degrees(structure: &Structure, members: &BTreeSet<MemberId>) -> BTreeMap<NodeId, usize> {
    let mut deg = BTreeMap::new();
    for &m in members {
        let (a, b) = structure.members()[m.index()].ends;
        *deg.entry(a).or_insert(0) += 1;
        *deg.entry(b).or_insert(0) += 1;
    }
    deg
}

/// Active members left after switching off every cell.
fn remainder(structure: &Structure) -> BTreeSet<MemberId> {
    let mut left: BTreeSet<MemberId> = structure.active_member_ids().into_iter().collect();
    for cell in structure.actual_cells() {
        let deg = degrees(structure, &left);
        let exclusive: Vec<MemberId> = cell
            .member_ids
            .iter()
            .copied()
            .filter(|m| left.contains(m) && structure.cells_containing_member(*m).len() == 1)
            .collect();
        let sturdy = |m: &MemberId| {
            let (a, b) = structure.members()[m.index()].ends;
            deg[&a] >= 4 && deg[&b] >= 4
        };
        let pick = exclusive.iter().copied().find(sturdy).or_else(|| exclusive.first().copied());
        let Some(pick) = pick else { continue };
        left.remove(&pick);
        loop {
            let deg = degrees(structure, &left);
            let weak: Vec<MemberId> = left
                .iter()
                .copied()
                .filter(|m| {
                    let (a, b) = structure.members()[m.index()].ends;
                    deg[&a] <= 2 || deg[&b] <= 2
                })
                .collect();
            if weak.is_empty() {
                break;
            }
            for m in weak {
                left.remove(&m);
            }
        }
    }
    left
}

/// Advances `idx` to the next `k`-combination of `0..n` in lexicographic
/// order; false when exhausted.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

pub(crate) fn search_general(
    structure: &Structure,
    ortho: &mut OrthoSet,
    needed: usize,
    opts: &GeneralOptions,
) -> Result<Vec<VirtualGeneral>> {
    let mut found = Vec::new();
    if needed == 0 {
        return Ok(found);
    }
    let active = structure.active_member_ids();
    let left: Vec<MemberId> = remainder(structure).into_iter().collect();
    let eq = equilibrium_matrix_for(structure, &left);
    let null = linalg::nullspace(&eq.matrix, linalg::RANK_TOL);
    let d = null.ncols();
    if d == 0 {
        return Err(Error::SearchExhausted { candidates: 0, found: 0, needed });
    }
    let left_set: BTreeSet<MemberId> = left.iter().copied().collect();
    let deg = degrees(structure, &left_set);
    let mut pool: Vec<usize> = (0..left.len())
        .filter(|&r| {
            let (a, b) = structure.members()[left[r].index()].ends;
            deg[&a] >= 4 && deg[&b] >= 4
        })
        .collect();
    pool.shuffle(&mut ChaCha8Rng::seed_from_u64(opts.seed));

    let k = d - 1;
    let mut candidates = 0;
    if k > pool.len() {
        return Err(Error::SearchExhausted { candidates, found: 0, needed });
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if candidates >= opts.candidate_cap {
            break;
        }
        candidates += 1;
        let rows: Vec<usize> = idx.iter().map(|&i| pool[i]).collect();
        let block = nalgebra::DMatrix::from_fn(k, d, |i, j| null[(rows[i], j)]);
        let z = linalg::nullspace(&block, linalg::RANK_TOL);
        if z.ncols() == 1 {
            let local = &null * z.column(0);
            let mut full = vec![0.0; structure.members().len()];
            for (r, m) in left.iter().enumerate() {
                full[m.index()] = local[r];
            }
            for &r in &rows {
                full[left[r].index()] = 0.0;
            }
            let mut state: Vec<f64> = active.iter().map(|m| full[m.index()]).collect();
            let scale = state.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if scale > 0.0 {
                state.iter_mut().for_each(|v| *v /= scale);
                for v in state.iter_mut() {
                    if v.abs() <= 1e-12 {
                        *v = 0.0;
                    }
                }
                if ortho.try_push(&DVector::from_column_slice(&state)) {
                    let members = active.iter().zip(&state).filter(|(_, v)| **v != 0.0).map(|(m, _)| *m).collect();
                    let dropped = rows.iter().map(|&r| left[r]).collect();
                    found.push(VirtualGeneral { members, dropped, state });
                    if found.len() == needed {
                        return Ok(found);
                    }
                }
            }
        }
        if !next_combination(&mut idx, pool.len()) {
            break;
        }
    }
    Err(Error::SearchExhausted { candidates, found: found.len(), needed })
}

/// Up to `needed` general virtual-cell states independent of `existing`.
pub fn find_virtual_cells_general(
    structure: &Structure,
    existing: &StressBasis,
    needed: usize,
    opts: &GeneralOptions,
) -> Result<Vec<VirtualGeneral>> {
    let mut ortho = OrthoSet::new(super::basis::INDEPENDENCE_TOL);
    for k in 0..existing.dim() {
        ortho.try_push(&existing.states.column(k).into_owned());
    }
    search_general(structure, &mut ortho, needed, opts)
}
