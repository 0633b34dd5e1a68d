//! Self-stress states: the equilibrium matrix and its numeric nullspace,
//! analytic wheel states, virtual-cell search, basis assembly and
//! certification, and sign-conforming combinations.

mod basis;
mod conform;
mod general;
pub mod linalg;
mod wheel;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::model::{CellId, MemberId, NodeId, Structure};

pub use basis::{assemble_basis, assemble_basis_with, certify, verify_independence, AssembleOptions, IndependenceReport};
pub use conform::{conform_transform, find_conform_state, typology_from_groups, Sign, CONFORM_MARGIN};
pub use general::{find_virtual_cells_general, GeneralOptions, VirtualGeneral};
pub use wheel::{find_virtual_cells_wheel, wheel_densities, wheel_selfstress, VirtualWheel, WheelSpec};

/// Tolerance on per-column equilibrium residuals.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Tolerance on span cross-projections against the oracle.
pub const SPAN_TOL: f64 = 1e-8;

/// `A` with one column per member and two rows (x, y) per node.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumMatrix {
    pub node_ids: Vec<NodeId>,
    pub member_ids: Vec<MemberId>,
    pub matrix: DMatrix<f64>,
}

/// Equilibrium matrix over the active members and the nodes they touch.
pub fn equilibrium_matrix(structure: &Structure) -> EquilibriumMatrix {
    let members = structure.active_member_ids();
    equilibrium_matrix_for(structure, &members)
}

/// Equilibrium matrix restricted to the given members (removed or not).
pub fn equilibrium_matrix_for(structure: &Structure, members: &[MemberId]) -> EquilibriumMatrix {
    let mut row_of = vec![usize::MAX; structure.nodes().len()];
    let mut node_ids = Vec::new();
    let mut touched = vec![false; structure.nodes().len()];
    for &m in members {
        let member = &structure.members()[m.index()];
        touched[member.ends.0.index()] = true;
        touched[member.ends.1.index()] = true;
    }
    for node in structure.nodes() {
        if touched[node.id.index()] {
            row_of[node.id.index()] = node_ids.len();
            node_ids.push(node.id);
        }
    }
    let mut matrix = DMatrix::zeros(2 * node_ids.len(), members.len());
    for (col, &m) in members.iter().enumerate() {
        let (i, j) = structure.members()[m.index()].ends;
        let d = structure.nodes()[i.index()].point - structure.nodes()[j.index()].point;
        let (ri, rj) = (row_of[i.index()], row_of[j.index()]);
        matrix[(2 * ri, col)] = d.x;
        matrix[(2 * ri + 1, col)] = d.y;
        matrix[(2 * rj, col)] = -d.x;
        matrix[(2 * rj + 1, col)] = -d.y;
    }
    EquilibriumMatrix { node_ids, member_ids: members.to_vec(), matrix }
}

/// Where a basis column comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSource {
    Cell {
        cell: CellId,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        compensated_by: Vec<CellId>,
    },
    VirtualWheel {
        center: NodeId,
        periphery: Vec<NodeId>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        compensated_by: Vec<CellId>,
    },
    VirtualGeneral {
        members: Vec<MemberId>,
    },
    Numeric,
}

impl StateSource {
    pub fn is_cell(&self) -> bool {
        matches!(self, StateSource::Cell { .. })
    }

    pub fn is_virtual(&self) -> bool {
        matches!(self, StateSource::VirtualWheel { .. } | StateSource::VirtualGeneral { .. })
    }

    fn compensations_mut(&mut self) -> Option<&mut Vec<CellId>> {
        match self {
            StateSource::Cell { compensated_by, .. } | StateSource::VirtualWheel { compensated_by, .. } => {
                Some(compensated_by)
            }
            _ => None,
        }
    }
}

/// Self-stress states as columns over the active members in id order.
#[derive(Debug, Clone, PartialEq)]
pub struct StressBasis {
    pub member_ids: Vec<MemberId>,
    pub states: DMatrix<f64>,
    pub sources: Vec<StateSource>,
}

impl StressBasis {
    pub fn empty(member_ids: Vec<MemberId>) -> Self {
        let rows = member_ids.len();
        Self { member_ids, states: DMatrix::zeros(rows, 0), sources: Vec::new() }
    }

    pub fn from_columns(member_ids: Vec<MemberId>, columns: &[Vec<f64>], sources: Vec<StateSource>) -> Self {
        let rows = member_ids.len();
        let mut states = DMatrix::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate().take(rows) {
                states[(i, j)] = *v;
            }
        }
        Self { member_ids, states, sources }
    }

    pub fn dim(&self) -> usize {
        self.states.ncols()
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.states.column(k).iter().copied().collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|k| self.column(k)).collect()
    }

    pub fn cell_count(&self) -> usize {
        self.sources.iter().filter(|s| s.is_cell()).count()
    }

    pub fn virtual_count(&self) -> usize {
        self.sources.iter().filter(|s| s.is_virtual()).count()
    }

    /// Density of `member` in column `k`, zero for members not in the rows.
    pub fn density(&self, k: usize, member: MemberId) -> f64 {
        match self.member_ids.binary_search(&member) {
            Ok(row) => self.states[(row, k)],
            Err(_) => 0.0,
        }
    }
}

/// Orthonormal numeric basis of the self-stress space.
pub fn nullspace_basis(structure: &Structure, tol: f64) -> StressBasis {
    let eq = equilibrium_matrix(structure);
    let null = linalg::nullspace(&eq.matrix, tol);
    let n = null.ncols();
    StressBasis { member_ids: eq.member_ids, states: null, sources: vec![StateSource::Numeric; n] }
}

/// Dimension of the self-stress space of the active structure.
pub fn nullity(structure: &Structure) -> usize {
    let eq = equilibrium_matrix(structure);
    if eq.member_ids.is_empty() {
        return 0;
    }
    eq.member_ids.len() - linalg::rank(&eq.matrix, linalg::RANK_TOL)
}

/// Largest nodal imbalance of `state` (ordered like `members`) relative to
/// `max|w| * longest member`.
pub fn relative_residual(structure: &Structure, members: &[MemberId], state: &[f64]) -> f64 {
    let eq = equilibrium_matrix_for(structure, members);
    let w = DVector::from_column_slice(state);
    let forces = &eq.matrix * &w;
    let wmax = state.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let lmax = members
        .iter()
        .map(|&m| {
            let (i, j) = structure.members()[m.index()].ends;
            structure.nodes()[i.index()].point.distance(structure.nodes()[j.index()].point)
        })
        .fold(0.0f64, f64::max);
    let worst = forces.amax();
    if wmax == 0.0 || lmax == 0.0 {
        return worst;
    }
    worst / (wmax * lmax)
}

/// Comparison of a basis with the numeric nullspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub oracle_dim: usize,
    pub basis_dim: usize,
    /// Largest relative distance of a basis column from the oracle span.
    pub basis_in_oracle: f64,
    /// Largest distance of an oracle vector from the basis span.
    pub oracle_in_basis: f64,
    pub pass: bool,
}

pub fn cross_check(structure: &Structure, basis: &StressBasis) -> CrossCheck {
    let oracle = nullspace_basis(structure, linalg::RANK_TOL);
    let mut basis_in_oracle: f64 = 0.0;
    let same_rows = oracle.member_ids == basis.member_ids;
    if same_rows {
        for k in 0..basis.dim() {
            let v = basis.states.column(k).into_owned();
            let norm = v.norm();
            if norm > 0.0 {
                let proj = &oracle.states * (oracle.states.transpose() * &v);
                basis_in_oracle = basis_in_oracle.max((v - proj).norm() / norm);
            }
        }
    } else {
        basis_in_oracle = f64::INFINITY;
    }
    let q = linalg::column_basis(&basis.states, linalg::RANK_TOL);
    let mut oracle_in_basis: f64 = 0.0;
    if same_rows {
        for k in 0..oracle.dim() {
            let v = oracle.states.column(k).into_owned();
            let proj = &q * (q.transpose() * &v);
            oracle_in_basis = oracle_in_basis.max((v - proj).norm());
        }
    } else {
        oracle_in_basis = f64::INFINITY;
    }
    let pass = oracle.dim() == basis.dim() && basis_in_oracle <= SPAN_TOL && oracle_in_basis <= SPAN_TOL;
    CrossCheck { oracle_dim: oracle.dim(), basis_dim: basis.dim(), basis_in_oracle, oracle_in_basis, pass }
}

/// State over all members ever created (index `id - 1`).
pub(crate) type FullState = DVector<f64>;

pub(crate) fn to_active(structure: &Structure, full: &FullState) -> Vec<f64> {
    structure.active_members().map(|m| full[m.id.index()]).collect()
}
