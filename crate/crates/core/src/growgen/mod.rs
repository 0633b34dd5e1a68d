//! Automated generation: a profile is meshed, the mesh is filled cell by
//! cell from a start face outwards, optional removals are applied and the
//! self-stress basis is assembled and checked against the oracle.

mod mesh;

use std::collections::{BTreeMap, VecDeque};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use mesh::{mesh_profile, Face, MeshBudget, MeshKind, MeshPlan, Profile};

use crate::cells::CellType;
use crate::error::{Error, Result};
use crate::model::{MemberId, NodeId, NodeRef, Structure};
use crate::multiply::{adhere, degrees_of_freedom, laman_bound, CellSpec, DimensionLedger, StepDelta};
use crate::stress::{assemble_basis_with, cross_check, nullity, AssembleOptions, CrossCheck, StressBasis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartFace {
    Index(usize),
    Random(u64),
}

/// Visiting order of the faces: breadth-first over faces sharing an edge,
/// so every face after the first shares an edge with an earlier one.
pub fn boundary_fill_plan(mesh: &MeshPlan, start: StartFace) -> Result<Vec<usize>> {
    let n = mesh.faces.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let first = match start {
        StartFace::Index(i) if i < n => i,
        StartFace::Index(i) => return Err(Error::DimensionMismatch(format!("start face {i} of {n}"))),
        StartFace::Random(seed) => ChaCha8Rng::seed_from_u64(seed).random_range(0..n),
    };
    let mut by_edge: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (k, f) in mesh.faces.iter().enumerate() {
        for e in f.edges() {
            by_edge.entry(e).or_default().push(k);
        }
    }
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut frontier = VecDeque::from([first]);
    visited[first] = true;
    while let Some(k) = frontier.pop_front() {
        order.push(k);
        for e in mesh.faces[k].edges() {
            for &g in &by_edge[&e] {
                if !visited[g] {
                    visited[g] = true;
                    frontier.push_back(g);
                }
            }
        }
    }
    if order.len() != n {
        return Err(Error::DisconnectedMesh);
    }
    Ok(order)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum RemovalPolicy {
    None,
    /// Every `k`-th member shared by two cells, in id order.
    EveryKthSharedRim(usize),
    ExplicitList(Vec<MemberId>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateOptions {
    pub budget: MeshBudget,
    pub mesh_kind: MeshKind,
    pub removals: RemovalPolicy,
    pub seed: u64,
    /// Defaults to a face drawn from `seed`.
    pub start: Option<StartFace>,
}

impl GenerateOptions {
    pub fn new(budget: MeshBudget, mesh_kind: MeshKind, seed: u64) -> Self {
        Self { budget, mesh_kind, removals: RemovalPolicy::None, seed, start: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub steps: Vec<StepDelta>,
    /// Laman bound tracked through the step deltas.
    pub ledger_dim: i64,
    pub cells: usize,
    pub type_i: usize,
    pub type_ii: usize,
    pub interior_shared_nodes: usize,
    pub removed: Vec<MemberId>,
    /// Cells plus interior shared nodes minus removals.
    pub expected_states: i64,
    pub laman_bound: i64,
    pub nullity: usize,
    pub mechanisms: i64,
    pub cell_states: usize,
    pub virtual_states: usize,
    pub cross_check: CrossCheck,
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub structure: Structure,
    pub basis: StressBasis,
    pub plan: MeshPlan,
    pub report: GenerationReport,
}

fn shared_members(structure: &Structure) -> Vec<MemberId> {
    structure
        .active_members()
        .filter(|m| structure.cells_containing_member(m.id).len() >= 2)
        .map(|m| m.id)
        .collect()
}

/// Fills a mesh with cells in boundary-fill order.
pub fn build_from_plan(plan: &MeshPlan, order: &[usize]) -> Result<(Structure, DimensionLedger)> {
    let mut structure = Structure::new();
    let mut ledger = DimensionLedger::default();
    let mut ids: BTreeMap<usize, NodeId> = BTreeMap::new();
    for (step, &k) in order.iter().enumerate() {
        let face = &plan.faces[k];
        let slots = face.cell_nodes();
        let refs = slots.map(|i| match ids.get(&i) {
            Some(&id) => NodeRef::Node(id),
            None => NodeRef::Point(plan.nodes[i]),
        });
        let (record, delta) = adhere(&mut structure, &CellSpec::new(refs))
            .map_err(|e| Error::GenerationFailed { step, source: Box::new(e) })?;
        for (i, id) in slots.iter().zip(&record.node_ids) {
            ids.insert(*i, *id);
        }
        ledger.push(delta);
    }
    Ok((structure, ledger))
}

/// Mesh, fill, remove, assemble and cross-check.
pub fn generate(profile: &Profile, options: &GenerateOptions) -> Result<Generated> {
    let plan = mesh_profile(profile, options.budget, options.mesh_kind, options.seed)?;
    let order = boundary_fill_plan(&plan, options.start.unwrap_or(StartFace::Random(options.seed)))?;
    let (mut structure, ledger) = build_from_plan(&plan, &order)?;

    let removed: Vec<MemberId> = match &options.removals {
        RemovalPolicy::None => Vec::new(),
        RemovalPolicy::EveryKthSharedRim(k) => {
            if *k == 0 {
                return Err(Error::InvalidProfile("removal stride must be positive".into()));
            }
            shared_members(&structure).into_iter().skip(k - 1).step_by(*k).collect()
        }
        RemovalPolicy::ExplicitList(list) => list.clone(),
    };
    for &m in &removed {
        structure.remove_member(m)?;
    }
    let s = nullity(&structure);
    let mechanisms = degrees_of_freedom(&structure, s);
    if mechanisms > 0 {
        return Err(Error::RemovalBreaksRigidity { mechanisms: mechanisms as usize });
    }
    let basis = assemble_basis_with(&structure, &AssembleOptions { seed: options.seed, ..Default::default() })?;
    let check = cross_check(&structure, &basis);
    let interior = plan.interior_shared_nodes().len();
    let report = GenerationReport {
        steps: ledger.steps.clone(),
        ledger_dim: ledger.running_dim(),
        cells: plan.faces.len(),
        type_i: plan.count(CellType::TypeI),
        type_ii: plan.count(CellType::TypeII),
        interior_shared_nodes: interior,
        removed: removed.clone(),
        expected_states: (plan.faces.len() + interior) as i64 - removed.len() as i64,
        laman_bound: laman_bound(&structure),
        nullity: s,
        mechanisms,
        cell_states: basis.cell_count(),
        virtual_states: basis.virtual_count(),
        cross_check: check,
    };
    Ok(Generated { structure, basis, plan, report })
}

/// Rotationally symmetric circular structure of `n_sectors` Type I cells
/// and `3 n_sectors` Type II cells, with the given members removed.
pub fn circular_family(n_sectors: usize, removal_set: &[MemberId], seed: u64) -> Result<Generated> {
    if n_sectors < 3 {
        return Err(Error::BudgetTooSmall(format!("{n_sectors} sectors, at least 3 required")));
    }
    let options = GenerateOptions {
        budget: MeshBudget::Faces(4 * n_sectors),
        mesh_kind: MeshKind::Mixed,
        removals: RemovalPolicy::ExplicitList(removal_set.to_vec()),
        seed,
        start: None,
    };
    generate(&Profile::Circle { radius: 1.0 }, &options)
}
