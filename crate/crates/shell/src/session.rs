//! An editing session: a structure under a sequence of operations, with a
//! revision counter, undo, and a basis cached per revision.

use serde::{Deserialize, Serialize};
use tensegrid_core::model::{CellRecord, MemberId, NodeId, NodeRef, Snapshot, Structure};
use tensegrid_core::multiply::{adhere, degrees_of_freedom, fuse, laman_bound, CellSpec, StepDelta};
use tensegrid_core::stress::{assemble_basis_with, nullity, AssembleOptions, StressBasis};
use tensegrid_core::Error;

use crate::document::{Document, Meta};

/// A member given by id or by its two end nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MemberRef {
    Id(MemberId),
    Pair([NodeId; 2]),
}

impl MemberRef {
    /// Active member for pairs; any member, removed or not, for ids.
    pub fn resolve(self, structure: &Structure) -> Result<MemberId, Error> {
        match self {
            MemberRef::Id(id) => structure.member(id).map(|m| m.id),
            MemberRef::Pair([a, b]) => {
                structure.node(a)?;
                structure.node(b)?;
                structure.member_between(a, b).ok_or(Error::UnknownPair(a, b))
            }
        }
    }

    /// Like [`MemberRef::resolve`] but pairs also match removed members.
    fn resolve_any(self, structure: &Structure) -> Result<MemberId, Error> {
        match self {
            MemberRef::Pair([a, b]) => {
                structure.node(a)?;
                structure.node(b)?;
                structure.any_member_between(a, b).ok_or(Error::UnknownPair(a, b))
            }
            id => id.resolve(structure),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Op {
    Adhere {
        nodes: [NodeRef; 4],
        #[serde(default)]
        allow_mechanisms: bool,
    },
    Fuse {
        nodes: [NodeRef; 4],
        remove: Vec<MemberRef>,
    },
    RemoveMember {
        member: MemberRef,
    },
    RestoreMember {
        member: MemberRef,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub nodes: usize,
    pub members: usize,
    pub cells: usize,
    pub laman_bound: i64,
    pub nullity: usize,
    pub mechanisms: i64,
}

impl Counts {
    pub fn of(structure: &Structure) -> Self {
        let s = nullity(structure);
        Self {
            nodes: structure.active_node_ids().len(),
            members: structure.active_member_ids().len(),
            cells: structure.actual_cells().count(),
            laman_bound: laman_bound(structure),
            nullity: s,
            mechanisms: degrees_of_freedom(structure, s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpOutcome {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<StepDelta>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cell: Option<CellRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub placement_dependent: Option<bool>,
    pub counts: Counts,
}

/// Applies `op` to `structure`; on error the structure is unchanged.
pub fn apply_op(structure: &mut Structure, op: &Op) -> Result<OpOutcome, Error> {
    let (delta, cell, placement_dependent) = match op {
        Op::Adhere { nodes, allow_mechanisms } => {
            let (record, delta) = adhere(structure, &CellSpec { nodes: *nodes, allow_mechanisms: *allow_mechanisms })?;
            (Some(delta), Some(record), None)
        }
        Op::Fuse { nodes, remove } => {
            let ids = remove.iter().map(|r| r.resolve(structure)).collect::<Result<Vec<_>, _>>()?;
            let out = fuse(structure, &CellSpec::new(*nodes), &ids)?;
            (Some(out.delta), Some(out.record), Some(out.placement_dependent))
        }
        Op::RemoveMember { member } => {
            let id = member.resolve_any(structure)?;
            structure.remove_member(id)?;
            (Some(StepDelta::new(-1, 0)), None, None)
        }
        Op::RestoreMember { member } => {
            let id = member.resolve_any(structure)?;
            structure.restore_member(id)?;
            (Some(StepDelta::new(1, 0)), None, None)
        }
    };
    Ok(OpOutcome { delta, cell, placement_dependent, counts: Counts::of(structure) })
}

/// Replays `ops` on an empty structure. `Err` carries the failing index.
pub fn replay(ops: &[Op]) -> Result<Structure, (usize, Error)> {
    let mut structure = Structure::new();
    for (k, op) in ops.iter().enumerate() {
        apply_op(&mut structure, op).map_err(|e| (k, e))?;
    }
    Ok(structure)
}

#[derive(Debug)]
pub struct Session {
    structure: Structure,
    history: Vec<Snapshot>,
    revision: u64,
    seed: u64,
    meta: Meta,
    basis: Option<(u64, Result<StressBasis, Error>)>,
}

impl Session {
    pub fn new(structure: Structure, meta: Meta) -> Self {
        let seed = meta.seed.unwrap_or(0);
        Self { structure, history: Vec::new(), revision: 0, seed, meta, basis: None }
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn can_undo(&self) -> bool {
        !self.history.is_empty()
    }

    pub fn apply(&mut self, op: &Op) -> Result<OpOutcome, Error> {
        let token = self.structure.snapshot();
        let outcome = apply_op(&mut self.structure, op)?;
        self.history.push(token);
        self.revision += 1;
        Ok(outcome)
    }

    /// Outcome of `op` without committing it.
    pub fn what_if(&self, op: &Op) -> Result<OpOutcome, Error> {
        let mut trial = self.structure.clone();
        apply_op(&mut trial, op)
    }

    /// Reverts the last applied operation. Returns false when there is none.
    pub fn undo(&mut self) -> bool {
        let Some(token) = self.history.pop() else { return false };
        self.structure.restore(&token).expect("tokens come from this structure");
        self.revision += 1;
        true
    }

    /// The certified basis of the current revision, computed once.
    pub fn basis(&mut self) -> Result<&StressBasis, Error> {
        let stale = !matches!(&self.basis, Some((rev, _)) if *rev == self.revision);
        if stale {
            let result = assemble_basis_with(&self.structure, &AssembleOptions { seed: self.seed, ..Default::default() });
            self.basis = Some((self.revision, result));
        }
        match &self.basis {
            Some((_, Ok(b))) => Ok(b),
            Some((_, Err(e))) => Err(e.clone()),
            None => unreachable!("basis was just computed"),
        }
    }

    pub fn document(&mut self) -> Result<Document, Error> {
        let meta = self.meta.clone();
        let basis = self.basis()?.clone();
        Ok(Document::new(&self.structure, &basis, meta))
    }
}
