//! The structure document: nodes, members, the cell history and the cell
//! multigraph.
//!
//! Members are never deleted. Removal only flags them, so the full history of
//! every cell stays addressable. Identifiers start at 1 and are assigned
//! sequentially, which makes `id - 1` the index of an item in its list.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cells::{member_groups, CellType, MemberGroup, CELL_MEMBER_PAIRS};
use crate::error::{Error, Result};
use crate::geom::{find_collinear_triple, Point, Tolerance};

macro_rules! id_type {
    ($name:ident, $prefix:literal) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize - 1
            }

            pub fn from_index(index: usize) -> Self {
                Self(index as u32 + 1)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}{}", $prefix, self.0)
            }
        }
    };
}

id_type!(NodeId, "n");
id_type!(MemberId, "m");
id_type!(CellId, "c");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub point: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub id: MemberId,
    /// Endpoints, smaller id first.
    pub ends: (NodeId, NodeId),
    pub removed: bool,
    pub group: MemberGroup,
}

impl Member {
    pub fn other_end(&self, node: NodeId) -> NodeId {
        if self.ends.0 == node {
            self.ends.1
        } else {
            self.ends.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Actual,
    Virtual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub id: CellId,
    /// For actual cells the four nodes `A, B, C, D` in insertion order.
    pub node_ids: Vec<NodeId>,
    pub cell_type: Option<CellType>,
    /// For actual cells the six members in cell member order.
    pub member_ids: Vec<MemberId>,
    /// Members that already existed when the cell was recorded.
    pub shared_member_ids: Vec<MemberId>,
    /// Members this cell removed (fusion).
    pub removed_member_ids: Vec<MemberId>,
    pub kind: CellKind,
}

impl CellRecord {
    pub fn is_actual(&self) -> bool {
        self.kind == CellKind::Actual
    }

    pub fn contains_member(&self, member: MemberId) -> bool {
        self.member_ids.contains(&member)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultigraphEdge {
    pub a: CellId,
    pub b: CellId,
    pub member: MemberId,
    /// 1 while the shared member is part of the structure, 0 once removed.
    pub weight: u8,
}

/// Cells as vertices, shared members as weighted edges.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CellMultigraph {
    pub vertices: Vec<CellId>,
    pub edges: Vec<MultigraphEdge>,
}

impl CellMultigraph {
    pub fn edges_for_member(&self, member: MemberId) -> impl Iterator<Item = &MultigraphEdge> {
        self.edges.iter().filter(move |e| e.member == member)
    }

    fn set_weight(&mut self, member: MemberId, weight: u8) {
        for edge in self.edges.iter_mut().filter(|e| e.member == member) {
            edge.weight = weight;
        }
    }
}

/// One corner of a cell being inserted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRef {
    Node(NodeId),
    Point(Point),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InsertOptions {
    /// Accept cells sharing fewer than two nodes with a non-empty structure.
    pub allow_mechanisms: bool,
    pub tol: Tolerance,
}

static LINEAGE: AtomicU64 = AtomicU64::new(1);

fn next_lineage() -> u64 {
    LINEAGE.fetch_add(1, Ordering::Relaxed)
}

/// A planar framework grown cell by cell.
#[derive(Debug, Clone)]
pub struct Structure {
    nodes: Vec<Node>,
    members: Vec<Member>,
    cells: Vec<CellRecord>,
    multigraph: CellMultigraph,
    active_pairs: BTreeMap<(NodeId, NodeId), MemberId>,
    lineage: u64,
}

impl PartialEq for Structure {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.members == other.members
            && self.cells == other.cells
            && self.multigraph == other.multigraph
    }
}

impl Default for Structure {
    fn default() -> Self {
        Self::new()
    }
}

/// Immutable copy of a structure taken by [`Structure::snapshot`].
#[derive(Debug, Clone)]
pub struct Snapshot {
    lineage: u64,
    state: Arc<Structure>,
}

fn canonical(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

pub fn new_structure() -> Structure {
    Structure::new()
}

impl Structure {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            members: Vec::new(),
            cells: Vec::new(),
            multigraph: CellMultigraph::default(),
            active_pairs: BTreeMap::new(),
            lineage: next_lineage(),
        }
    }

    /// Rebuilds a structure from stored parts. The multigraph is derived from
    /// the cell history and the removal flags.
    pub fn from_parts(nodes: Vec<Node>, members: Vec<Member>, cells: Vec<CellRecord>) -> Result<Self> {
        for (i, node) in nodes.iter().enumerate() {
            if node.id != NodeId::from_index(i) {
                return Err(Error::UnknownNodeId(node.id));
            }
        }
        let mut active_pairs = BTreeMap::new();
        for (i, member) in members.iter().enumerate() {
            if member.id != MemberId::from_index(i) {
                return Err(Error::UnknownMemberId(member.id));
            }
            for end in [member.ends.0, member.ends.1] {
                if end.0 == 0 || end.index() >= nodes.len() {
                    return Err(Error::UnknownNodeId(end));
                }
            }
            if member.ends.0 >= member.ends.1 {
                return Err(Error::UnknownPair(member.ends.0, member.ends.1));
            }
            if !member.removed && active_pairs.insert(member.ends, member.id).is_some() {
                return Err(Error::PairOccupied(member.id));
            }
        }
        let mut structure = Self {
            nodes,
            members,
            cells: Vec::new(),
            multigraph: CellMultigraph::default(),
            active_pairs,
            lineage: next_lineage(),
        };
        for (i, cell) in cells.into_iter().enumerate() {
            if cell.id != CellId::from_index(i) {
                return Err(Error::DimensionMismatch(format!("cell id {} at position {}", cell.id, i)));
            }
            for &m in cell.member_ids.iter().chain(&cell.shared_member_ids).chain(&cell.removed_member_ids) {
                structure.member(m)?;
            }
            for &n in &cell.node_ids {
                structure.node(n)?;
            }
            structure.link_cell(cell);
        }
        Ok(structure)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn cells(&self) -> &[CellRecord] {
        &self.cells
    }

    pub fn multigraph(&self) -> &CellMultigraph {
        &self.multigraph
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Result<&Node> {
        if id.0 == 0 {
            return Err(Error::UnknownNodeId(id));
        }
        self.nodes.get(id.index()).ok_or(Error::UnknownNodeId(id))
    }

    pub fn point(&self, id: NodeId) -> Result<Point> {
        self.node(id).map(|n| n.point)
    }

    pub fn member(&self, id: MemberId) -> Result<&Member> {
        if id.0 == 0 {
            return Err(Error::UnknownMemberId(id));
        }
        self.members.get(id.index()).ok_or(Error::UnknownMemberId(id))
    }

    pub fn cell(&self, id: CellId) -> Option<&CellRecord> {
        if id.0 == 0 {
            return None;
        }
        self.cells.get(id.index())
    }

    pub fn active_members(&self) -> impl Iterator<Item = &Member> {
        self.members.iter().filter(|m| !m.removed)
    }

    pub fn active_member_ids(&self) -> Vec<MemberId> {
        self.active_members().map(|m| m.id).collect()
    }

    pub fn actual_cells(&self) -> impl Iterator<Item = &CellRecord> {
        self.cells.iter().filter(|c| c.is_actual())
    }

    /// Active member joining `a` and `b`.
    pub fn member_between(&self, a: NodeId, b: NodeId) -> Option<MemberId> {
        self.active_pairs.get(&canonical(a, b)).copied()
    }

    /// Most recent member joining `a` and `b`, removed or not.
    pub fn any_member_between(&self, a: NodeId, b: NodeId) -> Option<MemberId> {
        self.member_between(a, b).or_else(|| {
            let pair = canonical(a, b);
            self.members.iter().rev().find(|m| m.ends == pair).map(|m| m.id)
        })
    }

    /// Number of active members at a node.
    pub fn degree(&self, node: NodeId) -> usize {
        self.active_members()
            .filter(|m| m.ends.0 == node || m.ends.1 == node)
            .count()
    }

    /// A node with no active member left.
    pub fn is_detached(&self, node: NodeId) -> bool {
        self.degree(node) == 0
    }

    /// Nodes with at least one active member, in id order.
    pub fn active_node_ids(&self) -> Vec<NodeId> {
        let mut seen = vec![false; self.nodes.len()];
        for m in self.active_members() {
            seen[m.ends.0.index()] = true;
            seen[m.ends.1.index()] = true;
        }
        self.nodes.iter().filter(|n| seen[n.id.index()]).map(|n| n.id).collect()
    }

    /// Actual cells whose node set contains `node`.
    pub fn cells_containing_node(&self, node: NodeId) -> Vec<CellId> {
        self.actual_cells()
            .filter(|c| c.node_ids.contains(&node))
            .map(|c| c.id)
            .collect()
    }

    /// Actual cells whose member set contains `member`.
    pub fn cells_containing_member(&self, member: MemberId) -> Vec<CellId> {
        self.actual_cells()
            .filter(|c| c.contains_member(member))
            .map(|c| c.id)
            .collect()
    }

    /// Number of actual cells inserted while sharing fewer than two nodes with
    /// the structure that preceded them (the first cell excluded).
    pub fn mechanism_insertions(&self) -> usize {
        let mut created = vec![false; self.nodes.len()];
        let mut count = 0;
        for (i, cell) in self.actual_cells().enumerate() {
            let shared = cell.node_ids.iter().filter(|n| created[n.index()]).count();
            if i > 0 && shared < 2 {
                count += 1;
            }
            for n in &cell.node_ids {
                created[n.index()] = true;
            }
        }
        count
    }

    /// Inserts a K4 cell. Entries referencing existing nodes are shared; a
    /// cell member whose endpoints are already joined by an active member
    /// reuses that member and is recorded as shared.
    pub fn insert_cell(&mut self, refs: [NodeRef; 4], opts: InsertOptions) -> Result<CellRecord> {
        let mut points = [Point { x: 0.0, y: 0.0 }; 4];
        let mut existing = 0;
        for (k, r) in refs.iter().enumerate() {
            points[k] = match *r {
                NodeRef::Node(id) => {
                    existing += 1;
                    self.point(id)?
                }
                NodeRef::Point(p) => p,
            };
        }
        for i in 0..4 {
            for j in i + 1..4 {
                if let (NodeRef::Node(a), NodeRef::Node(b)) = (refs[i], refs[j]) {
                    if a == b {
                        let third = (0..4).find(|&k| k != i && k != j).unwrap_or(0);
                        return Err(Error::DegeneratePosition([i, j, third]));
                    }
                }
            }
        }
        if let Some(triple) = find_collinear_triple(&points, opts.tol) {
            return Err(Error::DegeneratePosition(triple));
        }
        if !self.is_empty() && existing < 2 && !opts.allow_mechanisms {
            return Err(Error::InsufficientSharing { shared: existing });
        }
        let groups = member_groups(&points, opts.tol)?;
        let cell_type = if groups.iter().filter(|g| **g == MemberGroup::Spoke).count() == 3 {
            CellType::TypeII
        } else {
            CellType::TypeI
        };

        let node_ids: Vec<NodeId> = refs
            .iter()
            .map(|r| match *r {
                NodeRef::Node(id) => id,
                NodeRef::Point(p) => {
                    let id = NodeId::from_index(self.nodes.len());
                    self.nodes.push(Node { id, point: p });
                    id
                }
            })
            .collect();

        let mut member_ids = Vec::with_capacity(6);
        let mut shared = Vec::new();
        for (k, &(i, j)) in CELL_MEMBER_PAIRS.iter().enumerate() {
            let pair = canonical(node_ids[i], node_ids[j]);
            match self.active_pairs.get(&pair) {
                Some(&id) => {
                    member_ids.push(id);
                    shared.push(id);
                }
                None => {
                    let id = MemberId::from_index(self.members.len());
                    self.members.push(Member { id, ends: pair, removed: false, group: groups[k] });
                    self.active_pairs.insert(pair, id);
                    member_ids.push(id);
                }
            }
        }
        let record = CellRecord {
            id: CellId::from_index(self.cells.len()),
            node_ids,
            cell_type: Some(cell_type),
            member_ids,
            shared_member_ids: shared,
            removed_member_ids: Vec::new(),
            kind: CellKind::Actual,
        };
        self.link_cell(record.clone());
        Ok(record)
    }

    /// Appends a virtual cell (a minimally rigid sub-structure found during
    /// basis completion) to the history.
    pub fn record_virtual_cell(&mut self, node_ids: Vec<NodeId>, member_ids: Vec<MemberId>) -> Result<CellRecord> {
        for &m in &member_ids {
            self.member(m)?;
        }
        for &n in &node_ids {
            self.node(n)?;
        }
        let shared = member_ids
            .iter()
            .copied()
            .filter(|&m| self.cells.iter().any(|c| c.contains_member(m)))
            .collect();
        let record = CellRecord {
            id: CellId::from_index(self.cells.len()),
            node_ids,
            cell_type: None,
            member_ids,
            shared_member_ids: shared,
            removed_member_ids: Vec::new(),
            kind: CellKind::Virtual,
        };
        self.link_cell(record.clone());
        Ok(record)
    }

    /// Adds the cell to the history and one multigraph edge per shared member,
    /// joined to the earliest cell holding that member.
    fn link_cell(&mut self, record: CellRecord) {
        self.multigraph.vertices.push(record.id);
        for &m in &record.shared_member_ids {
            if let Some(owner) = self.cells.iter().find(|c| c.contains_member(m)) {
                let weight = if self.members[m.index()].removed { 0 } else { 1 };
                self.multigraph.edges.push(MultigraphEdge { a: owner.id, b: record.id, member: m, weight });
            }
        }
        self.cells.push(record);
    }

    pub fn remove_member(&mut self, id: MemberId) -> Result<()> {
        let member = *self.member(id)?;
        if member.removed {
            return Err(Error::AlreadyRemoved(id));
        }
        self.members[id.index()].removed = true;
        self.active_pairs.remove(&member.ends);
        self.multigraph.set_weight(id, 0);
        Ok(())
    }

    /// Removes `id` on behalf of `cell` (fusion) and records it in the cell.
    pub fn remove_member_for_cell(&mut self, id: MemberId, cell: CellId) -> Result<()> {
        if self.cell(cell).is_none() {
            return Err(Error::DimensionMismatch(format!("unknown cell {cell}")));
        }
        self.remove_member(id)?;
        self.cells[cell.index()].removed_member_ids.push(id);
        Ok(())
    }

    /// Puts a removed member back into the structure.
    pub fn restore_member(&mut self, id: MemberId) -> Result<()> {
        let member = *self.member(id)?;
        if !member.removed {
            return Err(Error::NotRemoved(id));
        }
        if self.active_pairs.contains_key(&member.ends) {
            return Err(Error::PairOccupied(id));
        }
        self.members[id.index()].removed = false;
        self.active_pairs.insert(member.ends, id);
        self.multigraph.set_weight(id, 1);
        Ok(())
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot { lineage: self.lineage, state: Arc::new(self.clone()) }
    }

    pub fn restore(&mut self, token: &Snapshot) -> Result<()> {
        if token.lineage != self.lineage {
            return Err(Error::InvalidToken);
        }
        *self = (*token.state).clone();
        Ok(())
    }

    /// Longest active member.
    pub fn max_member_length(&self) -> f64 {
        self.active_members()
            .map(|m| self.nodes[m.ends.0.index()].point.distance(self.nodes[m.ends.1.index()].point))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> NodeRef {
        NodeRef::Point(Point::new(x, y))
    }

    fn n(id: u32) -> NodeRef {
        NodeRef::Node(NodeId(id))
    }

    fn opts() -> InsertOptions {
        InsertOptions::default()
    }

    /// Cells 1..3 of the three-cell sequence: cell 2 shares member {2 3},
    /// cell 3 shares members {3 4} and {3 5}.
    fn three_cells() -> Structure {
        let mut s = Structure::new();
        s.insert_cell([p(-2.0, -1.0), p(0.0, -1.5), p(0.0, 0.0), p(-1.5, 1.0)], opts()).unwrap();
        s.insert_cell([n(2), n(3), p(1.5, 1.0), p(2.0, -1.0)], opts()).unwrap();
        s.insert_cell([n(3), n(4), p(0.0, 2.5), n(5)], opts()).unwrap();
        s
    }

    #[test]
    fn new_structure_is_empty() {
        let s = new_structure();
        assert!(s.nodes().is_empty() && s.members().is_empty() && s.cells().is_empty());
    }

    #[test]
    fn first_cell() {
        let mut s = Structure::new();
        let c = s.insert_cell([p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)], opts()).unwrap();
        assert_eq!(s.nodes().len(), 4);
        assert_eq!(s.members().len(), 6);
        assert!(c.shared_member_ids.is_empty());
        assert_eq!(c.cell_type, Some(CellType::TypeI));
    }

    #[test]
    fn three_cell_sharing() {
        let s = three_cells();
        let c2 = &s.cells()[1];
        assert_eq!(s.nodes().len(), 7);
        let m23 = s.member_between(NodeId(2), NodeId(3)).unwrap();
        assert_eq!(c2.shared_member_ids, vec![m23]);
        let c3 = &s.cells()[2];
        let m34 = s.member_between(NodeId(3), NodeId(4)).unwrap();
        let m35 = s.member_between(NodeId(3), NodeId(5)).unwrap();
        let mut shared = c3.shared_member_ids.clone();
        shared.sort();
        assert_eq!(shared, vec![m34, m35]);
        assert_eq!(s.members().len(), 15);
        assert_eq!(s.multigraph().edges.len(), 3);
    }

    #[test]
    fn insertion_errors() {
        let mut s = three_cells();
        let before = s.clone();
        assert!(matches!(
            s.insert_cell([n(1), p(10., 10.), p(11., 10.), p(10., 11.)], opts()),
            Err(Error::InsufficientSharing { shared: 1 })
        ));
        assert!(matches!(
            s.insert_cell([n(1), n(2), p(2., -2.0), n(99)], opts()),
            Err(Error::UnknownNodeId(NodeId(99)))
        ));
        assert!(matches!(
            s.insert_cell([p(0., 10.), p(1., 10.), p(2., 10.), p(0., 11.)], opts()),
            Err(Error::DegeneratePosition(_))
        ));
        assert_eq!(s, before);
        let allowed = InsertOptions { allow_mechanisms: true, ..opts() };
        assert!(s.insert_cell([n(1), p(-3., -3.), p(-2., -4.), p(-4., -2.5)], allowed).is_ok());
        assert_eq!(s.mechanism_insertions(), 1);
    }

    #[test]
    fn remove_and_restore() {
        let mut s = Structure::new();
        s.insert_cell([p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)], opts()).unwrap();
        s.remove_member(MemberId(1)).unwrap();
        assert_eq!(s.active_members().count(), 5);
        assert_eq!(s.remove_member(MemberId(1)), Err(Error::AlreadyRemoved(MemberId(1))));
        assert_eq!(s.remove_member(MemberId(40)), Err(Error::UnknownMemberId(MemberId(40))));
        s.restore_member(MemberId(1)).unwrap();
        assert_eq!(s.active_members().count(), 6);
    }

    #[test]
    fn removal_zeroes_multigraph_weight() {
        let mut s = three_cells();
        let m23 = s.member_between(NodeId(2), NodeId(3)).unwrap();
        s.remove_member(m23).unwrap();
        assert!(s.multigraph().edges_for_member(m23).all(|e| e.weight == 0));
        assert!(s.multigraph().edges.iter().filter(|e| e.member != m23).all(|e| e.weight == 1));
    }

    #[test]
    fn re_adding_a_removed_pair_creates_a_new_member() {
        let mut s = three_cells();
        let m23 = s.member_between(NodeId(2), NodeId(3)).unwrap();
        s.remove_member(m23).unwrap();
        let c = s.insert_cell([n(2), n(3), p(1.0, -3.0), p(2.5, -2.5)], opts()).unwrap();
        let fresh = s.member_between(NodeId(2), NodeId(3)).unwrap();
        assert_ne!(fresh, m23);
        assert!(!c.shared_member_ids.contains(&fresh));
        assert_eq!(s.restore_member(m23), Err(Error::PairOccupied(m23)));
    }

    #[test]
    fn snapshot_restore() {
        let mut s = three_cells();
        let token = s.snapshot();
        let original = s.clone();
        s.remove_member(MemberId(3)).unwrap();
        s.insert_cell([n(6), n(5), p(3.0, 1.0), p(3.5, -0.5)], opts()).unwrap();
        s.restore(&token).unwrap();
        assert_eq!(s, original);
        s.remove_member(MemberId(2)).unwrap();
        s.restore(&token).unwrap();
        assert_eq!(s, original);
        let other = Structure::new();
        assert_eq!(s.restore(&other.snapshot()), Err(Error::InvalidToken));
    }

    #[test]
    fn from_parts_rebuilds_multigraph() {
        let mut s = three_cells();
        s.remove_member(MemberId(2)).unwrap();
        let rebuilt = Structure::from_parts(s.nodes().to_vec(), s.members().to_vec(), s.cells().to_vec()).unwrap();
        assert_eq!(rebuilt, s);
    }
}
