//! Small reference structures used by tests, the acceptance suite and the
//! command line demos.

use std::collections::BTreeMap;

use crate::geom::Point;
use crate::model::{MemberId, NodeId, NodeRef, Structure};
use crate::multiply::{adhere, fuse, CellSpec};

fn p(x: f64, y: f64) -> NodeRef {
    NodeRef::Point(Point::new(x, y))
}

fn n(id: u32) -> NodeRef {
    NodeRef::Node(NodeId(id))
}

/// A structure together with a map from layout labels to node ids.
#[derive(Debug, Clone)]
pub struct Labeled {
    pub structure: Structure,
    pub labels: BTreeMap<u32, NodeId>,
}

impl Labeled {
    pub fn node(&self, label: u32) -> NodeId {
        self.labels[&label]
    }

    /// Active member joining two labelled nodes.
    pub fn member(&self, a: u32, b: u32) -> Option<MemberId> {
        self.structure.member_between(self.node(a), self.node(b))
    }

    /// Member joining two labelled nodes, removed or not.
    pub fn any_member(&self, a: u32, b: u32) -> Option<MemberId> {
        self.structure.any_member_between(self.node(a), self.node(b))
    }
}

/// Steps of the three-cell sequence. Node ids coincide with the labels
/// 1 to 7: the second cell shares member {2 3}, the third shares {3 4} and
/// {3 5} and adds node 7.
pub fn three_cell_steps() -> [CellSpec; 3] {
    [
        CellSpec::new([p(-2.0, -1.0), p(0.0, -1.5), p(0.0, 0.0), p(-1.5, 1.0)]),
        CellSpec::new([n(2), n(3), p(1.5, 1.0), p(2.0, -1.0)]),
        CellSpec::new([n(3), n(4), p(0.0, 2.5), n(5)]),
    ]
}

pub fn three_cell() -> Structure {
    let mut s = Structure::new();
    for spec in three_cell_steps() {
        adhere(&mut s, &spec).expect("three-cell fixture is valid");
    }
    s
}

/// 3x3 grid labelled row by row from the top left, four square cells
/// {1 2 4 5}, {2 3 5 6}, {4 5 7 8}, {5 6 8 9}, unit spacing.
pub fn four_cell_grid() -> Labeled {
    build_grid(false)
}

/// [`four_cell_grid`] with the last cell fused onto the structure by
/// removing member (5,6).
pub fn four_cell_grid_fused() -> Labeled {
    build_grid(true)
}

fn grid_point(label: u32) -> Point {
    let (row, col) = ((label - 1) / 3, (label - 1) % 3);
    Point::new(col as f64, 2.0 - row as f64)
}

fn build_grid(fused: bool) -> Labeled {
    let mut s = Structure::new();
    let mut labels: BTreeMap<u32, NodeId> = BTreeMap::new();
    let cells: [[u32; 4]; 4] = [[1, 2, 5, 4], [2, 3, 6, 5], [4, 5, 8, 7], [5, 6, 9, 8]];
    for (k, cell) in cells.iter().enumerate() {
        let refs = cell.map(|l| match labels.get(&l) {
            Some(&id) => NodeRef::Node(id),
            None => NodeRef::Point(grid_point(l)),
        });
        let spec = CellSpec::new(refs);
        let record = if fused && k == 3 {
            let m = s.member_between(labels[&5], labels[&6]).expect("member (5,6) exists");
            fuse(&mut s, &spec, &[m]).expect("grid fusion is valid").record
        } else {
            adhere(&mut s, &spec).expect("grid fixture is valid").0
        };
        for (l, id) in cell.iter().zip(&record.node_ids) {
            labels.insert(*l, *id);
        }
    }
    Labeled { structure: s, labels }
}

/// Closed ring of `sectors` quadrilateral cells between an inner and an
/// outer circle. It has `sectors + 3` states and no wheel.
pub fn ring(sectors: usize) -> Structure {
    assert!(sectors >= 4, "a ring needs at least four sectors");
    let angle = |k: usize, shift: f64| std::f64::consts::TAU * (k as f64 + shift) / sectors as f64;
    let inner = |k: usize| {
        let a = angle(k, 0.0);
        Point::new(a.cos(), a.sin())
    };
    let outer = |k: usize| {
        let a = angle(k, 0.13);
        Point::new(2.1 * a.cos(), 2.1 * a.sin())
    };
    let mut s = Structure::new();
    let mut ids: BTreeMap<(bool, usize), NodeId> = BTreeMap::new();
    for k in 0..sectors {
        let k1 = (k + 1) % sectors;
        let corners = [(true, k), (true, k1), (false, k1), (false, k)];
        let refs = corners.map(|(is_inner, j)| match ids.get(&(is_inner, j)) {
            Some(&id) => NodeRef::Node(id),
            None => NodeRef::Point(if is_inner { inner(j) } else { outer(j) }),
        });
        let (record, _) = adhere(&mut s, &CellSpec::new(refs)).expect("ring fixture is valid");
        for (c, id) in corners.iter().zip(&record.node_ids) {
            ids.insert(*c, *id);
        }
    }
    s
}

/// Two cells joined at a single node, which leaves one mechanism.
pub fn two_cells_one_node() -> Structure {
    let mut s = Structure::new();
    adhere(&mut s, &CellSpec::new([p(0.0, 0.0), p(1.0, 0.1), p(1.1, 1.0), p(0.1, 0.9)])).expect("valid");
    let spec = CellSpec { nodes: [n(3), p(2.2, 1.3), p(2.0, 2.2), p(1.2, 2.0)], allow_mechanisms: true };
    adhere(&mut s, &spec).expect("valid");
    s
}

/// A single square cell.
pub fn square_cell() -> Structure {
    let mut s = Structure::new();
    adhere(&mut s, &CellSpec::new([p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)])).expect("valid");
    s
}
