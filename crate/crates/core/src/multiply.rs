//! Adhesion and fusion: combinatorial accounting of self-stress states and
//! mechanisms, and placement of the free node of a fusing cell.

use serde::{Deserialize, Serialize};

use crate::cells::cell_selfstress;
use crate::error::{Error, Result};
use crate::geom::{affine_area_f, coordinate_span, Point, Tolerance};
use crate::model::{CellRecord, InsertOptions, MemberId, NodeRef, Structure};

/// Change caused by one generation step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepDelta {
    pub e_i: i64,
    pub v_i: i64,
    pub delta_dim: i64,
}

impl StepDelta {
    pub fn new(e_i: i64, v_i: i64) -> Self {
        Self { e_i, v_i, delta_dim: delta_dim(e_i, v_i) }
    }
}

pub fn delta_dim(e_i: i64, v_i: i64) -> i64 {
    e_i - 2 * v_i
}

/// `3 + |E| - 2|V|` over active members and the nodes they touch; 0 below
/// two active nodes.
pub fn laman_bound(structure: &Structure) -> i64 {
    let v = structure.active_node_ids().len() as i64;
    if v < 2 {
        return 0;
    }
    let e = structure.active_members().count() as i64;
    3 + e - 2 * v
}

/// Infinitesimal mechanisms of the framework given the dimension of its
/// self-stress space.
pub fn degrees_of_freedom(structure: &Structure, nullity: usize) -> i64 {
    let v = structure.active_node_ids().len() as i64;
    let e = structure.active_members().count() as i64;
    if v >= 2 {
        nullity as i64 - laman_bound(structure)
    } else {
        v * (v - 1) / 2 - e
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RigidityReport {
    pub laman_bound: i64,
    pub nullity: usize,
    pub mechanisms: i64,
    /// True when no mechanism was found, so the Laman bound is the
    /// self-stress dimension.
    pub generically_rigid_claim: bool,
}

pub fn rigidity_report(structure: &Structure, nullity: usize) -> RigidityReport {
    let mechanisms = degrees_of_freedom(structure, nullity);
    RigidityReport {
        laman_bound: laman_bound(structure),
        nullity,
        mechanisms,
        generically_rigid_claim: mechanisms == 0,
    }
}

/// The four corners of a cell to be added.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub nodes: [NodeRef; 4],
    #[serde(default)]
    pub allow_mechanisms: bool,
}

impl CellSpec {
    pub fn new(nodes: [NodeRef; 4]) -> Self {
        Self { nodes, allow_mechanisms: false }
    }

    pub fn shared_nodes(&self) -> usize {
        self.nodes.iter().filter(|r| matches!(r, NodeRef::Node(_))).count()
    }

    fn options(&self) -> InsertOptions {
        InsertOptions { allow_mechanisms: self.allow_mechanisms, tol: Tolerance::default() }
    }
}

/// Inserts a cell keeping every shared member.
pub fn adhere(structure: &mut Structure, spec: &CellSpec) -> Result<(CellRecord, StepDelta)> {
    let nodes_before = structure.nodes().len();
    let members_before = structure.members().len();
    let record = structure.insert_cell(spec.nodes, spec.options())?;
    let delta = StepDelta::new(
        (structure.members().len() - members_before) as i64,
        (structure.nodes().len() - nodes_before) as i64,
    );
    Ok((record, delta))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuseOutcome {
    pub record: CellRecord,
    pub delta: StepDelta,
    /// Two or more removals: the union is in equilibrium only if the free
    /// node was placed by [`place_fusion_node`].
    pub placement_dependent: bool,
}

/// Inserts a cell and removes the listed members. Either fully applied or
/// the structure is left unchanged.
pub fn fuse(structure: &mut Structure, spec: &CellSpec, remove: &[MemberId]) -> Result<FuseOutcome> {
    if remove.is_empty() {
        return Err(Error::NoRemovals);
    }
    let shared = spec.shared_nodes();
    if remove.len() >= 2 && shared < 3 {
        return Err(Error::TooManyRemovals { removals: remove.len(), shared });
    }
    for (k, &m) in remove.iter().enumerate() {
        if structure.member(m)?.removed || remove[..k].contains(&m) {
            return Err(Error::AlreadyRemoved(m));
        }
    }
    let backup = structure.clone();
    let result = (|| {
        let (record, added) = adhere(structure, spec)?;
        for &m in remove {
            structure.remove_member_for_cell(m, record.id)?;
        }
        let record = structure.cell(record.id).cloned().unwrap_or(record);
        let delta = StepDelta::new(added.e_i - remove.len() as i64, added.v_i);
        Ok(FuseOutcome { record, delta, placement_dependent: remove.len() >= 2 })
    })();
    if result.is_err() {
        *structure = backup;
    }
    result
}

/// Running total of step deltas. Starting from 3, the sum after any prefix of
/// steps is the Laman bound of the structure built so far (the first cell
/// contributes `6 - 2*4 = -2`, giving 1).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DimensionLedger {
    pub steps: Vec<StepDelta>,
}

impl DimensionLedger {
    pub fn push(&mut self, delta: StepDelta) {
        self.steps.push(delta);
    }

    pub fn running_dim(&self) -> i64 {
        if self.steps.is_empty() {
            return 0;
        }
        3 + self.steps.iter().map(|s| s.delta_dim).sum::<i64>()
    }
}

/// Members of the triangle `A, B, C` that a fusing cell may remove.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SharedEdge {
    AB,
    BC,
    AC,
}

impl SharedEdge {
    fn ends(self, shared: &[Point; 3]) -> (Point, Point) {
        match self {
            SharedEdge::AB => (shared[0], shared[1]),
            SharedEdge::BC => (shared[1], shared[2]),
            SharedEdge::AC => (shared[0], shared[2]),
        }
    }

    /// Sign of this member's density relative to `AB` in any cell `A, B, C, X`
    /// once each is multiplied by its area `f(P, Q, X)`.
    fn sigma(self) -> f64 {
        match self {
            SharedEdge::AB | SharedEdge::BC => 1.0,
            SharedEdge::AC => -1.0,
        }
    }
}

/// A member to be removed and the density it currently carries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemovedDensity {
    pub edge: SharedEdge,
    pub t: f64,
}

/// How to pick a point on the admissible set when it is not a single point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlacementFix {
    /// With one removal this is the node; with two it is projected onto the
    /// placement line.
    Point(Point),
    X(f64),
    Y(f64),
}

/// The line `a x + b y = c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Line {
    pub fn eval(&self, p: Point) -> f64 {
        self.a * p.x + self.b * p.y - self.c
    }

    fn project(&self, p: Point) -> Point {
        let n2 = self.a * self.a + self.b * self.b;
        let s = self.eval(p) / n2;
        Point { x: p.x - s * self.a, y: p.y - s * self.b }
    }

    fn intersect(&self, other: &Line) -> Option<Point> {
        let det = self.a * other.b - self.b * other.a;
        let scale = (self.a.hypot(self.b)) * (other.a.hypot(other.b));
        if det.abs() <= 1e-12 * scale {
            return None;
        }
        Some(Point {
            x: (self.c * other.b - self.b * other.c) / det,
            y: (self.a * other.c - self.c * other.a) / det,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionPlacement {
    pub point: Point,
    /// The admissible line for exactly two removals.
    pub line: Option<Line>,
    /// First density (member `AB`) of the new cell `A, B, C, point` such that
    /// `alpha * t + w = 0` on every removed member.
    pub cell_w1: f64,
}

/// `f(p, q, X)` as the affine form `a x + b y + c0`.
fn area_form(p: Point, q: Point) -> (f64, f64, f64) {
    let d = q - p;
    (-d.y, d.x, d.y * p.x - d.x * p.y)
}

/// Line on which `t_e f_e(X) sigma_e = t_g f_g(X) sigma_g`.
fn cancel_line(shared: &[Point; 3], e: RemovedDensity, g: RemovedDensity) -> Result<Line> {
    let (pe, qe) = e.edge.ends(shared);
    let (pg, qg) = g.edge.ends(shared);
    let fe = area_form(pe, qe);
    let fg = area_form(pg, qg);
    let ke = e.edge.sigma() * e.t;
    let kg = g.edge.sigma() * g.t;
    let a = ke * fe.0 - kg * fg.0;
    let b = ke * fe.1 - kg * fg.1;
    let c0 = ke * fe.2 - kg * fg.2;
    let scale = (ke.abs() + kg.abs()) * coordinate_span(shared);
    if a.hypot(b) <= 1e-12 * scale {
        return Err(Error::NoSolution("placement equation is degenerate"));
    }
    Ok(Line { a, b, c: -c0 })
}

/// Position of the new node `X` of a cell `A, B, C, X` fused onto existing
/// nodes `A, B, C` while removing 1 to 3 of the triangle members.
pub fn place_fusion_node(
    shared: [Point; 3],
    removed: &[RemovedDensity],
    alpha: f64,
    fix: Option<PlacementFix>,
) -> Result<FusionPlacement> {
    let tol = Tolerance::default();
    if crate::geom::find_collinear_triple(&shared, tol).is_some() {
        return Err(Error::DegeneratePosition([0, 1, 2]));
    }
    if removed.is_empty() {
        return Err(Error::NoRemovals);
    }
    if removed.len() > 3 {
        return Err(Error::NoSolution("at most three members can be removed"));
    }
    for (k, r) in removed.iter().enumerate() {
        if removed[..k].iter().any(|o| o.edge == r.edge) {
            return Err(Error::NoSolution("member listed twice"));
        }
    }
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::NoSolution("alpha must be nonzero"));
    }
    if removed.iter().any(|r| r.t == 0.0 || !r.t.is_finite()) {
        return Err(Error::NoSolution("removed member carries no density"));
    }

    let (point, line) = match removed.len() {
        1 => match fix {
            Some(PlacementFix::Point(p)) => (p, None),
            _ => return Err(Error::NoSolution("one removal needs an explicit point")),
        },
        2 => {
            let line = cancel_line(&shared, removed[0], removed[1])?;
            let point = match fix {
                Some(PlacementFix::Point(p)) => line.project(p),
                Some(PlacementFix::X(x)) => {
                    if line.b.abs() <= 1e-12 * line.a.abs() {
                        return Err(Error::NoSolution("placement line is vertical"));
                    }
                    Point { x, y: (line.c - line.a * x) / line.b }
                }
                Some(PlacementFix::Y(y)) => {
                    if line.a.abs() <= 1e-12 * line.b.abs() {
                        return Err(Error::NoSolution("placement line is horizontal"));
                    }
                    Point { x: (line.c - line.b * y) / line.a, y }
                }
                None => {
                    // Centroid of the shared triangle projected onto the line.
                    let g = (shared[0] + shared[1] + shared[2]) * (1.0 / 3.0);
                    line.project(g)
                }
            };
            (point, Some(line))
        }
        _ => {
            let l1 = cancel_line(&shared, removed[0], removed[1])?;
            let l2 = cancel_line(&shared, removed[0], removed[2])?;
            let p = l1.intersect(&l2).ok_or(Error::NoSolution("placement lines are parallel"))?;
            (p, None)
        }
    };
    if !point.x.is_finite() || !point.y.is_finite() {
        return Err(Error::NoSolution("placement is not finite"));
    }
    if crate::geom::find_collinear_triple(&[shared[0], shared[1], shared[2], point], tol).is_some() {
        return Err(Error::DegenerateResult);
    }

    // w_e = K sigma_e / f_e(X); cancellation fixes K from the first removal.
    let r0 = removed[0];
    let (p0, q0) = r0.edge.ends(&shared);
    let k = -alpha * r0.t * r0.edge.sigma() * affine_area_f(p0, q0, point);
    let cell_w1 = k / affine_area_f(shared[0], shared[1], point);
    Ok(FusionPlacement { point, line, cell_w1 })
}

/// Densities of the new cell on `AB, BC, AC` for a placement, for checking.
pub fn fused_cell_densities(shared: [Point; 3], placement: &FusionPlacement) -> Result<[f64; 3]> {
    let s = cell_selfstress(shared[0], shared[1], shared[2], placement.point, placement.cell_w1)?;
    Ok([s.w[0], s.w[1], s.w[4]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NodeId;

    fn p(x: f64, y: f64) -> NodeRef {
        NodeRef::Point(Point::new(x, y))
    }

    fn n(id: u32) -> NodeRef {
        NodeRef::Node(NodeId(id))
    }

    #[test]
    fn fig5_rows() {
        assert_eq!(delta_dim(5, 2), 1);
        assert_eq!(delta_dim(4, 2), 0);
        assert_eq!(delta_dim(4, 1), 2);
        assert_eq!(delta_dim(-2, 0), -2);
        assert_eq!(delta_dim(6, 0), 6);
        assert_eq!(delta_dim(0, 0), 0);
    }

    #[test]
    fn laman_of_empty_and_single_cell() {
        let mut s = Structure::new();
        assert_eq!(laman_bound(&s), 0);
        adhere(&mut s, &CellSpec::new([p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)])).unwrap();
        assert_eq!(laman_bound(&s), 1);
        assert_eq!(degrees_of_freedom(&s, 1), 0);
    }

    #[test]
    fn adhesion_deltas() {
        let mut s = Structure::new();
        let (_, d) = adhere(&mut s, &CellSpec::new([p(-2., -1.), p(0., -1.5), p(0., 0.), p(-1.5, 1.)])).unwrap();
        assert_eq!((d.e_i, d.v_i), (6, 4));
        let (_, d) = adhere(&mut s, &CellSpec::new([n(2), n(3), p(1.5, 1.), p(2., -1.)])).unwrap();
        assert_eq!((d.e_i, d.v_i, d.delta_dim), (5, 2, 1));
        assert_eq!(laman_bound(&s), 2);
        let (_, d) = adhere(&mut s, &CellSpec::new([n(3), n(4), p(0., 2.5), n(5)])).unwrap();
        assert_eq!((d.e_i, d.v_i, d.delta_dim), (4, 1, 2));
        assert_eq!(laman_bound(&s), 4);
        // All four corners existing, no member shared.
        let mut s = Structure::new();
        adhere(&mut s, &CellSpec::new([p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)])).unwrap();
        adhere(&mut s, &CellSpec::new([n(1), n(2), p(0.2, -1.0), p(0.9, -1.1)])).unwrap();
        adhere(&mut s, &CellSpec::new([n(3), n(4), p(0.8, 2.0), p(0.1, 2.1)])).unwrap();
        adhere(&mut s, &CellSpec::new([n(2), n(3), p(2.0, 0.3), p(2.1, 0.9)])).unwrap();
        adhere(&mut s, &CellSpec::new([n(4), n(1), p(-1.0, 0.7), p(-1.1, 0.2)])).unwrap();
        let (_, d) = adhere(&mut s, &CellSpec::new([n(5), n(9), n(7), n(11)])).unwrap();
        assert_eq!((d.e_i, d.v_i, d.delta_dim), (6, 0, 6));
    }

    #[test]
    fn fuse_one_removal() {
        let mut s = Structure::new();
        adhere(&mut s, &CellSpec::new([p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)])).unwrap();
        let m = s.member_between(NodeId(2), NodeId(3)).unwrap();
        let out = fuse(&mut s, &CellSpec::new([n(2), n(3), p(2., 1.2), p(2.2, -0.1)]), &[m]).unwrap();
        assert_eq!((out.delta.e_i, out.delta.v_i, out.delta.delta_dim), (4, 2, 0));
        assert!(!out.placement_dependent);
        assert_eq!(out.record.removed_member_ids, vec![m]);
    }

    #[test]
    fn fuse_rejects_two_removals_with_two_shared_nodes() {
        let mut s = Structure::new();
        adhere(&mut s, &CellSpec::new([p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)])).unwrap();
        let before = s.clone();
        let err = fuse(&mut s, &CellSpec::new([n(2), n(3), p(2., 1.2), p(2.2, -0.1)]), &[MemberId(1), MemberId(2)]);
        assert_eq!(err.unwrap_err(), Error::TooManyRemovals { removals: 2, shared: 2 });
        assert_eq!(s, before);
        assert_eq!(fuse(&mut s, &CellSpec::new([n(2), n(3), p(2., 1.2), p(2.2, -0.1)]), &[]).unwrap_err(), Error::NoRemovals);
    }

    #[test]
    fn fuse_then_restore_recomposes_adhesion() {
        let base = {
            let mut s = Structure::new();
            adhere(&mut s, &CellSpec::new([p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)])).unwrap();
            s
        };
        let spec = CellSpec::new([n(2), n(3), p(2., 1.2), p(2.2, -0.1)]);
        let mut a = base.clone();
        let (_, da) = adhere(&mut a, &spec).unwrap();
        let mut f = base.clone();
        let m = f.member_between(NodeId(2), NodeId(3)).unwrap();
        let out = fuse(&mut f, &spec, &[m]).unwrap();
        f.restore_member(m).unwrap();
        assert_eq!(out.delta.e_i + 1, da.e_i);
        assert_eq!(out.delta.v_i, da.v_i);
        assert_eq!(laman_bound(&f), laman_bound(&a));
    }

    #[test]
    fn ledger_tracks_laman_bound() {
        let mut s = Structure::new();
        let mut ledger = DimensionLedger::default();
        for spec in [
            CellSpec::new([p(-2., -1.), p(0., -1.5), p(0., 0.), p(-1.5, 1.)]),
            CellSpec::new([n(2), n(3), p(1.5, 1.), p(2., -1.)]),
            CellSpec::new([n(3), n(4), p(0., 2.5), n(5)]),
        ] {
            let (_, d) = adhere(&mut s, &spec).unwrap();
            ledger.push(d);
            assert_eq!(ledger.running_dim(), laman_bound(&s));
        }
    }

    #[test]
    fn fig4_line_passes_through_b_and_d() {
        let (a, b, c, d) = (Point::new(0., 0.), Point::new(2., 0.2), Point::new(1.7, 1.9), Point::new(0.1, 1.4));
        let s = cell_selfstress(a, b, c, d, 1.0).unwrap();
        let removed = [
            RemovedDensity { edge: SharedEdge::AB, t: s.w[0] },
            RemovedDensity { edge: SharedEdge::BC, t: s.w[1] },
        ];
        let placed = place_fusion_node([a, b, c], &removed, 1.0, Some(PlacementFix::Point(Point::new(3., 3.)))).unwrap();
        let e = placed.point;
        let span = coordinate_span(&[b, d, e]);
        assert!(affine_area_f(b, d, e).abs() <= 1e-9 * span * span);
        let line = placed.line.unwrap();
        assert!(line.eval(b).abs() < 1e-12 && line.eval(d).abs() < 1e-12);
        let w = fused_cell_densities([a, b, c], &placed).unwrap();
        assert!((w[0] + s.w[0]).abs() < 1e-12 && (w[1] + s.w[1]).abs() < 1e-12);
    }

    #[test]
    fn placement_errors() {
        let tri = [Point::new(0., 0.), Point::new(1., 0.), Point::new(0., 1.)];
        let one = [RemovedDensity { edge: SharedEdge::AB, t: 1.0 }];
        assert!(matches!(place_fusion_node(tri, &one, 0.0, Some(PlacementFix::Point(Point::new(2., 2.)))), Err(Error::NoSolution(_))));
        assert!(matches!(place_fusion_node(tri, &one, 1.0, None), Err(Error::NoSolution(_))));
        assert_eq!(
            place_fusion_node(tri, &one, 1.0, Some(PlacementFix::Point(Point::new(2., 0.)))).unwrap_err(),
            Error::DegenerateResult
        );
        let zero = [RemovedDensity { edge: SharedEdge::AB, t: 0.0 }, RemovedDensity { edge: SharedEdge::BC, t: 1.0 }];
        assert!(matches!(place_fusion_node(tri, &zero, 1.0, None), Err(Error::NoSolution(_))));
    }
}
