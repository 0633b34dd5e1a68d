//! Meshing of a profile into cell slots.

use std::f64::consts::{PI, TAU};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cells::CellType;
use crate::error::{Error, Result};
use crate::geom::{
    coordinate_span, orientation, point_in_polygon, polygon_area, segments_intersect, Orientation, Point, Tolerance,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Profile {
    Circle { radius: f64 },
    Ellipse { a: f64, b: f64 },
    Polygon { points: Vec<Point> },
}

impl Profile {
    pub fn validate(&self) -> Result<()> {
        match self {
            Profile::Circle { radius } if !(*radius > 0.0 && radius.is_finite()) => {
                Err(Error::InvalidProfile(format!("radius {radius} must be positive")))
            }
            Profile::Ellipse { a, b } if !(*a > 0.0 && *b > 0.0 && a.is_finite() && b.is_finite()) => {
                Err(Error::InvalidProfile(format!("axes ({a}, {b}) must be positive")))
            }
            Profile::Polygon { points } => {
                let n = points.len();
                if n < 3 {
                    return Err(Error::InvalidProfile("a polygon needs at least 3 vertices".into()));
                }
                if polygon_area(points) <= 0.0 {
                    return Err(Error::InvalidProfile("polygon must be counter-clockwise".into()));
                }
                for i in 0..n {
                    for j in i + 1..n {
                        let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                        if !adjacent
                            && segments_intersect(points[i], points[(i + 1) % n], points[j], points[(j + 1) % n])
                        {
                            return Err(Error::InvalidProfile("polygon is not simple".into()));
                        }
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Semi-axes of the bounding ellipse for round profiles.
    fn axes(&self) -> Option<(f64, f64)> {
        match self {
            Profile::Circle { radius } => Some((*radius, *radius)),
            Profile::Ellipse { a, b } => Some((*a, *b)),
            Profile::Polygon { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshKind {
    Tri,
    Quad,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshBudget {
    /// Number of faces, hence of cells.
    Faces(usize),
    /// Number of mesh nodes before face centres are added.
    Nodes(usize),
}

/// One cell slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Face {
    /// Corner node indices in cyclic order (3 or 4).
    pub corners: Vec<usize>,
    pub kind: CellType,
    /// Interior node of a triangular slot.
    pub center: Option<usize>,
}

impl Face {
    /// The four nodes of the cell filling this slot.
    pub fn cell_nodes(&self) -> [usize; 4] {
        match self.center {
            Some(c) => [self.corners[0], self.corners[1], self.corners[2], c],
            None => [self.corners[0], self.corners[1], self.corners[2], self.corners[3]],
        }
    }

    pub(crate) fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.corners.len();
        (0..n)
            .map(|k| {
                let (a, b) = (self.corners[k], self.corners[(k + 1) % n]);
                (a.min(b), a.max(b))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshPlan {
    pub nodes: Vec<Point>,
    pub faces: Vec<Face>,
}

impl MeshPlan {
    pub fn count(&self, kind: CellType) -> usize {
        self.faces.iter().filter(|f| f.kind == kind).count()
    }

    /// Mesh nodes (face centres excluded) that are shared by at least two
    /// faces and lie off the boundary of the meshed region.
    pub fn interior_shared_nodes(&self) -> Vec<usize> {
        let mut faces_at = vec![0usize; self.nodes.len()];
        let mut edge_count = std::collections::BTreeMap::new();
        for f in &self.faces {
            for &c in &f.corners {
                faces_at[c] += 1;
            }
            for e in f.edges() {
                *edge_count.entry(e).or_insert(0usize) += 1;
            }
        }
        let mut on_boundary = vec![false; self.nodes.len()];
        for (&(a, b), &count) in &edge_count {
            if count == 1 {
                on_boundary[a] = true;
                on_boundary[b] = true;
            }
        }
        (0..self.nodes.len()).filter(|&i| faces_at[i] >= 2 && !on_boundary[i]).collect()
    }
}

fn jitter(rng: &mut ChaCha8Rng, amplitude: f64) -> Point {
    Point { x: amplitude * (rng.random::<f64>() - 0.5), y: amplitude * (rng.random::<f64>() - 0.5) }
}

/// Boundary count `h` and interior count `i` of a disk triangulation with
/// `faces = h + 2 i - 2` triangles.
fn tri_split(faces: usize) -> (usize, usize) {
    let mut h = ((TAU * faces as f64).sqrt().round() as usize).clamp(3, faces + 2);
    if (faces + 2 - h) % 2 == 1 {
        h = if h < faces + 2 { h + 1 } else { h - 1 };
    }
    (h, (faces + 2 - h) / 2)
}

fn triangulate(points: &[Point]) -> Vec<[usize; 3]> {
    let pts: Vec<delaunator::Point> = points.iter().map(|p| delaunator::Point { x: p.x, y: p.y }).collect();
    let t = delaunator::triangulate(&pts);
    t.triangles.chunks(3).map(|c| [c[0], c[1], c[2]]).collect()
}

fn ccw(points: &[Point], tri: [usize; 3]) -> Option<[usize; 3]> {
    match orientation(points[tri[0]], points[tri[1]], points[tri[2]], Tolerance::default()) {
        Orientation::Ccw => Some(tri),
        Orientation::Cw => Some([tri[0], tri[2], tri[1]]),
        Orientation::Collinear => None,
    }
}

fn tri_faces(mut nodes: Vec<Point>, tris: Vec<[usize; 3]>) -> Result<MeshPlan> {
    let mut faces = Vec::with_capacity(tris.len());
    for tri in tris {
        let tri = ccw(&nodes, tri).ok_or_else(|| Error::UnsupportedMesh("degenerate triangle in mesh".into()))?;
        let c = (nodes[tri[0]] + nodes[tri[1]] + nodes[tri[2]]) * (1.0 / 3.0);
        faces.push(Face { corners: tri.to_vec(), kind: CellType::TypeII, center: Some(nodes.len()) });
        nodes.push(c);
    }
    Ok(MeshPlan { nodes, faces })
}

/// Sunflower sample of the unit disk clear of the boundary ring.
fn disk_interior(count: usize, boundary: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let golden = PI * (3.0 - 5f64.sqrt());
    let gap = TAU / boundary as f64;
    let rmax = (1.0 - 0.6 * gap).max(0.3);
    (0..count)
        .map(|k| {
            let r = rmax * ((k as f64 + 0.5) / count as f64).sqrt();
            let a = k as f64 * golden;
            Point { x: r * a.cos(), y: r * a.sin() } + jitter(rng, 1e-3 * gap)
        })
        .collect()
}

fn round_tri(a: f64, b: f64, faces: usize, rng: &mut ChaCha8Rng) -> Result<MeshPlan> {
    let (h, i) = tri_split(faces);
    let mut pts: Vec<Point> = (0..h)
        .map(|k| {
            let t = TAU * k as f64 / h as f64;
            Point { x: t.cos(), y: t.sin() }
        })
        .collect();
    pts.extend(disk_interior(i, h, rng));
    let pts: Vec<Point> = pts.into_iter().map(|p| Point { x: a * p.x, y: b * p.y }).collect();
    let tris = triangulate(&pts);
    if tris.len() != faces {
        return Err(Error::UnsupportedMesh(format!("triangulation produced {} faces, expected {faces}", tris.len())));
    }
    tri_faces(pts, tris)
}

fn polygon_tri(poly: &[Point], faces: usize, rng: &mut ChaCha8Rng) -> Result<MeshPlan> {
    let area = polygon_area(poly);
    let step = (1.6 * area / faces as f64).sqrt();
    let mut pts = Vec::new();
    let n = poly.len();
    for k in 0..n {
        let (p, q) = (poly[k], poly[(k + 1) % n]);
        let pieces = ((p.distance(q) / step).round() as usize).max(1);
        for s in 0..pieces {
            pts.push(p + (q - p) * (s as f64 / pieces as f64));
        }
    }
    let span = coordinate_span(poly);
    let (minx, miny) = poly.iter().fold((f64::MAX, f64::MAX), |(x, y), p| (x.min(p.x), y.min(p.y)));
    let cells = (span / step).ceil() as usize + 1;
    for r in 0..=cells {
        for c in 0..=cells {
            let offset = if r % 2 == 1 { 0.5 * step } else { 0.0 };
            let q = Point { x: minx + c as f64 * step + offset, y: miny + r as f64 * step * 0.866 } + jitter(rng, 1e-3 * step);
            let clear = (0..n).all(|k| distance_to_segment(q, poly[k], poly[(k + 1) % n]) > 0.45 * step);
            if point_in_polygon(q, poly) && clear {
                pts.push(q);
            }
        }
    }
    let tris: Vec<[usize; 3]> = triangulate(&pts)
        .into_iter()
        .filter(|t| point_in_polygon((pts[t[0]] + pts[t[1]] + pts[t[2]]) * (1.0 / 3.0), poly))
        .collect();
    let centroid = poly.iter().fold(Point { x: 0.0, y: 0.0 }, |acc, p| acc + *p) * (1.0 / n as f64);
    let (pts, tris) = keep_connected(pts, tris, faces, centroid)?;
    tri_faces(pts, tris)
}

/// Exactly `faces` edge-connected triangles grown breadth-first from the
/// one closest to `seed_point`, with unused points dropped.
fn keep_connected(pts: Vec<Point>, tris: Vec<[usize; 3]>, faces: usize, seed_point: Point) -> Result<(Vec<Point>, Vec<[usize; 3]>)> {
    if tris.len() < faces {
        return Err(Error::BudgetTooSmall(format!("polygon meshed into {} triangles, {faces} requested", tris.len())));
    }
    let center = |t: &[usize; 3]| (pts[t[0]] + pts[t[1]] + pts[t[2]]) * (1.0 / 3.0);
    let first = (0..tris.len())
        .min_by(|&i, &j| center(&tris[i]).distance(seed_point).total_cmp(&center(&tris[j]).distance(seed_point)))
        .expect("at least one triangle");
    let mut by_edge: std::collections::BTreeMap<(usize, usize), Vec<usize>> = std::collections::BTreeMap::new();
    for (k, t) in tris.iter().enumerate() {
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            by_edge.entry((a.min(b), a.max(b))).or_default().push(k);
        }
    }
    let mut seen = vec![false; tris.len()];
    let mut order = Vec::with_capacity(faces);
    let mut queue = std::collections::VecDeque::from([first]);
    seen[first] = true;
    while let Some(k) = queue.pop_front() {
        if order.len() == faces {
            break;
        }
        order.push(k);
        let t = tris[k];
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            for &g in &by_edge[&(a.min(b), a.max(b))] {
                if !seen[g] {
                    seen[g] = true;
                    queue.push_back(g);
                }
            }
        }
    }
    if order.len() < faces {
        return Err(Error::DisconnectedMesh);
    }
    let mut remap = vec![usize::MAX; pts.len()];
    let mut kept = Vec::new();
    let mut out = Vec::with_capacity(faces);
    for k in order {
        out.push(tris[k].map(|i| {
            if remap[i] == usize::MAX {
                remap[i] = kept.len();
                kept.push(pts[i]);
            }
            remap[i]
        }));
    }
    Ok((kept, out))
}

fn distance_to_segment(p: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    let len2 = d.dot(d);
    let t = if len2 == 0.0 { 0.0 } else { ((p - a).dot(d) / len2).clamp(0.0, 1.0) };
    p.distance(a + d * t)
}

fn inside(profile: &Profile, p: Point) -> bool {
    match profile {
        Profile::Polygon { points } => point_in_polygon(p, points),
        _ => {
            let (a, b) = profile.axes().unwrap_or((1.0, 1.0));
            (p.x / a).powi(2) + (p.y / b).powi(2) < 1.0
        }
    }
}

fn bounds(profile: &Profile) -> (Point, Point) {
    match profile {
        Profile::Polygon { points } => points.iter().fold(
            (Point { x: f64::MAX, y: f64::MAX }, Point { x: f64::MIN, y: f64::MIN }),
            |(lo, hi), p| (Point { x: lo.x.min(p.x), y: lo.y.min(p.y) }, Point { x: hi.x.max(p.x), y: hi.y.max(p.y) }),
        ),
        _ => {
            let (a, b) = profile.axes().unwrap_or((1.0, 1.0));
            (Point { x: -a, y: -b }, Point { x: a, y: b })
        }
    }
}

fn quad_mesh(profile: &Profile, faces: usize, rng: &mut ChaCha8Rng) -> Result<MeshPlan> {
    let (lo, hi) = bounds(profile);
    let centre = (lo + hi) * 0.5;
    let extent = (hi.x - lo.x).max(hi.y - lo.y);
    let mut divisions = ((faces as f64).sqrt().ceil() as usize).max(1);
    loop {
        if divisions > 64 * (faces + 1) {
            return Err(Error::BudgetTooSmall("profile cannot hold the requested quads".into()));
        }
        let step = extent / divisions as f64;
        let cols = ((hi.x - lo.x) / step).ceil() as usize;
        let rows = ((hi.y - lo.y) / step).ceil() as usize;
        let corner = |i: usize, j: usize| Point { x: lo.x + i as f64 * step, y: lo.y + j as f64 * step };
        let mut squares: Vec<(f64, usize, usize)> = Vec::new();
        for j in 0..rows {
            for i in 0..cols {
                let all_in = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)].iter().all(|&(a, b)| inside(profile, corner(a, b)));
                if all_in {
                    let mid = Point { x: lo.x + (i as f64 + 0.5) * step, y: lo.y + (j as f64 + 0.5) * step };
                    squares.push((mid.distance(centre), i, j));
                }
            }
        }
        if squares.len() < faces {
            divisions += 1;
            continue;
        }
        squares.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)).then(a.1.cmp(&b.1)));
        squares.truncate(faces);
        squares.sort_by(|a, b| a.2.cmp(&b.2).then(a.1.cmp(&b.1)));
        let mut index = std::collections::BTreeMap::new();
        let mut nodes = Vec::new();
        let mut out = Vec::new();
        for &(_, i, j) in &squares {
            let mut corners = Vec::with_capacity(4);
            for (a, b) in [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)] {
                let id = *index.entry((a, b)).or_insert_with(|| {
                    nodes.push(corner(a, b) + jitter(rng, 0.02 * step));
                    nodes.len() - 1
                });
                corners.push(id);
            }
            out.push(Face { corners, kind: CellType::TypeI, center: None });
        }
        return Ok(MeshPlan { nodes, faces: out });
    }
}

/// Rotationally symmetric layout of `4 n` slots: a fan of `n` triangles
/// around the centre, a ring of `n` quadrilaterals, `n` triangles between
/// them and `n` outer petals.
fn flower(a: f64, b: f64, sectors: usize) -> Result<MeshPlan> {
    let n = sectors;
    let polar = |r: f64, t: f64| Point { x: a * r * t.cos(), y: b * r * t.sin() };
    let theta = |k: usize| TAU * k as f64 / n as f64;
    let (r1, r2, r3) = (0.42, 0.72, 1.0);
    let mut nodes = vec![Point { x: 0.0, y: 0.0 }];
    let p = |k: usize| 1 + k % n;
    let q = |j: usize| 1 + n + j % (2 * n);
    let r = |k: usize| 1 + 3 * n + k % n;
    for k in 0..n {
        nodes.push(polar(r1, theta(k)));
    }
    for k in 0..n {
        nodes.push(polar(r2, theta(k) + PI / (2 * n) as f64));
        nodes.push(polar(r2, theta(k) + 3.0 * PI / (2 * n) as f64));
    }
    for k in 0..n {
        nodes.push(polar(r3, theta(k) + PI / n as f64));
    }
    let mut tris = Vec::new();
    let mut quads = Vec::new();
    for k in 0..n {
        tris.push([0, p(k), p(k + 1)]);
        quads.push(vec![p(k), p(k + 1), q(2 * k + 1), q(2 * k)]);
        tris.push([p(k + 1), q(2 * k + 1), q(2 * k + 2)]);
        tris.push([q(2 * k), q(2 * k + 1), r(k)]);
    }
    let mut plan = tri_faces(nodes, tris)?;
    for corners in quads {
        plan.faces.push(Face { corners, kind: CellType::TypeI, center: None });
    }
    Ok(plan)
}

/// Meshes a profile into cell slots. Triangles become Type II slots with
/// their centroid as interior node, quadrilaterals become Type I slots.
pub fn mesh_profile(profile: &Profile, budget: MeshBudget, kind: MeshKind, seed: u64) -> Result<MeshPlan> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let faces = match (budget, kind) {
        (MeshBudget::Faces(f), _) => f,
        (MeshBudget::Nodes(n), _) if n < 4 => {
            return Err(Error::BudgetTooSmall(format!("{n} nodes, at least 4 required")));
        }
        (MeshBudget::Nodes(n), MeshKind::Tri) => {
            let h = ((2.0 * TAU * n as f64).sqrt().round() as usize).clamp(3, n);
            h + 2 * (n - h) - 2
        }
        (MeshBudget::Nodes(n), MeshKind::Quad) => {
            let side = (n as f64).sqrt();
            ((side - 1.0).powi(2).round() as usize).max(1)
        }
        (MeshBudget::Nodes(n), MeshKind::Mixed) => 4 * ((n - 1) / 4),
    };
    if faces == 0 {
        return Err(Error::BudgetTooSmall("budget yields no faces".into()));
    }
    match (kind, profile.axes()) {
        (MeshKind::Tri, Some((a, b))) => round_tri(a, b, faces, &mut rng),
        (MeshKind::Tri, None) => match profile {
            Profile::Polygon { points } => polygon_tri(points, faces, &mut rng),
            _ => unreachable!("round profiles have axes"),
        },
        (MeshKind::Quad, _) => quad_mesh(profile, faces, &mut rng),
        (MeshKind::Mixed, Some((a, b))) => {
            if faces % 4 != 0 || faces < 12 {
                return Err(Error::BudgetTooSmall(format!("mixed meshes need a multiple of 4 faces, at least 12, got {faces}")));
            }
            flower(a, b, faces / 4)
        }
        (MeshKind::Mixed, None) => Err(Error::UnsupportedMesh("mixed meshes need a circle or ellipse".into())),
    }
}
