//! Wheels: a centre joined by spokes to a cycle of peripheral nodes. A wheel
//! in general position carries exactly one self-stress, given in closed form
//! by ratios of affine areas.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::linalg::OrthoSet;
use super::{relative_residual, FullState, RESIDUAL_TOL};
use crate::error::{Error, Result};
use crate::geom::{affine_area_f, coordinate_span, Point, Tolerance};
use crate::model::{MemberId, NodeId, Structure};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WheelSpec {
    pub center: NodeId,
    /// Peripheral nodes in cyclic order; rim member `k` joins entries `k` and
    /// `k + 1` (wrapping).
    pub periphery: Vec<NodeId>,
}

/// A wheel found by the search together with its state over all members
/// ever created (index `id - 1`), which may involve removed members.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualWheel {
    pub spec: WheelSpec,
    pub state: Vec<f64>,
}

/// Rim densities `t_k` (member `P_k P_k+1`) and spoke densities `c_k`
/// (member `C P_k`) with `t_0 = t1`. `Err(k)` names the first rim position
/// with a vanishing area.
pub(crate) fn densities(center: Point, rim: &[Point], t1: f64) -> std::result::Result<(Vec<f64>, Vec<f64>), usize> {
    let n = rim.len();
    let tol = Tolerance::default();
    let next = |k: usize| rim[(k + 1) % n];
    let prev = |k: usize| rim[(k + n - 1) % n];
    let mut sector = Vec::with_capacity(n);
    for k in 0..n {
        let f = affine_area_f(center, rim[k], next(k));
        let span = coordinate_span(&[center, rim[k], next(k)]);
        if f.abs() <= tol.rel_eps * span * span {
            return Err(k);
        }
        sector.push(f);
    }
    // t_k f(C, P_k, P_k+1) is the same for every k.
    let t: Vec<f64> = (0..n).map(|k| t1 * (sector[0] / sector[k])).collect();
    let c = (0..n)
        .map(|k| -t[k] * affine_area_f(prev(k), rim[k], next(k)) / sector[(k + n - 1) % n])
        .collect();
    Ok((t, c))
}

fn wheel_members(
    structure: &Structure,
    wheel: &WheelSpec,
    lookup: impl Fn(NodeId, NodeId) -> Option<MemberId>,
) -> Result<(Vec<MemberId>, Vec<MemberId>)> {
    let n = wheel.periphery.len();
    let mut rim = Vec::with_capacity(n);
    let mut spokes = Vec::with_capacity(n);
    for k in 0..n {
        let (p, q) = (wheel.periphery[k], wheel.periphery[(k + 1) % n]);
        structure.node(p)?;
        rim.push(lookup(p, q).ok_or(Error::UnknownPair(p, q))?);
        spokes.push(lookup(wheel.center, p).ok_or(Error::UnknownPair(wheel.center, p))?);
    }
    Ok((rim, spokes))
}

fn wheel_state(
    structure: &Structure,
    wheel: &WheelSpec,
    t1: f64,
    historical: bool,
) -> Result<(Vec<MemberId>, Vec<f64>)> {
    if wheel.periphery.len() < 3 {
        return Err(Error::WheelTooSmall(wheel.center));
    }
    let (rim, spokes) = if historical {
        wheel_members(structure, wheel, |a, b| structure.any_member_between(a, b))?
    } else {
        wheel_members(structure, wheel, |a, b| structure.member_between(a, b))?
    };
    let center = structure.point(wheel.center)?;
    let pts: Vec<Point> = wheel.periphery.iter().map(|&p| structure.point(p)).collect::<Result<_>>()?;
    let (t, c) = densities(center, &pts, t1)
        .map_err(|position| Error::DegenerateWheel { center: wheel.center, position })?;
    let members: Vec<MemberId> = rim.iter().chain(&spokes).copied().collect();
    let values: Vec<f64> = t.iter().chain(&c).copied().collect();
    let residual = relative_residual(structure, &members, &values);
    if !(residual <= RESIDUAL_TOL) {
        return Err(Error::ClosureFailure { center: wheel.center, residual });
    }
    Ok((members, values))
}

/// Analytic self-stress of a wheel of active members, ordered like the rows
/// of a basis (active members in id order).
pub fn wheel_selfstress(structure: &Structure, wheel: &WheelSpec, t1: f64) -> Result<Vec<f64>> {
    let (members, values) = wheel_state(structure, wheel, t1, false)?;
    let mut state = vec![0.0; structure.members().len()];
    for (m, v) in members.iter().zip(values) {
        state[m.index()] = v;
    }
    Ok(structure.active_members().map(|m| state[m.id.index()]).collect())
}

/// Closed-form wheel state used by the densities check in tests.
pub fn wheel_densities(structure: &Structure, wheel: &WheelSpec, t1: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (_, values) = wheel_state(structure, wheel, t1, false)?;
    let n = wheel.periphery.len();
    Ok((values[..n].to_vec(), values[n..].to_vec()))
}

fn full_wheel_state(structure: &Structure, wheel: &WheelSpec) -> Result<FullState> {
    let (members, values) = wheel_state(structure, wheel, 1.0, true)?;
    let mut state = DVector::zeros(structure.members().len());
    for (m, v) in members.iter().zip(values) {
        state[m.index()] += v;
    }
    Ok(state)
}

/// Adjacency over every member ever created.
fn historical_adjacency(structure: &Structure) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
    let mut adj: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for m in structure.members() {
        adj.entry(m.ends.0).or_default().insert(m.ends.1);
        adj.entry(m.ends.1).or_default().insert(m.ends.0);
    }
    adj
}

const MAX_RIM_SEARCH: usize = 16;

/// Orders `nodes` into a cycle of existing members, trying the angular order
/// around `center` first.
fn find_rim(
    structure: &Structure,
    adj: &BTreeMap<NodeId, BTreeSet<NodeId>>,
    center: NodeId,
    nodes: &[NodeId],
) -> Option<Vec<NodeId>> {
    let joined = |a: NodeId, b: NodeId| adj.get(&a).is_some_and(|s| s.contains(&b));
    let c = structure.point(center).ok()?;
    let mut angular = nodes.to_vec();
    angular.sort_by(|&a, &b| {
        let pa = structure.nodes()[a.index()].point - c;
        let pb = structure.nodes()[b.index()].point - c;
        pa.y.atan2(pa.x).total_cmp(&pb.y.atan2(pb.x))
    });
    let n = angular.len();
    if (0..n).all(|k| joined(angular[k], angular[(k + 1) % n])) {
        return Some(angular);
    }
    if n > MAX_RIM_SEARCH {
        return None;
    }
    // Hamiltonian cycle by backtracking.
    fn extend(
        path: &mut Vec<NodeId>,
        used: &mut Vec<bool>,
        nodes: &[NodeId],
        joined: &dyn Fn(NodeId, NodeId) -> bool,
    ) -> bool {
        if path.len() == nodes.len() {
            return joined(path[path.len() - 1], path[0]);
        }
        let last = path[path.len() - 1];
        for i in 0..nodes.len() {
            if !used[i] && joined(last, nodes[i]) {
                used[i] = true;
                path.push(nodes[i]);
                if extend(path, used, nodes, joined) {
                    return true;
                }
                path.pop();
                used[i] = false;
            }
        }
        false
    }
    let mut path = vec![angular[0]];
    let mut used = vec![false; n];
    used[0] = true;
    if extend(&mut path, &mut used, &angular, &joined) {
        Some(path)
    } else {
        None
    }
}

/// Wheel search over the history of the structure. Accepted wheels are
/// pushed into `ortho`; at most `limit` are returned.
pub(crate) fn search_wheels(structure: &Structure, ortho: &mut OrthoSet, limit: usize) -> Vec<(WheelSpec, FullState)> {
    let mut found = Vec::new();
    if limit == 0 {
        return found;
    }
    let adj = historical_adjacency(structure);
    let mut cells_at: BTreeMap<NodeId, usize> = BTreeMap::new();
    for cell in structure.actual_cells() {
        for &n in &cell.node_ids {
            *cells_at.entry(n).or_default() += 1;
        }
    }
    let mut candidates: Vec<(usize, NodeId)> = adj.iter().map(|(&n, s)| (s.len(), n)).collect();
    candidates.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, center) in candidates {
        if cells_at.get(&center).copied().unwrap_or(0) < 2 {
            continue;
        }
        let ring: Vec<NodeId> = adj[&center]
            .iter()
            .copied()
            .filter(|n| cells_at.get(n).copied().unwrap_or(0) >= 2)
            .collect();
        if ring.len() < 3 {
            continue;
        }
        let Some(periphery) = find_rim(structure, &adj, center, &ring) else {
            continue;
        };
        let spec = WheelSpec { center, periphery };
        let Ok(state) = full_wheel_state(structure, &spec) else {
            continue;
        };
        if ortho.try_push(&state) {
            found.push((spec, state));
            if found.len() == limit {
                break;
            }
        }
    }
    found
}

/// Wheels in the structure history whose states are independent of the
/// actual cell states and of each other, stopping once cells plus wheels
/// reach the Laman bound of the historical framework.
pub fn find_virtual_cells_wheel(structure: &Structure) -> Vec<VirtualWheel> {
    let mut ortho = OrthoSet::new(super::basis::INDEPENDENCE_TOL);
    let mut cells = 0;
    for cell in structure.actual_cells() {
        if let Ok(v) = super::basis::cell_state_full(structure, cell) {
            if ortho.try_push(&v) {
                cells += 1;
            }
        }
    }
    let limit = super::basis::historical_bound(structure).saturating_sub(cells);
    search_wheels(structure, &mut ortho, limit)
        .into_iter()
        .map(|(spec, state)| VirtualWheel { spec, state: state.iter().copied().collect() })
        .collect()
}
