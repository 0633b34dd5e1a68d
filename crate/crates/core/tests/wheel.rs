mod common;

use std::f64::consts::TAU;
use std::time::Instant;

use nalgebra::DVector;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tensegrid_core::cells::MemberGroup;
use tensegrid_core::geom::Point;
use tensegrid_core::model::{Member, MemberId, Node, NodeId, Structure};
use tensegrid_core::stress::{find_virtual_cells_wheel, wheel_densities, wheel_selfstress, WheelSpec};
use tensegrid_core::Error;

/// Wheel with the centre as node 1 and the rim as nodes 2..=n+1.
fn wheel(center: Point, rim: &[Point]) -> (Structure, WheelSpec) {
    let n = rim.len();
    let mut nodes = vec![Node { id: NodeId(1), point: center }];
    nodes.extend(rim.iter().enumerate().map(|(k, &p)| Node { id: NodeId(k as u32 + 2), point: p }));
    let mut pairs: Vec<(u32, u32)> = (0..n).map(|k| (k as u32 + 2, ((k + 1) % n) as u32 + 2)).collect();
    pairs.extend((0..n).map(|k| (1, k as u32 + 2)));
    let members = pairs
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| Member {
            id: MemberId(i as u32 + 1),
            ends: (NodeId(a.min(b)), NodeId(a.max(b))),
            removed: false,
            group: MemberGroup::Unset,
        })
        .collect();
    let s = Structure::from_parts(nodes, members, vec![]).unwrap();
    let spec = WheelSpec { center: NodeId(1), periphery: (0..n).map(|k| NodeId(k as u32 + 2)).collect() };
    (s, spec)
}

fn regular(n: usize) -> Vec<Point> {
    (0..n).map(|k| Point::new((TAU * k as f64 / n as f64).cos(), (TAU * k as f64 / n as f64).sin())).collect()
}

/// Convex rim on an ellipse with sorted random angles and an interior
/// centre drawn as a convex combination of the rim.
fn random_wheel(n: usize, rng: &mut ChaCha8Rng) -> (Point, Vec<Point>) {
    let (a, b) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
    let mut angles: Vec<f64>;
    loop {
        angles = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
        angles.sort_by(f64::total_cmp);
        let gaps_ok = (0..n).all(|k| {
            let next = if k + 1 < n { angles[k + 1] } else { angles[0] + TAU };
            next - angles[k] > 0.15 && next - angles[k] < 0.9 * std::f64::consts::PI
        });
        if gaps_ok {
            break;
        }
    }
    let rim: Vec<Point> = angles.iter().map(|t| Point::new(a * t.cos(), b * t.sin())).collect();
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let total: f64 = weights.iter().sum();
    let center = rim.iter().zip(&weights).fold(Point::new(0.0, 0.0), |acc, (p, w)| acc + *p * (w / total));
    (center, rim)
}

#[test]
fn random_wheels_three_to_twelve() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 3..=12 {
        for _ in 0..50 {
            let (c, rim) = random_wheel(n, &mut rng);
            let (s, spec) = wheel(c, &rim);
            let (pts, pairs) = common::active_framework(&s);
            let a = common::matrix(&pts, &pairs);
            assert_eq!(common::svd_nullity(&a), 1, "n = {n}");
            let w = wheel_selfstress(&s, &spec, 1.0).unwrap();
            let null = common::nullspace(&a);
            assert_eq!(null.ncols(), 1);
            let angle = common::angle_to_span(&null, &DVector::from_column_slice(&w));
            assert!(angle <= 1e-8, "n = {n}: angle {angle}");
            let (t, sp) = wheel_densities(&s, &spec, 1.0).unwrap();
            assert!(t.iter().all(|v| *v > 0.0), "rim {t:?}");
            assert!(sp.iter().all(|v| *v < 0.0), "spokes {sp:?}");
        }
    }
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn regular_polygons_match_radial_balance() {
    // At a rim node of a regular n-gon the two rim members pull it towards
    // the centre with 2 - 2 cos(2 pi / n) times t; the spoke balances that.
    for n in 3..=12 {
        let (s, spec) = wheel(Point::new(0.0, 0.0), &regular(n));
        let (t, c) = wheel_densities(&s, &spec, 1.0).unwrap();
        let expected = -(2.0 - 2.0 * (TAU / n as f64).cos());
        for k in 0..n {
            assert!((t[k] - 1.0).abs() < 1e-12);
            assert!((c[k] - expected).abs() < 1e-12, "n = {n}: {}", c[k]);
        }
    }
}

#[test]
fn hexagon_and_triangle_centroid() {
    let (s, spec) = wheel(Point::new(0.0, 0.0), &regular(6));
    let (t, c) = wheel_densities(&s, &spec, 1.0).unwrap();
    assert!(t.iter().all(|v| (v - 1.0).abs() < 1e-12));
    assert!(c.iter().all(|v| (v + 1.0).abs() < 1e-12));

    let h = 3f64.sqrt() / 2.0;
    let tri = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.5, h)];
    let (s, spec) = wheel(Point::new(0.5, h / 3.0), &tri);
    let (t, c) = wheel_densities(&s, &spec, 2.0).unwrap();
    for k in 0..3 {
        assert!((c[k] + 3.0 * t[k]).abs() < 1e-12);
    }
}

#[test]
fn degenerate_and_small_wheels() {
    let rim = [Point::new(1.0, 0.0), Point::new(0.0, 1.0), Point::new(-1.0, 0.0), Point::new(0.0, -1.0)];
    let (s, spec) = wheel(Point::new(0.5, 0.5), &rim);
    assert!(matches!(wheel_densities(&s, &spec, 1.0), Err(Error::DegenerateWheel { position: 0, .. })));
    let (s, _) = wheel(Point::new(0.0, 0.0), &regular(4));
    let short = WheelSpec { center: NodeId(1), periphery: vec![NodeId(2), NodeId(3)] };
    assert_eq!(wheel_selfstress(&s, &short, 1.0), Err(Error::WheelTooSmall(NodeId(1))));
}

#[test]
fn three_cell_fixture_has_one_wheel() {
    let s = tensegrid_core::fixtures::three_cell();
    let wheels = find_virtual_cells_wheel(&s);
    assert_eq!(wheels.len(), 1);
    assert_eq!(wheels[0].spec.center, NodeId(3));
    let mut rim = wheels[0].spec.periphery.clone();
    rim.sort();
    assert_eq!(rim, vec![NodeId(2), NodeId(4), NodeId(5)]);
}
