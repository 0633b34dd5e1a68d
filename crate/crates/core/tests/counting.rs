mod common;

use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tensegrid_core::fixtures;
use tensegrid_core::geom::Point;
use tensegrid_core::model::{NodeRef, Structure};
use tensegrid_core::multiply::{
    adhere, degrees_of_freedom, fuse, delta_dim, laman_bound, rigidity_report, CellSpec, DimensionLedger, StepDelta,
};
use tensegrid_core::stress::nullity;
use tensegrid_core::Error;

#[test]
fn step_rows() {
    for ((v, e), d) in [((2, 5), 1), ((2, 4), 0), ((1, 4), 2), ((0, -2), -2), ((0, 6), 6)] {
        assert_eq!(delta_dim(e, v), d);
        assert_eq!(StepDelta::new(e, v).delta_dim, d);
    }
}

#[test]
fn three_cell_bounds() {
    let mut s = Structure::new();
    let mut bounds = Vec::new();
    for spec in fixtures::three_cell_steps() {
        adhere(&mut s, &spec).unwrap();
        bounds.push(laman_bound(&s));
        assert_eq!(nullity(&s), common::oracle_nullity(&s));
    }
    assert_eq!(bounds, vec![1, 2, 4]);
}

#[test]
fn one_shared_node_leaves_a_mechanism() {
    let s = fixtures::two_cells_one_node();
    assert_eq!(laman_bound(&s), 1);
    let oracle = common::oracle_nullity(&s);
    assert_eq!(oracle, 2);
    assert_eq!(nullity(&s), oracle);
    assert_eq!(degrees_of_freedom(&s, oracle), 1);
    let r = rigidity_report(&s, oracle);
    assert_eq!((r.laman_bound, r.nullity, r.mechanisms), (1, 2, 1));
}

#[test]
fn one_shared_node_needs_opt_in() {
    let mut s = fixtures::square_cell();
    let spec = CellSpec::new([
        NodeRef::Node(tensegrid_core::model::NodeId(3)),
        NodeRef::Point(Point::new(2.0, 1.2)),
        NodeRef::Point(Point::new(2.1, 2.0)),
        NodeRef::Point(Point::new(1.2, 2.1)),
    ]);
    let before = s.clone();
    assert_eq!(adhere(&mut s, &spec).unwrap_err(), Error::InsufficientSharing { shared: 1 });
    assert_eq!(s, before);
}

#[test]
fn fusion_then_restore_recomposes_the_adhesion_delta() {
    let adhered = fixtures::four_cell_grid();
    let fused = fixtures::four_cell_grid_fused();
    let last = |s: &Structure| s.cells().last().unwrap().clone();
    let spec_nodes = last(&adhered.structure).node_ids;
    let m = fused.any_member(5, 6).unwrap();

    // Replay the last step both ways on the three-cell prefix.
    let mut prefix = Structure::new();
    for cell in &adhered.structure.cells()[..3] {
        let refs = cell.node_ids.iter().map(|&n| match prefix.node(n) {
            Ok(_) => NodeRef::Node(n),
            Err(_) => NodeRef::Point(adhered.structure.point(n).unwrap()),
        });
        let refs: Vec<NodeRef> = refs.collect();
        adhere(&mut prefix, &CellSpec::new([refs[0], refs[1], refs[2], refs[3]])).unwrap();
    }
    let refs = spec_nodes.iter().map(|&n| match prefix.node(n) {
        Ok(_) => NodeRef::Node(n),
        Err(_) => NodeRef::Point(adhered.structure.point(n).unwrap()),
    });
    let refs: Vec<NodeRef> = refs.collect();
    let spec = CellSpec::new([refs[0], refs[1], refs[2], refs[3]]);
    let mut a = prefix.clone();
    let (_, plain) = adhere(&mut a, &spec).unwrap();
    let mut f = prefix.clone();
    let outcome = fuse(&mut f, &spec, &[m]).unwrap();
    assert_eq!(f, fused.structure);
    assert_eq!(outcome.delta.v_i, plain.v_i);
    assert_eq!(outcome.delta.e_i, plain.e_i - 1);
    f.restore_member(m).unwrap();
    assert_eq!(laman_bound(&f), laman_bound(&a));
    assert_eq!(nullity(&f), nullity(&a));
}

/// Random adhesion sequence: each new cell reuses an active member's two
/// nodes, sometimes a third nearby node, and adds fresh points.
fn random_growth(seed: u64, steps: usize) -> (Structure, DimensionLedger) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Structure::new();
    let mut ledger = DimensionLedger::default();
    let jitter = |rng: &mut ChaCha8Rng, r: f64| Point::new(rng.random_range(-r..r), rng.random_range(-r..r));
    let first = [(0.0, 0.0), (1.0, 0.1), (1.1, 1.0), (0.1, 0.9)].map(|(x, y)| NodeRef::Point(Point::new(x, y) + jitter(&mut rng, 0.1)));
    ledger.push(adhere(&mut s, &CellSpec::new(first)).unwrap().1);
    let mut attempts = 0;
    while ledger.steps.len() < steps && attempts < 20 * steps {
        attempts += 1;
        let members = s.active_member_ids();
        let m = s.member(members[rng.random_range(0..members.len())]).unwrap().ends;
        let (pa, pb) = (s.point(m.0).unwrap(), s.point(m.1).unwrap());
        let mid = (pa + pb) * 0.5;
        let refs = if rng.random_range(0..3) == 0 {
            // Third shared node: the nearest other active node.
            let third = s
                .active_node_ids()
                .into_iter()
                .filter(|&n| n != m.0 && n != m.1)
                .min_by(|&x, &y| {
                    let dx = s.point(x).unwrap().distance(mid);
                    let dy = s.point(y).unwrap().distance(mid);
                    dx.total_cmp(&dy)
                });
            let Some(third) = third else { continue };
            [NodeRef::Node(m.0), NodeRef::Node(m.1), NodeRef::Node(third), NodeRef::Point(mid + jitter(&mut rng, 1.5))]
        } else {
            [
                NodeRef::Node(m.0),
                NodeRef::Node(m.1),
                NodeRef::Point(mid + jitter(&mut rng, 1.5)),
                NodeRef::Point(mid + jitter(&mut rng, 1.5)),
            ]
        };
        if let Ok((_, delta)) = adhere(&mut s, &CellSpec::new(refs)) {
            ledger.push(delta);
        }
    }
    (s, ledger)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ledger_tracks_laman_bound(seed in any::<u64>(), steps in 1usize..9) {
        let (s, ledger) = random_growth(seed, steps);
        prop_assert_eq!(ledger.running_dim(), laman_bound(&s));
        let e: i64 = ledger.steps.iter().map(|d| d.e_i).sum();
        let v: i64 = ledger.steps.iter().map(|d| d.v_i).sum();
        prop_assert_eq!(e as usize, s.active_member_ids().len());
        prop_assert_eq!(v as usize, s.active_node_ids().len());
    }

    #[test]
    fn guarded_growth_is_rigid(seed in any::<u64>(), steps in 1usize..9) {
        let (s, ledger) = random_growth(seed, steps);
        let oracle = common::oracle_nullity(&s);
        prop_assert_eq!(nullity(&s), oracle);
        prop_assert_eq!(degrees_of_freedom(&s, oracle), 0);
        prop_assert_eq!(ledger.running_dim(), oracle as i64);
    }
}
