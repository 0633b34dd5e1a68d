mod common;

use proptest::prelude::*;
use tensegrid_core::fixtures;
use tensegrid_core::growgen::{generate, GenerateOptions, MeshBudget, MeshKind, Profile};
use tensegrid_core::model::{CellId, MemberId, Structure};
use tensegrid_core::stress::{
    assemble_basis, assemble_basis_with, certify, cross_check, verify_independence, AssembleOptions, StateSource,
    StressBasis,
};
use tensegrid_core::Error;

/// Basis columns against the independent oracle nullspace.
fn oracle_gap(s: &Structure, b: &StressBasis) -> f64 {
    let (p, e) = common::active_framework(s);
    let null = common::nullspace(&common::matrix(&p, &e));
    assert_eq!(null.ncols(), b.dim(), "dimension");
    common::span_gap(&null, &b.states)
}

fn check(s: &Structure, b: &StressBasis) {
    assert!(certify(s, b).is_ok());
    assert!(verify_independence(b).independent);
    assert!(cross_check(s, b).pass);
    let gap = oracle_gap(s, b);
    assert!(gap <= 1e-8, "span gap {gap}");
}

#[test]
fn three_cell_basis() {
    let s = fixtures::three_cell();
    let b = assemble_basis(&s).unwrap();
    assert_eq!(b.dim(), 4);
    assert_eq!((b.cell_count(), b.virtual_count()), (3, 1));
    check(&s, &b);
    let r = verify_independence(&b);
    assert!(r.peeling_complete);
}

#[test]
fn four_cell_grid_has_a_wheel_at_node_five() {
    let g = fixtures::four_cell_grid();
    let b = assemble_basis(&g.structure).unwrap();
    assert_eq!(b.dim(), 5);
    assert_eq!((b.cell_count(), b.virtual_count()), (4, 1));
    let centre = g.node(5);
    assert!(b.sources.iter().any(|s| matches!(s, StateSource::VirtualWheel { center, .. } if *center == centre)));
    check(&g.structure, &b);
}

#[test]
fn fused_grid_virtual_state_uses_the_fusing_cell() {
    let g = fixtures::four_cell_grid_fused();
    let removed = g.any_member(5, 6).unwrap();
    assert!(g.structure.member(removed).unwrap().removed);
    let b = assemble_basis(&g.structure).unwrap();
    assert_eq!(b.dim(), 4);
    let fusing = g.structure.cells_containing_member(removed);
    let last: CellId = *fusing.iter().max().unwrap();
    let nodes = &g.structure.cell(last).unwrap().node_ids;
    let mut labels: Vec<u32> = nodes.iter().map(|n| *g.labels.iter().find(|(_, v)| *v == n).unwrap().0).collect();
    labels.sort();
    assert_eq!(labels, vec![5, 6, 8, 9]);
    let wheel = b
        .sources
        .iter()
        .find_map(|s| match s {
            StateSource::VirtualWheel { compensated_by, .. } => Some(compensated_by.clone()),
            _ => None,
        })
        .expect("a virtual state");
    assert!(wheel.contains(&last));
    check(&g.structure, &b);
}

#[test]
fn rings_need_the_general_search() {
    for n in [4, 5, 6, 8, 12] {
        let s = fixtures::ring(n);
        let b = assemble_basis(&s).unwrap();
        assert_eq!(b.dim(), n + 3, "ring {n}");
        assert_eq!(b.cell_count(), n);
        assert!(b.sources.iter().all(|s| !matches!(s, StateSource::VirtualWheel { .. })));
        check(&s, &b);
    }
}

#[test]
fn mechanism_structure_is_still_certified() {
    let s = fixtures::two_cells_one_node();
    let b = assemble_basis(&s).unwrap();
    assert_eq!(b.dim(), 2);
    check(&s, &b);
}

#[test]
fn removing_a_member_shrinks_the_basis() {
    let mut s = fixtures::three_cell();
    let shared = s.member_between(tensegrid_core::model::NodeId(2), tensegrid_core::model::NodeId(3)).unwrap();
    s.remove_member(shared).unwrap();
    let b = assemble_basis(&s).unwrap();
    assert_eq!(b.dim(), common::oracle_nullity(&s));
    check(&s, &b);
}

#[test]
fn tiny_search_cap_reports_incomplete_basis() {
    let s = fixtures::ring(6);
    let e = assemble_basis_with(&s, &AssembleOptions { seed: 0, candidate_cap: 1 }).unwrap_err();
    assert!(matches!(e, Error::IncompleteBasis { target: 9, .. }), "{e:?}");
}

#[test]
fn certify_rejects_a_wrong_column() {
    let s = fixtures::square_cell();
    let ids: Vec<MemberId> = s.active_member_ids();
    let bad = StressBasis::from_columns(ids, &[vec![1.0; 6]], vec![StateSource::Numeric]);
    assert!(matches!(certify(&s, &bad), Err(Error::CertificationFailed(_))));
    let twice = StressBasis::from_columns(s.active_member_ids(), &vec![vec![1., 1., 1., 1., -1., -1.]; 2], vec![StateSource::Numeric; 2]);
    assert!(matches!(certify(&s, &twice), Err(Error::CertificationFailed(_))));
}

#[test]
fn same_seed_same_basis() {
    let s = fixtures::ring(7);
    let a = assemble_basis_with(&s, &AssembleOptions { seed: 3, ..Default::default() }).unwrap();
    let b = assemble_basis_with(&s, &AssembleOptions { seed: 3, ..Default::default() }).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_bases_match_the_oracle(seed in any::<u64>(), faces in 1usize..16, quad in any::<bool>()) {
        let kind = if quad { MeshKind::Quad } else { MeshKind::Tri };
        let g = generate(&Profile::Ellipse { a: 1.4, b: 1.0 }, &GenerateOptions::new(MeshBudget::Faces(faces), kind, seed)).unwrap();
        prop_assert_eq!(g.report.nullity as i64, g.report.expected_states);
        prop_assert!(oracle_gap(&g.structure, &g.basis) <= 1e-8);
        prop_assert!(verify_independence(&g.basis).independent);
    }
}
