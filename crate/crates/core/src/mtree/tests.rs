use super::*;
use crate::oracle::{single_source, DijkstraOracle};
use crate::roadnet::{synth, RoadNetwork};
use proptest::prelude::*;

/// Unit-weight path 0-1-...-len, so D(i, j) = |i - j|.
fn line(len: usize) -> RoadNetwork {
    let coords = (0..=len).map(|i| [i as i64, 0]).collect();
    let edges = (0..len as VertexId).map(|i| (i, i + 1, 1));
    RoadNetwork::from_edges(coords, edges).unwrap()
}

fn entry(oid: VertexId, radius: Dist) -> RoutingEntry {
    RoutingEntry { routing_oid: oid, radius, child: 0, parent_dist: 0 }
}

#[test]
fn leaf_parent_is_minimax_center() {
    let g = line(10);
    let o = DijkstraOracle::new(&g);
    // max distances: 0 -> 10, 4 -> 6, 10 -> 10
    assert_eq!(select_parent_leaf(&[0, 4, 10], &o), 4);
    assert_eq!(select_parent_leaf(&[10, 0, 4], &o), 4);
    assert_eq!(select_parent_leaf(&[7], &o), 7);
    assert_eq!(select_parent_leaf(&[9, 3], &o), 3);
}

#[test]
fn nonleaf_parent_accounts_for_radii() {
    let g = line(10);
    let o = DijkstraOracle::new(&g);
    let es = [entry(0, 1), entry(4, 1), entry(10, 1)];
    assert_eq!(select_parent_nonleaf(&es, &o), 4);
    assert_eq!(select_parent_nonleaf(&[entry(6, 3)], &o), 6);
    // a large radius on the middle entry moves the center
    let es = [entry(0, 1), entry(4, 9), entry(10, 1)];
    assert_eq!(select_parent_nonleaf(&es, &o), 0);
}

#[test]
fn nonleaf_ties_break_to_smallest_id() {
    // star with equal spokes: all leaves mutually at distance 4
    let coords = (0..5).map(|i| [i, 0]).collect();
    let g = RoadNetwork::from_edges(coords, (1..5).map(|v| (0, v, 2))).unwrap();
    let o = DijkstraOracle::new(&g);
    let es = [entry(3, 1), entry(2, 1), entry(4, 1)];
    assert_eq!(select_parent_nonleaf(&es, &o), 2);
}

#[test]
fn sphere_and_cheap_bound_formulas() {
    let g = line(20);
    let o = DijkstraOracle::new(&g);
    assert_eq!(mindist_sphere(&entry(10, 3), 0, &o), 7);
    assert_eq!(mindist_sphere(&entry(10, 3), 8, &o), 0);
    assert_eq!(mindist_sphere(&entry(10, 0), 4, &o), 6);
    assert_eq!(o.calls(), 3);

    let e = RoutingEntry { routing_oid: 0, radius: 2, child: 0, parent_dist: 4 };
    assert_eq!(lowerbound_cheap_nonleaf(&e, 10), 4);
    for r in [0, 1, 7] {
        assert_eq!(lowerbound_cheap_nonleaf(&RoutingEntry { radius: r, ..e }, 4), 0);
    }
    assert_eq!(lowerbound_cheap_leaf(&LeafEntry { oid: 0, parent_dist: 3 }, 7), 4);
    assert_eq!(lowerbound_cheap_leaf(&LeafEntry { oid: 0, parent_dist: 7 }, 3), 4);
}

#[test]
fn small_set_is_single_leaf() {
    let g = synth::random_geometric(100, 2, 1);
    let o = DijkstraOracle::new(&g);
    let tree = MetricTree::bulk_load(&(0..64).collect::<Vec<_>>(), &o, 64).unwrap();
    assert_eq!(tree.height(), 1);
    assert_eq!(tree.num_nodes(), 1);
    assert!(tree.node(tree.root()).is_leaf());
    assert!(tree.audit_parent_dist(&o).is_empty());
}

#[test]
fn capacity_below_two_rejected() {
    let g = line(3);
    let o = DijkstraOracle::new(&g);
    assert!(matches!(MetricTree::bulk_load(&[0, 1], &o, 1), Err(crate::Error::Capacity(1))));
    assert!(MetricTree::bulk_load(&[], &o, 4).is_err());
}

#[test]
fn thousand_objects_height_two_and_audits_pass() {
    let g = synth::grid_network(40, 2);
    let labels = crate::oracle::build_labels(&g, Default::default()).unwrap();
    let pois: Vec<VertexId> = (0..1000).collect();
    let tree = MetricTree::bulk_load(&pois, &labels, 64).unwrap();
    assert_eq!(tree.height(), 2);
    assert_eq!(tree.len(), 1000);
    assert!(tree.audit_structure().is_empty(), "{:?}", tree.audit_structure());
    assert!(tree.audit_covering(&labels).is_empty());
    assert!(tree.audit_parent_dist(&labels).is_empty());
    let mut objs = tree.objects();
    objs.sort_unstable();
    assert_eq!(objs, pois);
}

#[test]
fn radii_are_tight() {
    let g = synth::random_geometric(400, 2, 6);
    let o = DijkstraOracle::new(&g);
    let tree = MetricTree::bulk_load(&(0..400).collect::<Vec<_>>(), &o, 8).unwrap();
    assert!(tree.height() >= 3);
    for id in tree.node_ids() {
        if let NodeKind::Inner(entries) = &tree.node(id).kind {
            for e in entries {
                let row = single_source(&g, e.routing_oid);
                let far = tree.subtree_objects(e.child).iter().map(|&v| row[v as usize]).max().unwrap();
                assert_eq!(far, e.radius);
            }
        }
    }
}

#[test]
fn duplicate_routing_object_leaves_radii_unchanged() {
    let g = synth::random_geometric(80, 2, 8);
    let o = DijkstraOracle::new(&g);
    let pois: Vec<VertexId> = (0..80).collect();
    let a = MetricTree::bulk_load(&pois, &o, 4).unwrap();
    let NodeKind::Inner(es) = &a.node(a.root()).kind else { panic!("expected an inner root") };
    let mut with_dup = pois.clone();
    with_dup.extend(es.iter().map(|e| e.routing_oid));
    let b = MetricTree::bulk_load(&with_dup, &o, 4).unwrap();
    assert_eq!(b.len(), 80);
    for id in a.node_ids() {
        assert_eq!(a.node(id), b.node(id));
    }
}

#[test]
fn zero_length_twin_is_covered() {
    let base = synth::random_geometric(60, 2, 8);
    let mut coords = base.coords().to_vec();
    coords.push(coords[0]);
    let mut edges: Vec<_> = base.edges().iter().map(|e| (e.u, e.v, e.w)).collect();
    edges.push((0, 60, 0));
    let g = RoadNetwork::from_edges(coords, edges).unwrap();
    let o = DijkstraOracle::new(&g);
    let tree = MetricTree::bulk_load(&(0..=60).collect::<Vec<_>>(), &o, 4).unwrap();
    assert!(tree.audit_covering(&o).is_empty());
    assert!(tree.audit_parent_dist(&o).is_empty());
    assert!(tree.audit_structure().is_empty());
}

#[test]
fn planted_faults_are_detected() {
    let g = synth::random_geometric(300, 2, 12);
    let o = DijkstraOracle::new(&g);
    let mut tree = MetricTree::bulk_load(&(0..300).collect::<Vec<_>>(), &o, 16).unwrap();
    let root = tree.root();
    let NodeKind::Inner(entries) = &mut tree.node_mut(root).kind else { panic!("expected an inner root") };
    let victim = entries.iter().position(|e| e.radius > 0).unwrap();
    entries[victim].radius -= 1;
    let next = (victim + 1) % entries.len();
    entries[next].parent_dist += 1;
    assert!(!tree.audit_covering(&o).is_empty());
    assert_eq!(tree.audit_parent_dist(&o).len(), 1);
}

#[test]
fn access_counter_counts_visits_only() {
    let g = line(10);
    let o = DijkstraOracle::new(&g);
    let tree = MetricTree::bulk_load(&[1, 2, 3], &o, 4).unwrap();
    tree.node(tree.root());
    assert_eq!(tree.node_accesses(), 0);
    tree.visit(tree.root());
    tree.visit(tree.root());
    assert_eq!(tree.node_accesses(), 2);
    tree.reset_node_accesses();
    assert_eq!(tree.node_accesses(), 0);
}

#[test]
fn persistence_roundtrip() {
    let g = synth::random_geometric(200, 2, 4);
    let o = DijkstraOracle::new(&g);
    let tree = MetricTree::bulk_load(&(0..200).collect::<Vec<_>>(), &o, 8).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.mtree");
    let prov = TreeProvenance { graph_checksum: g.checksum(), oracle_id: o.id() };
    tree.save(&path, &prov).unwrap();
    let (back, p) = MetricTree::load(&path, g.checksum()).unwrap();
    assert_eq!(p, prov);
    assert_eq!(back.height(), tree.height());
    for id in tree.node_ids() {
        assert_eq!(back.node(id), tree.node(id));
    }
    assert!(matches!(MetricTree::load(&path, 1), Err(crate::Error::ChecksumMismatch { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lower_bound_chain_holds(seed in 0u64..1_000, cap in 2usize..9, nq in 1usize..4) {
        let g = synth::random_geometric(120, 2, seed);
        let o = DijkstraOracle::new(&g);
        let pois: Vec<VertexId> = (0..120).filter(|v| !(v + seed as u32).is_multiple_of(3)).collect();
        let tree = MetricTreeBuilder::new().capacity(cap).seed(seed).build(&pois, &o).unwrap();
        prop_assert!(tree.audit_structure().is_empty());
        prop_assert!(tree.audit_covering(&o).is_empty());
        let queries: Vec<VertexId> = (0..nq as u32).map(|i| (i * 37 + seed as u32) % 120).collect();
        prop_assert!(tree.audit_lower_bounds(&o, &queries).is_empty());
    }
}
