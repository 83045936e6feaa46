//! IER-style k-FANN: best-first search over the rectangle tree keyed by
//! Euclidean lower bounds, refining one candidate at a time with exact
//! network distances.
//!
//! The scaled Euclidean distance never exceeds the network distance, and the
//! flexible aggregate is monotone, so the aggregate of per-query rectangle
//! lower bounds bounds `g_phi` of every object in the rectangle. Popping in
//! key order and stopping once the key exceeds the k-th exact value is
//! therefore exact.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::rtree::{RectKind, RectTree};
use crate::agg::{flexible_agg, AggScratch};
use crate::mtree::NodeId;
use crate::oracle::DistanceOracle;
use crate::roadnet::{coord_dist, RoadNetwork};
use crate::search::{Candidate, QuerySpec, ResultSet, SearchStats};
use crate::{Dist, Error, Result, VertexId};

/// Points pop before nodes on equal keys: refining can only tighten the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Item {
    Point(VertexId),
    Node(NodeId),
}

pub fn ier_fann_search<O: DistanceOracle>(
    rt: &RectTree,
    g: &RoadNetwork,
    oracle: &O,
    qs: &QuerySpec<'_>,
) -> Result<(ResultSet, SearchStats)> {
    let flex = qs.flex()?;
    let m = flex.m;
    let kind = qs.kind;
    let available = if qs.pois.is_some() {
        rt.subtree_objects(rt.root()).into_iter().filter(|&o| qs.is_poi(o)).count()
    } else {
        rt.len()
    };
    if available < qs.k {
        return Err(Error::NotEnoughPois { k: qs.k, available });
    }
    let started = Instant::now();
    let qcoords: Vec<[i64; 2]> = qs.queries.iter().map(|&q| g.coord(q)).collect();
    let mut scratch = AggScratch::default();
    let mut stats = SearchStats::default();
    let mut results = ResultSet::new(qs.k);
    let mut heap = BinaryHeap::new();
    let mut dists: Vec<Dist> = Vec::with_capacity(qs.queries.len());

    let root = rt.root();
    let key = scratch.value_from(qcoords.iter().map(|&q| g.scaled_lb(rt.node(root).mbr.mindist(q))), kind, m);
    heap.push(Reverse((key, Item::Node(root))));
    stats.heap_pushes += 1;

    while let Some(Reverse((key, item))) = heap.pop() {
        let bound = results.kth_bound();
        if key > bound {
            // every remaining key is at least as large
            stats.pops_discarded += 1 + heap.len() as u64;
            break;
        }
        match item {
            Item::Point(oid) => {
                stats.objects_examined += 1;
                dists.clear();
                dists.extend(qs.queries.iter().map(|&q| oracle.dist(oid, q)));
                stats.oracle_calls += dists.len() as u64;
                let g_phi = scratch.value(&dists, kind, m);
                if g_phi <= bound {
                    results.offer(Candidate { oid, g_phi, subset: Vec::new() });
                } else {
                    stats.objects_rejected += 1;
                }
            }
            Item::Node(id) => {
                let node = rt.visit(id);
                stats.node_accesses += 1;
                match &node.kind {
                    RectKind::Inner(entries) => {
                        for e in entries {
                            stats.entries_examined += 1;
                            let k = scratch.value_from(qcoords.iter().map(|&q| g.scaled_lb(e.mbr.mindist(q))), kind, m);
                            if k <= bound {
                                heap.push(Reverse((k, Item::Node(e.child))));
                                stats.heap_pushes += 1;
                            } else {
                                stats.entries_pruned_full += 1;
                            }
                        }
                    }
                    RectKind::Leaf(points) => {
                        for &(oid, p) in points {
                            if !qs.is_poi(oid) {
                                continue;
                            }
                            let k = scratch.value_from(qcoords.iter().map(|&q| g.scaled_lb(coord_dist(p, q))), kind, m);
                            if k <= bound {
                                heap.push(Reverse((k, Item::Point(oid))));
                                stats.heap_pushes += 1;
                            } else {
                                stats.objects_pruned_cheap += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    stats.wall_time = started.elapsed();

    for c in results.candidates_mut() {
        let d: Vec<Dist> = qs.queries.iter().map(|&q| oracle.dist(c.oid, q)).collect();
        c.subset = flexible_agg(&d, kind, m)?.subset;
    }
    Ok((results, stats))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EuclidBoundViolation {
    pub node: NodeId,
    pub oid: VertexId,
    pub lower: Dist,
    pub g_phi: Dist,
}

/// Checks that every node's Euclidean aggregate bound is at most the exact
/// `g_phi` of every object below it.
pub fn audit_euclid_aggregate<O: DistanceOracle>(
    rt: &RectTree,
    g: &RoadNetwork,
    oracle: &O,
    qs: &QuerySpec<'_>,
) -> Result<Vec<EuclidBoundViolation>> {
    let flex = qs.flex()?;
    let mut scratch = AggScratch::default();
    let qcoords: Vec<[i64; 2]> = qs.queries.iter().map(|&q| g.coord(q)).collect();
    let mut exact = std::collections::HashMap::new();
    let mut out = Vec::new();
    for id in 0..rt.num_nodes() as NodeId {
        let mbr = rt.node(id).mbr;
        let lower = scratch.value_from(qcoords.iter().map(|&q| g.scaled_lb(mbr.mindist(q))), qs.kind, flex.m);
        for oid in rt.subtree_objects(id) {
            let g_phi = *exact.entry(oid).or_insert_with(|| {
                let d: Vec<Dist> = qs.queries.iter().map(|&q| oracle.dist(oid, q)).collect();
                scratch.value(&d, qs.kind, flex.m)
            });
            if lower > g_phi {
                out.push(EuclidBoundViolation { node: id, oid, lower, g_phi });
            }
        }
    }
    Ok(out)
}
