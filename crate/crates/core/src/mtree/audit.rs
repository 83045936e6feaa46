//! Structural audits checked against oracle truth.

use super::{
    lowerbound_cheap_leaf, lowerbound_cheap_nonleaf, mindist_sphere, MetricTree, NodeId, NodeKind,
};
use crate::oracle::DistanceOracle;
use crate::{Dist, VertexId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverViolation {
    pub node: NodeId,
    pub entry: usize,
    pub object: VertexId,
    pub dist: Dist,
    pub radius: Dist,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParentDistViolation {
    pub node: NodeId,
    pub entry: usize,
    pub stored: Dist,
    pub actual: Dist,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StructureViolation {
    UnevenLeafDepth { node: NodeId, depth: usize, expected: usize },
    Overfull { node: NodeId, len: usize },
    EmptyNode { node: NodeId },
    ParentMismatch { node: NodeId, entry: usize },
    ObjectCount { found: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundViolation {
    /// Cheap bound above the sphere bound for a routing entry.
    CheapAboveSphere { node: NodeId, entry: usize, query: VertexId, cheap: Dist, sphere: Dist },
    /// Sphere bound above the true distance of a subtree object.
    SphereAboveTrue { node: NodeId, entry: usize, query: VertexId, object: VertexId },
    /// Leaf cheap bound above the true distance.
    LeafCheapAboveTrue { node: NodeId, entry: usize, query: VertexId },
}

impl MetricTree {
    /// Every object below every routing entry lies within its covering radius.
    pub fn audit_covering<O: DistanceOracle>(&self, oracle: &O) -> Vec<CoverViolation> {
        let mut out = Vec::new();
        for id in self.node_ids() {
            if let NodeKind::Inner(entries) = &self.node(id).kind {
                for (i, e) in entries.iter().enumerate() {
                    for o in self.subtree_objects(e.child) {
                        let d = oracle.dist(o, e.routing_oid);
                        if d > e.radius {
                            out.push(CoverViolation { node: id, entry: i, object: o, dist: d, radius: e.radius });
                        }
                    }
                }
            }
        }
        out
    }

    /// Stored parent distances equal the oracle distance to the node's parent object.
    pub fn audit_parent_dist<O: DistanceOracle>(&self, oracle: &O) -> Vec<ParentDistViolation> {
        let mut out = Vec::new();
        for id in self.node_ids() {
            let node = self.node(id);
            let check = |entry: usize, oid: VertexId, stored: Dist, out: &mut Vec<ParentDistViolation>| {
                let actual = oracle.dist(oid, node.parent_oid);
                if actual != stored {
                    out.push(ParentDistViolation { node: id, entry, stored, actual });
                }
            };
            match &node.kind {
                NodeKind::Leaf(entries) => {
                    for (i, e) in entries.iter().enumerate() {
                        check(i, e.oid, e.parent_dist, &mut out);
                    }
                }
                NodeKind::Inner(entries) => {
                    for (i, e) in entries.iter().enumerate() {
                        check(i, e.routing_oid, e.parent_dist, &mut out);
                    }
                }
            }
        }
        out
    }

    /// Balance, capacity, parent/routing consistency and object count; no oracle needed.
    pub fn audit_structure(&self) -> Vec<StructureViolation> {
        let mut out = Vec::new();
        let expected_depth = self.height() - 1;
        let mut count = 0;
        let mut stack = vec![(self.root(), 0usize)];
        while let Some((id, depth)) = stack.pop() {
            let node = self.node(id);
            if node.is_empty() {
                out.push(StructureViolation::EmptyNode { node: id });
            }
            if node.len() > self.capacity() {
                out.push(StructureViolation::Overfull { node: id, len: node.len() });
            }
            match &node.kind {
                NodeKind::Leaf(entries) => {
                    count += entries.len();
                    if depth != expected_depth {
                        out.push(StructureViolation::UnevenLeafDepth { node: id, depth, expected: expected_depth });
                    }
                }
                NodeKind::Inner(entries) => {
                    for (i, e) in entries.iter().enumerate() {
                        if self.node(e.child).parent_oid != e.routing_oid {
                            out.push(StructureViolation::ParentMismatch { node: id, entry: i });
                        }
                        stack.push((e.child, depth + 1));
                    }
                }
            }
        }
        if count != self.len() {
            out.push(StructureViolation::ObjectCount { found: count, expected: self.len() });
        }
        out
    }

    /// For each query point, checks `cheap <= sphere <= true distance` at
    /// every routing entry and `cheap <= true distance` at every leaf entry.
    pub fn audit_lower_bounds<O: DistanceOracle>(&self, oracle: &O, queries: &[VertexId]) -> Vec<BoundViolation> {
        let mut out = Vec::new();
        for &q in queries {
            for id in self.node_ids() {
                let node = self.node(id);
                let parent_to_q = oracle.dist(node.parent_oid, q);
                match &node.kind {
                    NodeKind::Inner(entries) => {
                        for (i, e) in entries.iter().enumerate() {
                            let cheap = lowerbound_cheap_nonleaf(e, parent_to_q);
                            let sphere = mindist_sphere(e, q, oracle);
                            if cheap > sphere {
                                out.push(BoundViolation::CheapAboveSphere { node: id, entry: i, query: q, cheap, sphere });
                            }
                            for o in self.subtree_objects(e.child) {
                                if sphere > oracle.dist(o, q) {
                                    out.push(BoundViolation::SphereAboveTrue { node: id, entry: i, query: q, object: o });
                                }
                            }
                        }
                    }
                    NodeKind::Leaf(entries) => {
                        for (i, e) in entries.iter().enumerate() {
                            if lowerbound_cheap_leaf(e, parent_to_q) > oracle.dist(e.oid, q) {
                                out.push(BoundViolation::LeafCheapAboveTrue { node: id, entry: i, query: q });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}
