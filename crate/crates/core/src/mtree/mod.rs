//! M-tree over a POI set under the network metric.
//!
//! Leaf entries carry an object id and its distance to the leaf's parent
//! object. Routing entries carry a routing object (the parent object of the
//! child node), the child's covering radius, the child reference and the
//! distance from the routing object to the parent object of the node holding
//! the entry. Parent objects are the minimax centers of their nodes.

mod audit;
mod build;
mod store;

use std::sync::atomic::{AtomicU64, Ordering};

pub use audit::{BoundViolation, CoverViolation, ParentDistViolation, StructureViolation};
pub use build::MetricTreeBuilder;
pub use store::TreeProvenance;

use crate::oracle::DistanceOracle;
use crate::{Dist, VertexId};

pub type NodeId = u32;

pub const DEFAULT_CAPACITY: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LeafEntry {
    pub oid: VertexId,
    pub parent_dist: Dist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoutingEntry {
    pub routing_oid: VertexId,
    pub radius: Dist,
    pub child: NodeId,
    pub parent_dist: Dist,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Leaf(Vec<LeafEntry>),
    Inner(Vec<RoutingEntry>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    /// Parent object of this node; equals the routing object of the entry
    /// referencing it.
    pub parent_oid: VertexId,
    /// Distance from the leaf level (leaves are 0).
    pub height: u32,
    pub kind: NodeKind,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf(_))
    }

    pub fn len(&self) -> usize {
        match &self.kind {
            NodeKind::Leaf(e) => e.len(),
            NodeKind::Inner(e) => e.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug)]
pub struct MetricTree {
    nodes: Vec<Node>,
    root: NodeId,
    capacity: usize,
    objects: usize,
    accesses: AtomicU64,
}

impl Clone for MetricTree {
    fn clone(&self) -> Self {
        Self {
            nodes: self.nodes.clone(),
            root: self.root,
            capacity: self.capacity,
            objects: self.objects,
            accesses: AtomicU64::new(0),
        }
    }
}

impl MetricTree {
    /// Bulk-loads a tree with default settings and the given capacity.
    pub fn bulk_load<O: DistanceOracle>(
        pois: &[VertexId],
        oracle: &O,
        capacity: usize,
    ) -> crate::Result<Self> {
        MetricTreeBuilder::new().capacity(capacity).build(pois, oracle)
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Number of levels, 1 for a single leaf.
    pub fn height(&self) -> usize {
        self.nodes[self.root as usize].height as usize + 1
    }

    /// Number of indexed objects.
    pub fn len(&self) -> usize {
        self.objects
    }

    pub fn is_empty(&self) -> bool {
        self.objects == 0
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Node lookup that does not count as an access.
    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    /// Node read during a search; bumps the access counter.
    #[inline]
    pub fn visit(&self, id: NodeId) -> &Node {
        self.accesses.fetch_add(1, Ordering::Relaxed);
        &self.nodes[id as usize]
    }

    pub fn node_accesses(&self) -> u64 {
        self.accesses.load(Ordering::Relaxed)
    }

    pub fn reset_node_accesses(&self) {
        self.accesses.store(0, Ordering::Relaxed);
    }

    /// Mutable node access, for fault-injection tests of the audits.
    pub fn node_mut(&mut self, id: NodeId) -> &mut Node {
        &mut self.nodes[id as usize]
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        0..self.nodes.len() as NodeId
    }

    /// All objects stored below `id`.
    pub fn subtree_objects(&self, id: NodeId) -> Vec<VertexId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            match &self.nodes[n as usize].kind {
                NodeKind::Leaf(entries) => out.extend(entries.iter().map(|e| e.oid)),
                NodeKind::Inner(entries) => stack.extend(entries.iter().map(|e| e.child)),
            }
        }
        out
    }

    /// Every indexed object, in no particular order.
    pub fn objects(&self) -> Vec<VertexId> {
        self.subtree_objects(self.root)
    }
}

/// Sphere distance `max(D(routing, q) - radius, 0)`; one oracle call.
#[inline]
pub fn mindist_sphere<O: DistanceOracle>(e: &RoutingEntry, q: VertexId, oracle: &O) -> Dist {
    oracle.dist(e.routing_oid, q).saturating_sub(e.radius)
}

/// Oracle-free lower bound for a routing entry from the parent's distance to
/// `q`: `max(|parent_to_q - parent_dist| - radius, 0)`.
#[inline]
pub fn lowerbound_cheap_nonleaf(e: &RoutingEntry, parent_to_q: Dist) -> Dist {
    parent_to_q.abs_diff(e.parent_dist).saturating_sub(e.radius)
}

/// Oracle-free lower bound `|parent_to_q - parent_dist|` for a leaf object.
#[inline]
pub fn lowerbound_cheap_leaf(e: &LeafEntry, parent_to_q: Dist) -> Dist {
    parent_to_q.abs_diff(e.parent_dist)
}

/// Leaf parent object: minimizes the maximum distance to the other objects.
/// Ties go to the smallest id.
pub fn select_parent_leaf<O: DistanceOracle>(objects: &[VertexId], oracle: &O) -> VertexId {
    let matrix = pairwise(objects, oracle);
    objects[minimax_index(objects, &matrix, |_| 0)]
}

/// Non-leaf parent object: the routing object minimizing
/// `max_j D(O_i, O_j) + r_i + r_j`; ties go to the smallest routing id.
pub fn select_parent_nonleaf<O: DistanceOracle>(entries: &[RoutingEntry], oracle: &O) -> VertexId {
    let ids: Vec<VertexId> = entries.iter().map(|e| e.routing_oid).collect();
    let matrix = pairwise(&ids, oracle);
    ids[minimax_index(&ids, &matrix, |i| entries[i].radius)]
}

/// Symmetric distance matrix, row-major, `len * (len - 1) / 2` oracle calls.
pub(crate) fn pairwise<O: DistanceOracle>(ids: &[VertexId], oracle: &O) -> Vec<Dist> {
    let n = ids.len();
    let mut m = vec![0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = oracle.dist(ids[i], ids[j]);
            m[i * n + j] = d;
            m[j * n + i] = d;
        }
    }
    m
}

/// Index minimizing `max_j (matrix[i][j] + pad(i) + pad(j))`, the pair term
/// including `j = i`. Panics on an empty slice.
pub(crate) fn minimax_index(ids: &[VertexId], matrix: &[Dist], pad: impl Fn(usize) -> Dist) -> usize {
    let n = ids.len();
    assert!(n > 0, "minimax over an empty set");
    let mut best = (Dist::MAX, VertexId::MAX, 0usize);
    for i in 0..n {
        let worst = (0..n)
            .map(|j| matrix[i * n + j].saturating_add(pad(i)).saturating_add(pad(j)))
            .max()
            .unwrap_or(0);
        if (worst, ids[i]) < (best.0, best.1) {
            best = (worst, ids[i], i);
        }
    }
    best.2
}

#[cfg(test)]
mod tests;
