//! Top-down balanced bulk loading.
//!
//! The target height is fixed up front from the object count, so every leaf
//! ends up on the same level. At each node, `f` seeds are drawn by
//! farthest-point sampling and objects are assigned to seeds greedily in
//! ascending distance order under a per-child size cap. A few refinement
//! rounds then move each seed to the member with the smallest maximum
//! distance to a sample of its cluster and reassign. Parent objects,
//! covering radii and parent distances are filled in bottom-up.

use std::sync::atomic::AtomicU64;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    minimax_index, pairwise, LeafEntry, MetricTree, Node, NodeId, NodeKind, RoutingEntry,
    DEFAULT_CAPACITY,
};
use crate::oracle::DistanceOracle;
use crate::{Dist, Error, Result, VertexId};

#[derive(Debug, Clone)]
pub struct MetricTreeBuilder {
    capacity: usize,
    seed: u64,
    leaf_fill: f64,
    refine_rounds: usize,
}

/// Members sampled per cluster when re-centering.
const RECENTER_SAMPLE: usize = 16;

impl Default for MetricTreeBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl MetricTreeBuilder {
    pub fn new() -> Self {
        Self { capacity: DEFAULT_CAPACITY, seed: 0, leaf_fill: 0.75, refine_rounds: 2 }
    }

    pub fn capacity(mut self, capacity: usize) -> Self {
        self.capacity = capacity;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Target leaf occupancy as a fraction of capacity, in `(0, 1]`.
    pub fn leaf_fill(mut self, fill: f64) -> Self {
        self.leaf_fill = fill.clamp(1e-3, 1.0);
        self
    }

    /// Re-centering rounds after the initial seeding.
    pub fn refine_rounds(mut self, rounds: usize) -> Self {
        self.refine_rounds = rounds;
        self
    }

    pub fn build<O: DistanceOracle>(&self, pois: &[VertexId], oracle: &O) -> Result<MetricTree> {
        if self.capacity < 2 || self.capacity > u16::MAX as usize {
            return Err(Error::Capacity(self.capacity));
        }
        let mut objects = pois.to_vec();
        objects.sort_unstable();
        objects.dedup();
        if objects.is_empty() {
            return Err(Error::InvalidQuery("cannot index an empty POI set".into()));
        }
        let n = objects.len();
        let c = self.capacity;
        let mut height = 0u32;
        while c.saturating_pow(height + 1) < n || (height > 0 && c.saturating_pow(height) < self.leaves_for(n)) {
            height += 1;
        }
        let mut state = BuildState {
            oracle,
            capacity: c,
            leaf_fill: self.leaf_fill,
            refine_rounds: self.refine_rounds,
            rng: ChaCha8Rng::seed_from_u64(self.seed),
            nodes: Vec::new(),
        };
        let root = state.build_node(objects, height);
        Ok(MetricTree {
            nodes: state.nodes,
            root,
            capacity: c,
            objects: n,
            accesses: AtomicU64::new(0),
        })
    }

    fn leaves_for(&self, n: usize) -> usize {
        leaves_for(n, self.capacity, self.leaf_fill)
    }
}

/// Greedy assignment in ascending (distance, object, seed) order, each seed
/// taking at most `cap` objects. `rows.len() * cap >= n` guarantees every
/// object is placed.
fn assign_capped(rows: &[Vec<Dist>], n: usize, cap: usize) -> Vec<u16> {
    let mut pairs: Vec<(Dist, u32, u16)> = Vec::with_capacity(n * rows.len());
    for (s, row) in rows.iter().enumerate() {
        for (i, &d) in row.iter().enumerate() {
            pairs.push((d, i as u32, s as u16));
        }
    }
    pairs.sort_unstable();
    let mut owner = vec![u16::MAX; n];
    let mut sizes = vec![0usize; rows.len()];
    let mut left = n;
    for (_, i, s) in pairs {
        if left == 0 {
            break;
        }
        let (i, s) = (i as usize, s as usize);
        if owner[i] == u16::MAX && sizes[s] < cap {
            owner[i] = s as u16;
            sizes[s] += 1;
            left -= 1;
        }
    }
    owner
}

fn leaves_for(n: usize, capacity: usize, fill: f64) -> usize {
    let per_leaf = ((capacity as f64 * fill).floor() as usize).max(1);
    n.div_ceil(per_leaf)
}

struct BuildState<'o, O> {
    oracle: &'o O,
    capacity: usize,
    leaf_fill: f64,
    refine_rounds: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl<O: DistanceOracle> BuildState<'_, O> {
    fn push(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        (self.nodes.len() - 1) as NodeId
    }

    fn build_node(&mut self, objects: Vec<VertexId>, height: u32) -> NodeId {
        if height == 0 {
            return self.build_leaf(objects);
        }
        let clusters = self.partition(&objects, height);
        let mut entries = Vec::with_capacity(clusters.len());
        for cluster in clusters {
            // radius needs the cluster members, kept before handing them down
            let members = cluster.clone();
            let child = self.build_node(cluster, height - 1);
            let routing_oid = self.nodes[child as usize].parent_oid;
            let radius =
                members.iter().map(|&o| self.oracle.dist(o, routing_oid)).max().unwrap_or(0);
            entries.push(RoutingEntry { routing_oid, radius, child, parent_dist: 0 });
        }
        let ids: Vec<VertexId> = entries.iter().map(|e| e.routing_oid).collect();
        let matrix = pairwise(&ids, self.oracle);
        let p = minimax_index(&ids, &matrix, |i| entries[i].radius);
        let k = ids.len();
        for (j, e) in entries.iter_mut().enumerate() {
            e.parent_dist = matrix[p * k + j];
        }
        self.push(Node { parent_oid: ids[p], height, kind: NodeKind::Inner(entries) })
    }

    fn build_leaf(&mut self, objects: Vec<VertexId>) -> NodeId {
        debug_assert!(objects.len() <= self.capacity);
        let matrix = pairwise(&objects, self.oracle);
        let p = minimax_index(&objects, &matrix, |_| 0);
        let n = objects.len();
        let entries =
            objects.iter().enumerate().map(|(j, &oid)| LeafEntry { oid, parent_dist: matrix[p * n + j] }).collect();
        self.push(Node { parent_oid: objects[p], height: 0, kind: NodeKind::Leaf(entries) })
    }

    /// Splits `objects` into at most `capacity` non-empty clusters, each small
    /// enough to fit a subtree of height `height - 1`.
    fn partition(&mut self, objects: &[VertexId], height: u32) -> Vec<Vec<VertexId>> {
        let n = objects.len();
        let c = self.capacity;
        let hard_cap = c.saturating_pow(height);
        let leaves = leaves_for(n, c, self.leaf_fill);
        let target = (leaves as f64).powf(1.0 / height as f64).ceil() as usize;
        let fanout = target.max(n.div_ceil(hard_cap)).clamp(1, c.min(n));
        let even = n.div_ceil(fanout);
        let soft_cap = if height == 1 { c } else { hard_cap.min(even + even / 4).max(even) };

        let mut rows = self.farthest_point_seeds(objects, fanout);
        let mut owner = assign_capped(&rows, n, soft_cap);
        for _ in 0..self.refine_rounds {
            let recentered = self.recenter(objects, &owner, rows.len());
            rows = recentered.iter().map(|&c| objects.iter().map(|&o| self.oracle.dist(c, o)).collect()).collect();
            owner = assign_capped(&rows, n, soft_cap);
        }
        let mut clusters = vec![Vec::new(); rows.len()];
        for (i, &s) in owner.iter().enumerate() {
            clusters[s as usize].push(objects[i]);
        }
        clusters.retain(|c| !c.is_empty());
        clusters
    }

    /// New cluster centers: the member with the smallest maximum distance to
    /// a sample of the cluster, an approximate minimax center.
    fn recenter(&mut self, objects: &[VertexId], owner: &[u16], clusters: usize) -> Vec<VertexId> {
        let mut members = vec![Vec::new(); clusters];
        for (i, &s) in owner.iter().enumerate() {
            members[s as usize].push(objects[i]);
        }
        members
            .iter()
            .filter(|m| !m.is_empty())
            .map(|m| {
                let sample: Vec<VertexId> = if m.len() <= RECENTER_SAMPLE {
                    m.clone()
                } else {
                    rand::seq::index::sample(&mut self.rng, m.len(), RECENTER_SAMPLE).iter().map(|i| m[i]).collect()
                };
                *m.iter()
                    .min_by_key(|&&c| (sample.iter().map(|&o| self.oracle.dist(c, o)).max().unwrap_or(0), c))
                    .expect("non-empty cluster")
            })
            .collect()
    }

    /// Distance rows from `count` farthest-point seeds to every object.
    fn farthest_point_seeds(&mut self, objects: &[VertexId], count: usize) -> Vec<Vec<Dist>> {
        let n = objects.len();
        let mut rows: Vec<Vec<Dist>> = Vec::with_capacity(count);
        let mut nearest = vec![Dist::MAX; n];
        let mut next = self.rng.gen_range(0..n);
        for _ in 0..count {
            let seed = objects[next];
            let row: Vec<Dist> = objects.iter().map(|&o| self.oracle.dist(seed, o)).collect();
            for (m, &d) in nearest.iter_mut().zip(&row) {
                *m = (*m).min(d);
            }
            rows.push(row);
            // objects are sorted, so the first maximum has the smallest id
            next = nearest
                .iter()
                .enumerate()
                .fold(0, |best, (i, &d)| if d > nearest[best] { i } else { best });
        }
        rows
    }
}
