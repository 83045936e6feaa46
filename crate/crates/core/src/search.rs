//! Best-first k-FANN search over the M-tree.
//!
//! Routing entries sit in a min-priority queue keyed by their sphere bound
//! `g_phi` (the flexible aggregate of `max(D(O_r, q_i) - r, 0)`). When a node
//! is expanded, every child is first tested with the oracle-free bound
//! derived from the stored parent distances; only survivors pay `M` oracle
//! calls for the sphere bound (inner nodes) or the exact aggregate (leaves).
//! The distances `D(O_r, q_i)` computed for a queued entry double as the
//! parent-to-query row when its node is expanded, since `O_r` is that node's
//! parent object.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::agg::{flexible_agg, AggScratch, AggregateKind, FlexSpec};
use crate::mtree::{LeafEntry, MetricTree, NodeId, NodeKind, RoutingEntry};
use crate::oracle::DistanceOracle;
use crate::{Dist, Error, Result, VertexId, INFINITE};

/// Membership test for the POI set `P` inside a larger indexed object set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoiSet {
    member: Vec<bool>,
    count: usize,
}

impl PoiSet {
    pub fn new(num_vertices: usize, pois: &[VertexId]) -> Self {
        let mut member = vec![false; num_vertices];
        for &p in pois {
            member[p as usize] = true;
        }
        let count = member.iter().filter(|&&b| b).count();
        Self { member, count }
    }

    #[inline]
    pub fn contains(&self, v: VertexId) -> bool {
        self.member.get(v as usize).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn ids(&self) -> Vec<VertexId> {
        (0..self.member.len() as VertexId).filter(|&v| self.member[v as usize]).collect()
    }
}

#[derive(Debug, Clone)]
pub struct QuerySpec<'p> {
    pub queries: Vec<VertexId>,
    pub phi: f64,
    pub k: usize,
    pub kind: AggregateKind,
    /// Restricts results to these objects; `None` means every indexed object.
    pub pois: Option<&'p PoiSet>,
}

impl<'p> QuerySpec<'p> {
    pub fn new(queries: Vec<VertexId>, phi: f64, k: usize, kind: AggregateKind) -> Self {
        Self { queries, phi, k, kind, pois: None }
    }

    pub fn with_pois(mut self, pois: &'p PoiSet) -> Self {
        self.pois = Some(pois);
        self
    }

    /// Checks the spec and returns the subset size.
    pub fn flex(&self) -> Result<FlexSpec> {
        if self.k == 0 {
            return Err(Error::InvalidQuery("k must be at least 1".into()));
        }
        FlexSpec::new(self.queries.len(), self.phi)
    }

    pub fn is_poi(&self, v: VertexId) -> bool {
        self.pois.is_none_or(|p| p.contains(v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub oid: VertexId,
    pub g_phi: Dist,
    /// Indices into the query list of the best subset.
    pub subset: Vec<usize>,
}

/// The `k` best objects, ascending by `(g_phi, oid)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultSet {
    k: usize,
    items: Vec<Candidate>,
}

impl ResultSet {
    pub fn new(k: usize) -> Self {
        Self { k, items: Vec::with_capacity(k + 1) }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.items
    }

    pub(crate) fn candidates_mut(&mut self) -> &mut [Candidate] {
        &mut self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.items.len() >= self.k
    }

    /// `g_phi` of the k-th result, or [`INFINITE`] while fewer than `k` are known.
    #[inline]
    pub fn kth_bound(&self) -> Dist {
        if self.is_full() {
            self.items[self.k - 1].g_phi
        } else {
            INFINITE
        }
    }

    pub fn values(&self) -> Vec<Dist> {
        self.items.iter().map(|c| c.g_phi).collect()
    }

    pub fn oids(&self) -> Vec<VertexId> {
        self.items.iter().map(|c| c.oid).collect()
    }

    /// Inserts if `(g_phi, oid)` beats the current k-th; returns whether it did.
    pub fn offer(&mut self, cand: Candidate) -> bool {
        if self.is_full() {
            let last = &self.items[self.k - 1];
            if (cand.g_phi, cand.oid) >= (last.g_phi, last.oid) {
                return false;
            }
        }
        if self.items.iter().any(|c| c.oid == cand.oid) {
            return false;
        }
        let pos = self.items.partition_point(|c| (c.g_phi, c.oid) < (cand.g_phi, cand.oid));
        self.items.insert(pos, cand);
        self.items.truncate(self.k);
        true
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub node_accesses: u64,
    pub oracle_calls: u64,
    pub heap_pushes: u64,
    /// Child entries looked at while expanding inner nodes.
    pub entries_examined: u64,
    /// Entries dropped by the oracle-free parent-distance bound.
    pub entries_pruned_cheap: u64,
    /// Entries dropped by the engine's full entry bound (metric sphere for
    /// the M-tree, Euclidean rectangle distance for the rectangle tree).
    pub entries_pruned_full: u64,
    /// Queued entries dropped at pop time because their key exceeded the bound.
    pub pops_discarded: u64,
    /// Objects whose bounds were evaluated.
    pub objects_examined: u64,
    pub objects_pruned_cheap: u64,
    /// Objects whose exact aggregate exceeded the bound.
    pub objects_rejected: u64,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PruneStage {
    /// Oracle-free bound from stored parent distances.
    Cheap,
    /// Sphere bound for entries, exact aggregate for objects.
    Full,
    /// Queued entry whose key went stale.
    Pop,
}

/// Pruning decisions recorded for offline replay against ground truth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    EntryPruned { child: NodeId, lower: Dist, bound: Dist, stage: PruneStage },
    ObjectPruned { oid: VertexId, lower: Dist, bound: Dist, stage: PruneStage },
    BoundTightened { bound: Dist },
}

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    /// Drop popped entries whose key exceeds the current k-th bound.
    pub pop_skip: bool,
    pub trace: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { pop_skip: true, trace: false }
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub results: ResultSet,
    pub stats: SearchStats,
    pub trace: Vec<TraceEvent>,
}

/// Whether a popped entry is expanded. Keys are lower bounds on every object
/// below the entry, so an entry keyed above the bound holds no result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PopDecision {
    Keep,
    Discard,
}

#[inline]
pub fn pop_skip_check(key: Dist, bound: Dist) -> PopDecision {
    if key > bound {
        PopDecision::Discard
    } else {
        PopDecision::Keep
    }
}

struct Queued {
    key: Dist,
    height: u32,
    oid: VertexId,
    child: NodeId,
    /// `D(oid, q_i)` for every query.
    qdist: Vec<Dist>,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    // reversed: BinaryHeap pops the smallest key, then the deepest node, then
    // the smallest routing object
    fn cmp(&self, other: &Self) -> Ordering {
        (other.key, other.height, other.oid, other.child).cmp(&(self.key, self.height, self.oid, self.child))
    }
}

/// Exact k-FANN search with default options.
pub fn fann_search<O: DistanceOracle>(
    tree: &MetricTree,
    oracle: &O,
    qs: &QuerySpec<'_>,
) -> Result<(ResultSet, SearchStats)> {
    let out = fann_search_with(tree, oracle, qs, SearchOptions::default())?;
    Ok((out.results, out.stats))
}

pub fn fann_search_with<O: DistanceOracle>(
    tree: &MetricTree,
    oracle: &O,
    qs: &QuerySpec<'_>,
    opts: SearchOptions,
) -> Result<SearchOutcome> {
    let flex = qs.flex()?;
    let available =
        if qs.pois.is_some() { tree.objects().into_iter().filter(|&o| qs.is_poi(o)).count() } else { tree.len() };
    if available < qs.k {
        return Err(Error::NotEnoughPois { k: qs.k, available });
    }
    let started = Instant::now();
    let mut search = Search {
        tree,
        oracle,
        qs,
        m: flex.m,
        opts,
        results: ResultSet::new(qs.k),
        heap: BinaryHeap::new(),
        scratch: AggScratch::default(),
        stats: SearchStats::default(),
        trace: Vec::new(),
    };
    search.run();
    search.stats.wall_time = started.elapsed();

    let mut results = search.results;
    // subsets are only needed for the final answers
    for c in &mut results.items {
        let dists: Vec<Dist> = qs.queries.iter().map(|&q| oracle.dist(c.oid, q)).collect();
        c.subset = flexible_agg(&dists, qs.kind, flex.m)?.subset;
    }
    Ok(SearchOutcome { results, stats: search.stats, trace: search.trace })
}

struct Search<'a, 'p, O> {
    tree: &'a MetricTree,
    oracle: &'a O,
    qs: &'a QuerySpec<'p>,
    m: usize,
    opts: SearchOptions,
    results: ResultSet,
    heap: BinaryHeap<Queued>,
    scratch: AggScratch,
    stats: SearchStats,
    trace: Vec<TraceEvent>,
}

impl<O: DistanceOracle> Search<'_, '_, O> {
    fn run(&mut self) {
        let root = self.tree.root();
        self.expand(root, None);
        while let Some(item) = self.heap.pop() {
            let bound = self.results.kth_bound();
            if self.opts.pop_skip && pop_skip_check(item.key, bound) == PopDecision::Discard {
                self.stats.pops_discarded += 1;
                self.record(|| TraceEvent::EntryPruned {
                    child: item.child,
                    lower: item.key,
                    bound,
                    stage: PruneStage::Pop,
                });
                continue;
            }
            self.expand(item.child, Some(item.qdist));
        }
    }

    fn record(&mut self, event: impl FnOnce() -> TraceEvent) {
        if self.opts.trace {
            self.trace.push(event());
        }
    }

    fn query_row(&mut self, from: VertexId) -> Vec<Dist> {
        self.stats.oracle_calls += self.qs.queries.len() as u64;
        self.qs.queries.iter().map(|&q| self.oracle.dist(from, q)).collect()
    }

    /// Reads a node and processes its entries. `parent_row` holds
    /// `D(parent object, q_i)` when already known.
    fn expand(&mut self, id: NodeId, mut parent_row: Option<Vec<Dist>>) {
        let node = self.tree.visit(id);
        self.stats.node_accesses += 1;
        let parent = node.parent_oid;
        match &node.kind {
            NodeKind::Inner(entries) => {
                for e in entries {
                    self.inner_entry(e, parent, &mut parent_row);
                }
            }
            NodeKind::Leaf(entries) => {
                for e in entries {
                    if self.qs.is_poi(e.oid) {
                        self.leaf_entry(e, parent, &mut parent_row);
                    }
                }
            }
        }
    }

    fn ensure_row<'r>(&mut self, parent: VertexId, row: &'r mut Option<Vec<Dist>>) -> &'r [Dist] {
        if row.is_none() {
            *row = Some(self.query_row(parent));
        }
        row.as_deref().expect("row was just filled")
    }

    fn inner_entry(&mut self, e: &RoutingEntry, parent: VertexId, parent_row: &mut Option<Vec<Dist>>) {
        self.stats.entries_examined += 1;
        let (kind, m) = (self.qs.kind, self.m);
        let bound = self.results.kth_bound();
        if bound != INFINITE {
            let row = self.ensure_row(parent, parent_row);
            let cheap = self.scratch.value_from(
                row.iter().map(|&d| d.abs_diff(e.parent_dist).saturating_sub(e.radius)),
                kind,
                m,
            );
            if cheap > bound {
                self.stats.entries_pruned_cheap += 1;
                self.record(|| TraceEvent::EntryPruned { child: e.child, lower: cheap, bound, stage: PruneStage::Cheap });
                return;
            }
        }
        let qdist = self.query_row(e.routing_oid);
        let key = self.scratch.value_from(qdist.iter().map(|&d| d.saturating_sub(e.radius)), kind, m);
        if key <= bound {
            self.stats.heap_pushes += 1;
            let height = self.tree.node(e.child).height;
            self.heap.push(Queued { key, height, oid: e.routing_oid, child: e.child, qdist });
        } else {
            self.stats.entries_pruned_full += 1;
            self.record(|| TraceEvent::EntryPruned { child: e.child, lower: key, bound, stage: PruneStage::Full });
        }
    }

    fn leaf_entry(&mut self, e: &LeafEntry, parent: VertexId, parent_row: &mut Option<Vec<Dist>>) {
        self.stats.objects_examined += 1;
        let (kind, m) = (self.qs.kind, self.m);
        let bound = self.results.kth_bound();
        if bound != INFINITE {
            let row = self.ensure_row(parent, parent_row);
            let cheap = self.scratch.value_from(row.iter().map(|&d| d.abs_diff(e.parent_dist)), kind, m);
            if cheap > bound {
                self.stats.objects_pruned_cheap += 1;
                self.record(|| TraceEvent::ObjectPruned { oid: e.oid, lower: cheap, bound, stage: PruneStage::Cheap });
                return;
            }
        }
        // an object at distance 0 from the parent object shares its distances
        let g = match parent_row {
            Some(row) if e.parent_dist == 0 => self.scratch.value(row, kind, m),
            _ => {
                let dists = self.query_row(e.oid);
                self.scratch.value(&dists, kind, m)
            }
        };
        if g <= bound {
            let before = self.results.kth_bound();
            self.results.offer(Candidate { oid: e.oid, g_phi: g, subset: Vec::new() });
            let after = self.results.kth_bound();
            if after != before {
                self.record(|| TraceEvent::BoundTightened { bound: after });
            }
        } else {
            self.stats.objects_rejected += 1;
            self.record(|| TraceEvent::ObjectPruned { oid: e.oid, lower: g, bound, stage: PruneStage::Full });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pop_skip_boundaries() {
        assert_eq!(pop_skip_check(1_000_000, INFINITE), PopDecision::Keep);
        assert_eq!(pop_skip_check(7, 7), PopDecision::Keep);
        assert_eq!(pop_skip_check(8, 7), PopDecision::Discard);
    }

    #[test]
    fn result_set_keeps_k_smallest_with_oid_ties() {
        let mut r = ResultSet::new(2);
        let c = |oid, g| Candidate { oid, g_phi: g, subset: vec![] };
        assert_eq!(r.kth_bound(), INFINITE);
        assert!(r.offer(c(5, 10)));
        assert_eq!(r.kth_bound(), INFINITE);
        assert!(r.offer(c(3, 10)));
        assert_eq!(r.kth_bound(), 10);
        assert!(!r.offer(c(9, 10)));
        assert!(r.offer(c(1, 10)));
        assert_eq!(r.oids(), vec![1, 3]);
        assert!(r.offer(c(8, 2)));
        assert_eq!(r.oids(), vec![8, 1]);
        assert!(!r.offer(c(8, 1)), "duplicate oid");
    }

    #[test]
    fn queue_order_prefers_small_key_then_depth_then_oid() {
        let q = |key, height, oid| Queued { key, height, oid, child: 0, qdist: vec![] };
        let mut h = BinaryHeap::new();
        h.push(q(5, 1, 0));
        h.push(q(5, 0, 9));
        h.push(q(5, 0, 2));
        h.push(q(4, 3, 7));
        let order: Vec<_> = std::iter::from_fn(|| h.pop().map(|x| (x.key, x.height, x.oid))).collect();
        assert_eq!(order, vec![(4, 3, 7), (5, 0, 2), (5, 0, 9), (5, 1, 0)]);
    }

    #[test]
    fn query_spec_validation() {
        assert!(QuerySpec::new(vec![], 0.5, 1, AggregateKind::Max).flex().is_err());
        assert!(QuerySpec::new(vec![1], 0.5, 0, AggregateKind::Max).flex().is_err());
        assert!(QuerySpec::new(vec![1], 0.0, 1, AggregateKind::Max).flex().is_err());
        assert_eq!(QuerySpec::new(vec![1, 2, 3], 0.5, 1, AggregateKind::Sum).flex().unwrap().m, 2);
    }
}
