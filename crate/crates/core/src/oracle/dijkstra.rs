use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use super::DistanceOracle;
use crate::roadnet::RoadNetwork;
use crate::{Dist, VertexId, INFINITE};

/// Reusable Dijkstra state. Distances are invalidated by bumping `epoch`
/// instead of clearing the arrays.
pub(crate) struct Scratch {
    dist: Vec<Dist>,
    stamp: Vec<u32>,
    epoch: u32,
    heap: BinaryHeap<Reverse<(Dist, VertexId)>>,
}

impl Scratch {
    pub(crate) fn new(n: usize) -> Self {
        Self { dist: vec![INFINITE; n], stamp: vec![0; n], epoch: 0, heap: BinaryHeap::new() }
    }

    pub(crate) fn reset(&mut self) {
        self.heap.clear();
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
    }

    #[inline]
    pub(crate) fn get(&self, v: VertexId) -> Dist {
        if self.stamp[v as usize] == self.epoch {
            self.dist[v as usize]
        } else {
            INFINITE
        }
    }

    #[inline]
    fn set(&mut self, v: VertexId, d: Dist) {
        self.stamp[v as usize] = self.epoch;
        self.dist[v as usize] = d;
    }

    /// Relaxes `v` to `d` if that improves it, queueing it.
    #[inline]
    pub(crate) fn offer(&mut self, v: VertexId, d: Dist) {
        if d < self.get(v) {
            self.set(v, d);
            self.heap.push(Reverse((d, v)));
        }
    }

    /// Next vertex whose distance is final, skipping stale heap entries.
    #[inline]
    pub(crate) fn settle_next(&mut self) -> Option<(Dist, VertexId)> {
        while let Some(Reverse((d, v))) = self.heap.pop() {
            if d == self.get(v) {
                return Some((d, v));
            }
        }
        None
    }

    fn point_to_point(&mut self, g: &RoadNetwork, s: VertexId, t: VertexId) -> Dist {
        if s == t {
            return 0;
        }
        self.reset();
        self.offer(s, 0);
        while let Some((d, u)) = self.settle_next() {
            if u == t {
                return d;
            }
            for &(v, w) in g.neighbors(u) {
                self.offer(v, d + Dist::from(w));
            }
        }
        INFINITE
    }
}

/// Point-to-point distance; stops as soon as `v` is settled.
///
/// Returns [`INFINITE`] when `v` is unreachable.
pub fn dijkstra_dist(g: &RoadNetwork, u: VertexId, v: VertexId) -> Dist {
    Scratch::new(g.num_vertices()).point_to_point(g, u, v)
}

/// Distances from `s` to every vertex.
pub fn single_source(g: &RoadNetwork, s: VertexId) -> Vec<Dist> {
    let mut dist = vec![INFINITE; g.num_vertices()];
    let mut heap = BinaryHeap::new();
    dist[s as usize] = 0;
    heap.push(Reverse((0, s)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if d > dist[u as usize] {
            continue;
        }
        for &(v, w) in g.neighbors(u) {
            let nd = d + Dist::from(w);
            if nd < dist[v as usize] {
                dist[v as usize] = nd;
                heap.push(Reverse((nd, v)));
            }
        }
    }
    dist
}

/// Reference oracle running a fresh early-exit Dijkstra per query.
pub struct DijkstraOracle<'g> {
    graph: &'g RoadNetwork,
    pool: Mutex<Vec<Scratch>>,
    calls: AtomicU64,
}

impl<'g> DijkstraOracle<'g> {
    pub fn new(graph: &'g RoadNetwork) -> Self {
        Self { graph, pool: Mutex::new(Vec::new()), calls: AtomicU64::new(0) }
    }

    pub fn graph(&self) -> &'g RoadNetwork {
        self.graph
    }
}

impl DistanceOracle for DijkstraOracle<'_> {
    fn dist(&self, u: VertexId, v: VertexId) -> Dist {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let scratch = self.pool.lock().expect("scratch pool poisoned").pop();
        let mut scratch = scratch.unwrap_or_else(|| Scratch::new(self.graph.num_vertices()));
        let d = scratch.point_to_point(self.graph, u, v);
        self.pool.lock().expect("scratch pool poisoned").push(scratch);
        d
    }

    fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    fn reset_calls(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }

    fn id(&self) -> String {
        "dijkstra".to_string()
    }
}
