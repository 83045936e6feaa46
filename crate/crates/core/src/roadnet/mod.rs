//! Road-network graphs: loading, cleaning and planar geometry.
//!
//! A [`RoadNetwork`] is an undirected graph with non-negative integer edge
//! weights and integer planar coordinates per vertex. Edges are kept in a
//! canonical list (`u <= v`, sorted, no duplicates) plus a CSR adjacency for
//! traversal.

mod dimacs;
mod store;
pub mod synth;

use std::collections::VecDeque;

use sha2::{Digest, Sha256};

pub use dimacs::{load_dimacs_files, parse_dimacs, parse_dimacs_with, write_dimacs, CoordProjection,
    ParseOptions};

use crate::{Dist, Error, Result, VertexId};

/// Relative shrink applied to Euclidean bounds to absorb floating-point error.
const LB_SHRINK: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub w: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vertex {
    pub id: VertexId,
    pub x: i64,
    pub y: i64,
}

#[derive(Debug, Clone)]
pub struct RoadNetwork {
    coords: Vec<[i64; 2]>,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    adj: Vec<(VertexId, u32)>,
    euclid_scale: f64,
    /// Maps ids of the graph this one was derived from to ids here.
    remap: Vec<Option<VertexId>>,
}

impl PartialEq for RoadNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.coords == other.coords && self.edges == other.edges
    }
}

impl RoadNetwork {
    /// Builds a graph from coordinates and an undirected edge list.
    ///
    /// Edges given in both directions collapse into one; parallel edges keep
    /// the minimum weight. Self-loops are kept (see [`RoadNetwork::preprocess`]).
    pub fn from_edges<I>(coords: Vec<[i64; 2]>, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (VertexId, VertexId, u32)>,
    {
        let n = coords.len();
        let mut list = Vec::new();
        for (a, b, w) in edges {
            if a as usize >= n || b as usize >= n {
                return Err(Error::Validation(format!(
                    "edge ({a}, {b}) references a vertex outside 0..{n}"
                )));
            }
            let (u, v) = if a <= b { (a, b) } else { (b, a) };
            list.push(Edge { u, v, w });
        }
        list.sort_unstable();
        // sorted by (u, v, w): the first of each (u, v) run has the minimum weight
        list.dedup_by(|next, kept| next.u == kept.u && next.v == kept.v);
        let identity = (0..n as VertexId).map(Some).collect();
        Ok(Self::assemble(coords, list, identity))
    }

    fn assemble(coords: Vec<[i64; 2]>, edges: Vec<Edge>, remap: Vec<Option<VertexId>>) -> Self {
        let n = coords.len();
        let mut degree = vec![0usize; n + 1];
        for e in &edges {
            degree[e.u as usize] += 1;
            if e.u != e.v {
                degree[e.v as usize] += 1;
            }
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut fill = offsets.clone();
        let mut adj = vec![(0, 0); offsets[n]];
        for e in &edges {
            adj[fill[e.u as usize]] = (e.v, e.w);
            fill[e.u as usize] += 1;
            if e.u != e.v {
                adj[fill[e.v as usize]] = (e.u, e.w);
                fill[e.v as usize] += 1;
            }
        }
        for i in 0..n {
            adj[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        let euclid_scale = compute_euclid_scale(&coords, &edges);
        Self { coords, edges, offsets, adj, euclid_scale, remap }
    }

    pub fn num_vertices(&self) -> usize {
        self.coords.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn coords(&self) -> &[[i64; 2]] {
        &self.coords
    }

    pub fn coord(&self, v: VertexId) -> [i64; 2] {
        self.coords[v as usize]
    }

    pub fn vertex(&self, v: VertexId) -> Vertex {
        let [x, y] = self.coords[v as usize];
        Vertex { id: v, x, y }
    }

    /// Neighbors of `v` with edge weights, sorted by neighbor id.
    #[inline]
    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, u32)] {
        &self.adj[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.offsets[v as usize + 1] - self.offsets[v as usize]
    }

    /// Old-id to new-id table of the last derivation step (identity for parsed graphs).
    pub fn remap(&self) -> &[Option<VertexId>] {
        &self.remap
    }

    /// Largest `s` with `s * euclid(u, v) <= w` over every edge.
    pub fn euclid_scale(&self) -> f64 {
        self.euclid_scale
    }

    /// Cleans a raw graph: drops self-loops and keeps only the largest
    /// connected component, re-densifying ids in their original order.
    ///
    /// Ties between equally large components go to the one holding the
    /// smallest vertex id.
    pub fn preprocess(&self) -> Result<Self> {
        let n = self.num_vertices();
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut comp = vec![u32::MAX; n];
        let mut sizes: Vec<usize> = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..n {
            if comp[start] != u32::MAX {
                continue;
            }
            let c = sizes.len() as u32;
            comp[start] = c;
            queue.push_back(start as VertexId);
            let mut size = 0;
            while let Some(u) = queue.pop_front() {
                size += 1;
                for &(v, _) in self.neighbors(u) {
                    if comp[v as usize] == u32::MAX {
                        comp[v as usize] = c;
                        queue.push_back(v);
                    }
                }
            }
            sizes.push(size);
        }
        // components are numbered in order of their smallest vertex, so the
        // first maximum is the tie winner
        let best = sizes
            .iter()
            .enumerate()
            .fold(0usize, |best, (i, &s)| if s > sizes[best] { i } else { best }) as u32;

        let mut remap = vec![None; n];
        let mut coords = Vec::with_capacity(sizes[best as usize]);
        for (old, &c) in comp.iter().enumerate() {
            if c == best {
                remap[old] = Some(coords.len() as VertexId);
                coords.push(self.coords[old]);
            }
        }
        let edges: Vec<Edge> = self
            .edges
            .iter()
            .filter(|e| e.u != e.v)
            .filter_map(|e| {
                Some(Edge { u: remap[e.u as usize]?, v: remap[e.v as usize]?, w: e.w })
            })
            .collect();
        Ok(Self::assemble(coords, edges, remap))
    }

    /// True when every vertex reaches vertex 0.
    pub fn is_connected(&self) -> bool {
        let n = self.num_vertices();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0 as VertexId];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &(v, _) in self.neighbors(u) {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    }

    /// Plain coordinate distance between two vertices.
    pub fn euclid(&self, u: VertexId, v: VertexId) -> f64 {
        coord_dist(self.coords[u as usize], self.coords[v as usize])
    }

    /// Scaled Euclidean lower bound on the network distance between `u` and `v`.
    ///
    /// Rounded up to an integer: network distances are integral, so the
    /// ceiling of a real lower bound is still a lower bound.
    pub fn euclidean_lb(&self, u: VertexId, v: VertexId) -> Dist {
        self.scaled_lb(self.euclid(u, v))
    }

    /// Converts a raw coordinate distance into a sound integer lower bound.
    #[inline]
    pub fn scaled_lb(&self, coord_distance: f64) -> Dist {
        let x = self.euclid_scale * coord_distance * LB_SHRINK;
        if x <= 0.0 {
            0
        } else {
            x.ceil() as Dist
        }
    }

    /// Edges violating `euclidean_lb(u, v) <= w`. Empty for a sound scale.
    pub fn audit_euclid_scale_edges(&self) -> Vec<Edge> {
        self.edges
            .iter()
            .filter(|e| self.euclidean_lb(e.u, e.v) > Dist::from(e.w))
            .copied()
            .collect()
    }

    /// Stable digest of coordinates and edges; binds persisted indexes to a graph.
    pub fn checksum(&self) -> u64 {
        let mut h = Sha256::new();
        h.update((self.coords.len() as u64).to_le_bytes());
        h.update((self.edges.len() as u64).to_le_bytes());
        for c in &self.coords {
            h.update(c[0].to_le_bytes());
            h.update(c[1].to_le_bytes());
        }
        for e in &self.edges {
            h.update(e.u.to_le_bytes());
            h.update(e.v.to_le_bytes());
            h.update(e.w.to_le_bytes());
        }
        let digest = h.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("sha256 digest is 32 bytes"))
    }

    /// Axis-aligned bounding box `[min_x, min_y, max_x, max_y]` of all vertices.
    pub fn bbox(&self) -> [i64; 4] {
        self.coords.iter().fold(
            [i64::MAX, i64::MAX, i64::MIN, i64::MIN],
            |[a, b, c, d], &[x, y]| [a.min(x), b.min(y), c.max(x), d.max(y)],
        )
    }
}

#[inline]
pub(crate) fn coord_dist(a: [i64; 2], b: [i64; 2]) -> f64 {
    let dx = (a[0] - b[0]) as f64;
    let dy = (a[1] - b[1]) as f64;
    dx.hypot(dy)
}

fn compute_euclid_scale(coords: &[[i64; 2]], edges: &[Edge]) -> f64 {
    let mut scale = f64::INFINITY;
    for e in edges {
        let d = coord_dist(coords[e.u as usize], coords[e.v as usize]);
        if d > 0.0 {
            scale = scale.min(f64::from(e.w) / d);
        }
    }
    if scale.is_finite() {
        scale
    } else {
        // no edge spans a positive coordinate distance: every bound is 0 anyway
        1.0
    }
}
