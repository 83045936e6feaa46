//! 2-hop hub labeling built by pruned landmark labeling.
//!
//! Vertices are processed in rank order; from each root a Dijkstra search
//! runs over the graph and stops expanding at any vertex whose distance is
//! already answered by the labels built so far. A vertex that is not pruned
//! receives `(root, distance)` in its label. The result satisfies the 2-hop
//! cover property, so `min over common hubs h of d(u, h) + d(h, v)` is exact.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dijkstra::Scratch;
use super::DistanceOracle;
use crate::binio::{LeReader, LeWriter};
use crate::roadnet::RoadNetwork;
use crate::{Dist, Error, Result, VertexId, INFINITE};

const MAGIC: &[u8; 8] = b"FANNHUBL";
const VERSION: u32 = 1;
const ENTRY_BYTES: usize = std::mem::size_of::<VertexId>() + std::mem::size_of::<Dist>();

/// Order in which roots are processed during construction.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum OrderPolicy {
    /// Descending degree, ties by smaller id.
    #[default]
    Degree,
    /// Descending total subtree size over `samples` shortest-path trees from
    /// random roots; vertices that many shortest paths pass through come first.
    TreeCentrality { samples: usize, seed: u64 },
    /// Caller-supplied permutation of all vertices.
    Explicit(Vec<VertexId>),
}

impl OrderPolicy {
    pub fn name(&self) -> String {
        match self {
            OrderPolicy::Degree => "degree".into(),
            OrderPolicy::TreeCentrality { samples, seed } => format!("tree-centrality:{samples}:{seed}"),
            OrderPolicy::Explicit(_) => "explicit".into(),
        }
    }

    /// Parses the names produced by [`OrderPolicy::name`] (except `explicit`).
    pub fn parse(s: &str) -> Option<Self> {
        if s == "degree" {
            return Some(OrderPolicy::Degree);
        }
        let rest = s.strip_prefix("tree-centrality")?;
        if rest.is_empty() {
            return Some(OrderPolicy::TreeCentrality { samples: 32, seed: 0 });
        }
        let mut parts = rest.strip_prefix(':')?.split(':');
        let samples = parts.next()?.parse().ok()?;
        let seed = parts.next().map_or(Some(0), |p| p.parse().ok())?;
        Some(OrderPolicy::TreeCentrality { samples, seed })
    }

    fn order(&self, g: &RoadNetwork) -> Result<Vec<VertexId>> {
        let n = g.num_vertices();
        match self {
            OrderPolicy::Degree => {
                let mut order: Vec<VertexId> = (0..n as VertexId).collect();
                order.sort_by_key(|&v| (std::cmp::Reverse(g.degree(v)), v));
                Ok(order)
            }
            OrderPolicy::TreeCentrality { samples, seed } => Ok(tree_centrality_order(g, *samples, *seed)),
            OrderPolicy::Explicit(order) => {
                let mut seen = vec![false; n];
                if order.len() != n {
                    return Err(Error::Validation(format!(
                        "explicit order has {} vertices, graph has {n}",
                        order.len()
                    )));
                }
                for &v in order {
                    if v as usize >= n || std::mem::replace(&mut seen[v as usize], true) {
                        return Err(Error::Validation("explicit order is not a permutation".into()));
                    }
                }
                Ok(order.clone())
            }
        }
    }
}

fn tree_centrality_order(g: &RoadNetwork, samples: usize, seed: u64) -> Vec<VertexId> {
    let n = g.num_vertices();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut score = vec![0u64; n];
    let mut scratch = Scratch::new(n);
    let mut parent = vec![VertexId::MAX; n];
    let mut settled = Vec::with_capacity(n);
    let mut subtree = vec![0u64; n];
    for _ in 0..samples.max(1) {
        let root = rng.gen_range(0..n) as VertexId;
        scratch.reset();
        settled.clear();
        parent[root as usize] = VertexId::MAX;
        scratch.offer(root, 0);
        while let Some((d, u)) = scratch.settle_next() {
            settled.push(u);
            for &(v, w) in g.neighbors(u) {
                let nd = d + Dist::from(w);
                if nd < scratch.get(v) {
                    parent[v as usize] = u;
                    scratch.offer(v, nd);
                }
            }
        }
        for &u in &settled {
            subtree[u as usize] = 1;
        }
        for &u in settled.iter().rev() {
            let p = parent[u as usize];
            if p != VertexId::MAX && u != root {
                subtree[p as usize] += subtree[u as usize];
            }
            score[u as usize] += subtree[u as usize];
        }
    }
    let mut order: Vec<VertexId> = (0..n as VertexId).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(score[v as usize]), std::cmp::Reverse(g.degree(v)), v));
    order
}

/// Default cap on label storage: 3 GiB.
pub const DEFAULT_LABEL_BUDGET: usize = 3 << 30;

#[derive(Debug, Clone)]
pub struct HubLabelBuilder {
    pub order: OrderPolicy,
    /// Upper bound on label storage in bytes.
    pub memory_budget: usize,
}

impl Default for HubLabelBuilder {
    fn default() -> Self {
        Self { order: OrderPolicy::Degree, memory_budget: DEFAULT_LABEL_BUDGET }
    }
}

impl HubLabelBuilder {
    pub fn order(mut self, order: OrderPolicy) -> Self {
        self.order = order;
        self
    }

    pub fn memory_budget(mut self, bytes: usize) -> Self {
        self.memory_budget = bytes;
        self
    }

    pub fn build(&self, g: &RoadNetwork) -> Result<HubLabeling> {
        let n = g.num_vertices();
        let order = self.order.order(g)?;
        let mut rank = vec![0 as VertexId; n];
        for (r, &v) in order.iter().enumerate() {
            rank[v as usize] = r as VertexId;
        }

        // labels hold (rank, dist) and grow in rank order, hence stay sorted
        let mut labels: Vec<Vec<(VertexId, Dist)>> = vec![Vec::new(); n];
        let mut root_row = vec![INFINITE; n];
        let mut scratch = Scratch::new(n);
        let mut total_entries = 0usize;

        for (r, &root) in order.iter().enumerate() {
            let r = r as VertexId;
            for &(h, d) in &labels[root as usize] {
                root_row[h as usize] = d;
            }
            scratch.reset();
            scratch.offer(root, 0);
            while let Some((d, u)) = scratch.settle_next() {
                let covered = labels[u as usize]
                    .iter()
                    .any(|&(h, dh)| root_row[h as usize] != INFINITE && root_row[h as usize] + dh <= d);
                if covered {
                    continue;
                }
                labels[u as usize].push((r, d));
                total_entries += 1;
                for &(v, w) in g.neighbors(u) {
                    // earlier roots are always covered
                    if rank[v as usize] > r {
                        scratch.offer(v, d + Dist::from(w));
                    }
                }
            }
            for &(h, _) in &labels[root as usize] {
                root_row[h as usize] = INFINITE;
            }
            let used = total_entries * ENTRY_BYTES;
            if used > self.memory_budget {
                return Err(Error::LabelBudget { used, budget: self.memory_budget });
            }
        }

        let mut offsets = Vec::with_capacity(n + 1);
        let mut hubs = Vec::with_capacity(total_entries);
        let mut dists = Vec::with_capacity(total_entries);
        offsets.push(0);
        for label in labels.iter_mut() {
            let mut entries: Vec<(VertexId, Dist)> =
                label.drain(..).map(|(r, d)| (order[r as usize], d)).collect();
            entries.sort_unstable();
            hubs.extend(entries.iter().map(|e| e.0));
            dists.extend(entries.iter().map(|e| e.1));
            offsets.push(hubs.len());
        }
        Ok(HubLabeling {
            offsets,
            hubs,
            dists,
            checksum: g.checksum(),
            policy: self.order.name(),
            calls: AtomicU64::new(0),
        })
    }
}

/// Builds labels with the given order and the default memory budget.
pub fn build_labels(g: &RoadNetwork, order: OrderPolicy) -> Result<HubLabeling> {
    HubLabelBuilder::default().order(order).build(g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelStats {
    pub vertices: usize,
    pub entries: usize,
    pub avg_label: f64,
    pub max_label: usize,
    pub bytes: usize,
}

/// Per-vertex sorted `(hub, distance)` lists with the 2-hop cover property.
#[derive(Debug)]
pub struct HubLabeling {
    offsets: Vec<usize>,
    hubs: Vec<VertexId>,
    dists: Vec<Dist>,
    checksum: u64,
    policy: String,
    calls: AtomicU64,
}

impl HubLabeling {
    pub fn num_vertices(&self) -> usize {
        self.offsets.len() - 1
    }

    /// The label of `v`: hub ids ascending, with distances.
    pub fn label(&self, v: VertexId) -> (&[VertexId], &[Dist]) {
        let (a, b) = (self.offsets[v as usize], self.offsets[v as usize + 1]);
        (&self.hubs[a..b], &self.dists[a..b])
    }

    /// Distance via the best common hub; does not touch the call counter.
    pub fn query(&self, u: VertexId, v: VertexId) -> Dist {
        if u == v {
            return 0;
        }
        let (hu, du) = self.label(u);
        let (hv, dv) = self.label(v);
        let (mut i, mut j) = (0, 0);
        let mut best = INFINITE;
        while i < hu.len() && j < hv.len() {
            match hu[i].cmp(&hv[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    best = best.min(du[i] + dv[j]);
                    i += 1;
                    j += 1;
                }
            }
        }
        best
    }

    pub fn graph_checksum(&self) -> u64 {
        self.checksum
    }

    pub fn policy(&self) -> &str {
        &self.policy
    }

    pub fn stats(&self) -> LabelStats {
        let n = self.num_vertices();
        let max_label = (0..n).map(|v| self.offsets[v + 1] - self.offsets[v]).max().unwrap_or(0);
        LabelStats {
            vertices: n,
            entries: self.hubs.len(),
            avg_label: self.hubs.len() as f64 / n.max(1) as f64,
            max_label,
            bytes: self.hubs.len() * ENTRY_BYTES,
        }
    }

    /// Writes the versioned little-endian label file.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = LeWriter::new(BufWriter::new(File::create(path)?));
        w.bytes(MAGIC)?;
        w.u32(VERSION)?;
        w.u64(self.checksum)?;
        w.str(&self.policy)?;
        w.u64(self.num_vertices() as u64)?;
        for v in 0..self.num_vertices() as VertexId {
            let (hubs, dists) = self.label(v);
            w.u32(hubs.len() as u32)?;
            for (&h, &d) in hubs.iter().zip(dists) {
                w.u32(h)?;
                w.u64(d)?;
            }
        }
        w.finish()?;
        Ok(())
    }

    /// Loads a label file, rejecting it unless it was built for `g`.
    pub fn load(path: &Path, g: &RoadNetwork) -> Result<Self> {
        let mut r = LeReader::new(BufReader::new(File::open(path)?));
        r.expect_magic(MAGIC)?;
        r.expect_version(VERSION)?;
        let checksum = r.u64()?;
        if checksum != g.checksum() {
            return Err(Error::ChecksumMismatch { expected: g.checksum(), found: checksum });
        }
        let policy = r.str()?;
        let n = r.u64()? as usize;
        if n != g.num_vertices() {
            return Err(Error::Format(format!("label file has {n} vertices, graph has {}", g.num_vertices())));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut hubs = Vec::new();
        let mut dists = Vec::new();
        offsets.push(0);
        for _ in 0..n {
            let len = r.u32()? as usize;
            let mut prev = None;
            for _ in 0..len {
                let h = r.u32()?;
                if h as usize >= n || prev.is_some_and(|p| p >= h) {
                    return Err(Error::Format("label hubs out of range or unsorted".into()));
                }
                prev = Some(h);
                hubs.push(h);
                dists.push(r.u64()?);
            }
            offsets.push(hubs.len());
        }
        Ok(Self { offsets, hubs, dists, checksum, policy, calls: AtomicU64::new(0) })
    }
}

impl DistanceOracle for HubLabeling {
    #[inline]
    fn dist(&self, u: VertexId, v: VertexId) -> Dist {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.query(u, v)
    }

    fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    fn reset_calls(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }

    fn id(&self) -> String {
        format!("hub-labels({})", self.policy)
    }
}
