//! Rectangle tree over POI coordinates, bulk-loaded with Sort-Tile-Recursive.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::mtree::{NodeId, DEFAULT_CAPACITY};
use crate::roadnet::{coord_dist, RoadNetwork};
use crate::{Error, Result, VertexId};

/// Closed axis-aligned rectangle in coordinate space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub min: [i64; 2],
    pub max: [i64; 2],
}

impl Rect {
    pub fn point(p: [i64; 2]) -> Self {
        Self { min: p, max: p }
    }

    pub fn union(&self, o: &Rect) -> Rect {
        Rect {
            min: [self.min[0].min(o.min[0]), self.min[1].min(o.min[1])],
            max: [self.max[0].max(o.max[0]), self.max[1].max(o.max[1])],
        }
    }

    pub fn contains_point(&self, p: [i64; 2]) -> bool {
        (0..2).all(|d| self.min[d] <= p[d] && p[d] <= self.max[d])
    }

    pub fn contains(&self, o: &Rect) -> bool {
        self.contains_point(o.min) && self.contains_point(o.max)
    }

    /// Coordinate distance from `p` to the nearest point of the rectangle.
    pub fn mindist(&self, p: [i64; 2]) -> f64 {
        let clamp = [p[0].clamp(self.min[0], self.max[0]), p[1].clamp(self.min[1], self.max[1])];
        coord_dist(p, clamp)
    }

    fn center2(&self) -> [i128; 2] {
        [self.min[0] as i128 + self.max[0] as i128, self.min[1] as i128 + self.max[1] as i128]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RectEntry {
    pub mbr: Rect,
    pub child: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RectKind {
    Leaf(Vec<(VertexId, [i64; 2])>),
    Inner(Vec<RectEntry>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RectNode {
    pub mbr: Rect,
    pub height: u32,
    pub kind: RectKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MbrViolation {
    PointOutside { node: NodeId, oid: VertexId },
    ChildOutside { node: NodeId, child: NodeId },
    EntryMismatch { node: NodeId, child: NodeId },
    Overfull { node: NodeId, len: usize },
}

#[derive(Debug)]
pub struct RectTree {
    nodes: Vec<RectNode>,
    root: NodeId,
    capacity: usize,
    objects: usize,
    accesses: AtomicU64,
}

impl RectTree {
    /// STR bulk load with the default capacity.
    pub fn build(g: &RoadNetwork, pois: &[VertexId]) -> Result<Self> {
        Self::build_with_capacity(g, pois, DEFAULT_CAPACITY)
    }

    pub fn build_with_capacity(g: &RoadNetwork, pois: &[VertexId], capacity: usize) -> Result<Self> {
        if capacity < 2 || capacity > u16::MAX as usize {
            return Err(Error::Capacity(capacity));
        }
        let mut ids = pois.to_vec();
        ids.sort_unstable();
        ids.dedup();
        if ids.is_empty() {
            return Err(Error::InvalidQuery("cannot index an empty POI set".into()));
        }
        let objects = ids.len();
        let mut nodes = Vec::new();

        let points: Vec<(VertexId, [i64; 2])> = ids.iter().map(|&v| (v, g.coord(v))).collect();
        let mut level: Vec<NodeId> = str_tiles(points, capacity, |p| [2 * p.1[0] as i128, 2 * p.1[1] as i128])
            .into_iter()
            .map(|leaf| {
                let mbr = leaf.iter().map(|p| Rect::point(p.1)).reduce(|a, b| a.union(&b)).expect("non-empty tile");
                nodes.push(RectNode { mbr, height: 0, kind: RectKind::Leaf(leaf) });
                (nodes.len() - 1) as NodeId
            })
            .collect();
        let mut height = 0;
        while level.len() > 1 {
            height += 1;
            let entries: Vec<RectEntry> =
                level.iter().map(|&child| RectEntry { mbr: nodes[child as usize].mbr, child }).collect();
            level = str_tiles(entries, capacity, |e| e.mbr.center2())
                .into_iter()
                .map(|group| {
                    let mbr = group.iter().map(|e| e.mbr).reduce(|a, b| a.union(&b)).expect("non-empty tile");
                    nodes.push(RectNode { mbr, height, kind: RectKind::Inner(group) });
                    (nodes.len() - 1) as NodeId
                })
                .collect();
        }
        Ok(Self { nodes, root: level[0], capacity, objects, accesses: AtomicU64::new(0) })
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.objects
    }

    pub fn is_empty(&self) -> bool {
        self.objects == 0
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Number of levels, 1 for a single leaf.
    pub fn height(&self) -> usize {
        self.nodes[self.root as usize].height as usize + 1
    }

    pub fn node(&self, id: NodeId) -> &RectNode {
        &self.nodes[id as usize]
    }

    /// Node read during a search; bumps the access counter.
    #[inline]
    pub fn visit(&self, id: NodeId) -> &RectNode {
        self.accesses.fetch_add(1, Ordering::Relaxed);
        &self.nodes[id as usize]
    }

    pub fn node_accesses(&self) -> u64 {
        self.accesses.load(Ordering::Relaxed)
    }

    pub fn reset_node_accesses(&self) {
        self.accesses.store(0, Ordering::Relaxed);
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut RectNode {
        &mut self.nodes[id as usize]
    }

    /// Containment of points and child rectangles, entry/child MBR agreement
    /// and capacity.
    pub fn audit_mbrs(&self) -> Vec<MbrViolation> {
        let mut out = Vec::new();
        for (id, node) in self.nodes.iter().enumerate() {
            let id = id as NodeId;
            match &node.kind {
                RectKind::Leaf(points) => {
                    if points.len() > self.capacity {
                        out.push(MbrViolation::Overfull { node: id, len: points.len() });
                    }
                    for &(oid, p) in points {
                        if !node.mbr.contains_point(p) {
                            out.push(MbrViolation::PointOutside { node: id, oid });
                        }
                    }
                }
                RectKind::Inner(entries) => {
                    if entries.len() > self.capacity {
                        out.push(MbrViolation::Overfull { node: id, len: entries.len() });
                    }
                    for e in entries {
                        let child = &self.nodes[e.child as usize];
                        if e.mbr != child.mbr {
                            out.push(MbrViolation::EntryMismatch { node: id, child: e.child });
                        }
                        if !node.mbr.contains(&child.mbr) {
                            out.push(MbrViolation::ChildOutside { node: id, child: e.child });
                        }
                    }
                }
            }
        }
        out
    }

    /// All objects stored below `id`.
    pub fn subtree_objects(&self, id: NodeId) -> Vec<VertexId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            match &self.nodes[n as usize].kind {
                RectKind::Leaf(points) => out.extend(points.iter().map(|p| p.0)),
                RectKind::Inner(entries) => stack.extend(entries.iter().map(|e| e.child)),
            }
        }
        out
    }
}

/// Sort-Tile-Recursive grouping: sort by x into `ceil(sqrt(pages))` vertical
/// slabs, sort each slab by y and cut it into runs of `capacity`.
fn str_tiles<T>(mut items: Vec<T>, capacity: usize, key: impl Fn(&T) -> [i128; 2]) -> Vec<Vec<T>> {
    let pages = items.len().div_ceil(capacity);
    let slabs = (pages as f64).sqrt().ceil().max(1.0) as usize;
    let per_slab = pages.div_ceil(slabs) * capacity;
    items.sort_by_key(|t| key(t));
    let mut out = Vec::with_capacity(pages);
    let mut rest = items;
    while !rest.is_empty() {
        let tail = rest.split_off(per_slab.min(rest.len()));
        let mut slab = std::mem::replace(&mut rest, tail);
        slab.sort_by_key(|t| {
            let k = key(t);
            [k[1], k[0]]
        });
        while !slab.is_empty() {
            let tail = slab.split_off(capacity.min(slab.len()));
            out.push(std::mem::replace(&mut slab, tail));
        }
    }
    out
}
