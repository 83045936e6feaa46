//! Versioned binary persistence bound to a graph checksum and an oracle id.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::sync::atomic::AtomicU64;

use super::{LeafEntry, MetricTree, Node, NodeKind, RoutingEntry};
use crate::binio::{LeReader, LeWriter};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"FANNMTRE";
const VERSION: u32 = 1;

/// Identity of the artifacts a tree file was built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeProvenance {
    pub graph_checksum: u64,
    pub oracle_id: String,
}

impl MetricTree {
    pub fn save(&self, path: &Path, provenance: &TreeProvenance) -> Result<()> {
        let mut w = LeWriter::new(BufWriter::new(File::create(path)?));
        w.bytes(MAGIC)?;
        w.u32(VERSION)?;
        w.u64(provenance.graph_checksum)?;
        w.str(&provenance.oracle_id)?;
        w.u32(self.capacity as u32)?;
        w.u64(self.objects as u64)?;
        w.u32(self.root)?;
        w.u32(self.nodes.len() as u32)?;
        for node in &self.nodes {
            w.u32(node.parent_oid)?;
            w.u32(node.height)?;
            match &node.kind {
                NodeKind::Leaf(entries) => {
                    w.u32(0)?;
                    w.u32(entries.len() as u32)?;
                    for e in entries {
                        w.u32(e.oid)?;
                        w.u64(e.parent_dist)?;
                    }
                }
                NodeKind::Inner(entries) => {
                    w.u32(1)?;
                    w.u32(entries.len() as u32)?;
                    for e in entries {
                        w.u32(e.routing_oid)?;
                        w.u64(e.radius)?;
                        w.u32(e.child)?;
                        w.u64(e.parent_dist)?;
                    }
                }
            }
        }
        w.finish()?;
        Ok(())
    }

    /// Loads a tree, rejecting files built for a different graph.
    pub fn load(path: &Path, graph_checksum: u64) -> Result<(Self, TreeProvenance)> {
        let mut r = LeReader::new(BufReader::new(File::open(path)?));
        r.expect_magic(MAGIC)?;
        r.expect_version(VERSION)?;
        let found = r.u64()?;
        if found != graph_checksum {
            return Err(Error::ChecksumMismatch { expected: graph_checksum, found });
        }
        let oracle_id = r.str()?;
        let capacity = r.u32()? as usize;
        let objects = r.u64()? as usize;
        let root = r.u32()?;
        let count = r.u32()? as usize;
        let mut nodes = Vec::with_capacity(count);
        for _ in 0..count {
            let parent_oid = r.u32()?;
            let height = r.u32()?;
            let tag = r.u32()?;
            let len = r.u32()? as usize;
            if len > capacity {
                return Err(Error::Format(format!("node with {len} entries exceeds capacity {capacity}")));
            }
            let kind = match tag {
                0 => {
                    let mut entries = Vec::with_capacity(len);
                    for _ in 0..len {
                        entries.push(LeafEntry { oid: r.u32()?, parent_dist: r.u64()? });
                    }
                    NodeKind::Leaf(entries)
                }
                1 => {
                    let mut entries = Vec::with_capacity(len);
                    for _ in 0..len {
                        let e = RoutingEntry {
                            routing_oid: r.u32()?,
                            radius: r.u64()?,
                            child: r.u32()?,
                            parent_dist: r.u64()?,
                        };
                        if e.child as usize >= count {
                            return Err(Error::Format(format!("child reference {} out of range", e.child)));
                        }
                        entries.push(e);
                    }
                    NodeKind::Inner(entries)
                }
                t => return Err(Error::Format(format!("unknown node tag {t}"))),
            };
            nodes.push(Node { parent_oid, height, kind });
        }
        if root as usize >= count {
            return Err(Error::Format("root reference out of range".into()));
        }
        let tree = MetricTree { nodes, root, capacity, objects, accesses: AtomicU64::new(0) };
        Ok((tree, TreeProvenance { graph_checksum: found, oracle_id }))
    }
}
