//! Binary cache of a preprocessed graph, so later commands skip text parsing.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use super::{Edge, RoadNetwork};
use crate::binio::{LeReader, LeWriter};
use crate::{Error, Result, VertexId};

const MAGIC: &[u8; 8] = b"FANNRNET";
const VERSION: u32 = 1;

impl RoadNetwork {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = LeWriter::new(BufWriter::new(File::create(path)?));
        w.bytes(MAGIC)?;
        w.u32(VERSION)?;
        w.u64(self.checksum())?;
        w.u64(self.coords.len() as u64)?;
        w.u64(self.edges.len() as u64)?;
        for &[x, y] in &self.coords {
            w.u64(x as u64)?;
            w.u64(y as u64)?;
        }
        for e in &self.edges {
            w.u32(e.u)?;
            w.u32(e.v)?;
            w.u32(e.w)?;
        }
        w.finish()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = LeReader::new(BufReader::new(File::open(path)?));
        r.expect_magic(MAGIC)?;
        r.expect_version(VERSION)?;
        let checksum = r.u64()?;
        let n = r.u64()? as usize;
        let m = r.u64()? as usize;
        let mut coords = Vec::with_capacity(n);
        for _ in 0..n {
            coords.push([r.u64()? as i64, r.u64()? as i64]);
        }
        let mut edges = Vec::with_capacity(m);
        for _ in 0..m {
            let (u, v, w) = (r.u32()?, r.u32()?, r.u32()?);
            if u as usize >= n || v as usize >= n {
                return Err(Error::Format(format!("edge ({u}, {v}) out of range")));
            }
            edges.push(Edge { u, v, w });
        }
        let identity = (0..n as VertexId).map(Some).collect();
        let g = Self::assemble(coords, edges, identity);
        if g.checksum() != checksum {
            return Err(Error::ChecksumMismatch { expected: g.checksum(), found: checksum });
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_load_roundtrip() {
        let g = crate::roadnet::synth::grid_network(12, 3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.rnet");
        g.save(&path).unwrap();
        let back = RoadNetwork::load(&path).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.euclid_scale(), g.euclid_scale());
    }
}
