//! DIMACS shortest-path challenge text formats (`.gr` arcs, `.co` coordinates).

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;

use super::RoadNetwork;
use crate::{Error, Result, VertexId};

/// How raw `.co` coordinates are mapped onto the plane.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum CoordProjection {
    /// Use coordinates exactly as read.
    #[default]
    Identity,
    /// Treat `x, y` as micro-degrees of longitude/latitude and scale
    /// longitude by the cosine of the mean latitude.
    Equirectangular,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    pub projection: CoordProjection,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| parse_err(line, format!("invalid {what} `{tok}`")))
}

/// Parses a `.gr`/`.co` pair with coordinates taken as-is.
pub fn parse_dimacs<G: BufRead, C: BufRead>(gr: G, co: C) -> Result<RoadNetwork> {
    parse_dimacs_with(gr, co, ParseOptions::default())
}

pub fn parse_dimacs_with<G: BufRead, C: BufRead>(
    gr: G,
    co: C,
    opts: ParseOptions,
) -> Result<RoadNetwork> {
    let mut declared: Option<usize> = None;
    let mut arcs: Vec<(VertexId, VertexId, u32)> = Vec::new();
    for (idx, line) in gr.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let mut toks = line.split_whitespace();
        match toks.next() {
            None | Some("c") => continue,
            Some("p") => {
                if declared.is_some() {
                    return Err(parse_err(lineno, "duplicate problem line"));
                }
                match toks.next() {
                    Some("sp") => {}
                    other => {
                        return Err(parse_err(lineno, format!("expected `p sp`, got {other:?}")))
                    }
                }
                let n: usize = field(toks.next(), lineno, "vertex count")?;
                let m: usize = field(toks.next(), lineno, "arc count")?;
                declared = Some(n);
                arcs.reserve(m);
            }
            Some("a") => {
                let n = declared.ok_or_else(|| parse_err(lineno, "arc before problem line"))?;
                let u: u64 = field(toks.next(), lineno, "arc tail")?;
                let v: u64 = field(toks.next(), lineno, "arc head")?;
                let w: u32 = field(toks.next(), lineno, "arc weight")?;
                for id in [u, v] {
                    if id == 0 || id > n as u64 {
                        return Err(Error::Validation(format!(
                            "line {lineno}: arc endpoint {id} outside declared range 1..={n}"
                        )));
                    }
                }
                arcs.push(((u - 1) as VertexId, (v - 1) as VertexId, w));
            }
            Some(tag) => return Err(parse_err(lineno, format!("unknown line type `{tag}`"))),
        }
    }
    let n = declared.ok_or_else(|| parse_err(0, "missing `p sp` problem line"))?;
    if n > VertexId::MAX as usize {
        return Err(Error::Validation(format!("{n} vertices exceed the supported id range")));
    }

    let mut coords: Vec<Option<[i64; 2]>> = vec![None; n];
    for (idx, line) in co.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let mut toks = line.split_whitespace();
        match toks.next() {
            None | Some("c") | Some("p") => continue,
            Some("v") => {
                let id: u64 = field(toks.next(), lineno, "vertex id")?;
                let x: i64 = field(toks.next(), lineno, "x coordinate")?;
                let y: i64 = field(toks.next(), lineno, "y coordinate")?;
                if id == 0 || id > n as u64 {
                    return Err(Error::Validation(format!(
                        "line {lineno}: coordinate for vertex {id} outside 1..={n}"
                    )));
                }
                coords[(id - 1) as usize] = Some([x, y]);
            }
            Some(tag) => return Err(parse_err(lineno, format!("unknown line type `{tag}`"))),
        }
    }
    let mut resolved = Vec::with_capacity(n);
    for (i, c) in coords.into_iter().enumerate() {
        resolved.push(c.ok_or_else(|| {
            Error::Validation(format!("vertex {} has no coordinate", i + 1))
        })?);
    }
    if opts.projection == CoordProjection::Equirectangular {
        project_equirectangular(&mut resolved);
    }
    RoadNetwork::from_edges(resolved, arcs)
}

fn project_equirectangular(coords: &mut [[i64; 2]]) {
    if coords.is_empty() {
        return;
    }
    let mean_lat = coords.iter().map(|c| c[1] as f64).sum::<f64>() / coords.len() as f64;
    let k = (mean_lat * 1e-6).to_radians().cos();
    for c in coords {
        c[0] = (c[0] as f64 * k).round() as i64;
    }
}

fn open_maybe_gz(path: &Path) -> Result<Box<dyn BufRead>> {
    let mut file = File::open(path)?;
    let mut magic = [0u8; 2];
    let gz = file.read(&mut magic)? == 2 && magic == [0x1f, 0x8b];
    let file = File::open(path)?;
    Ok(if gz {
        Box::new(BufReader::with_capacity(1 << 20, MultiGzDecoder::new(file)))
    } else {
        Box::new(BufReader::with_capacity(1 << 20, file))
    })
}

/// Reads a `.gr`/`.co` pair from disk; gzip input is detected by magic bytes.
pub fn load_dimacs_files(gr: &Path, co: &Path, opts: ParseOptions) -> Result<RoadNetwork> {
    parse_dimacs_with(open_maybe_gz(gr)?, open_maybe_gz(co)?, opts)
}

/// Writes the graph in canonical DIMACS form: every undirected edge as two
/// arcs, arcs ordered by tail then head.
pub fn write_dimacs<G: Write, C: Write>(g: &RoadNetwork, mut gr: G, mut co: C) -> Result<()> {
    let n = g.num_vertices();
    writeln!(gr, "p sp {} {}", n, 2 * g.num_edges())?;
    for u in 0..n as VertexId {
        for &(v, w) in g.neighbors(u) {
            writeln!(gr, "a {} {} {}", u + 1, v + 1, w)?;
        }
    }
    writeln!(co, "p aux sp co {n}")?;
    for (i, [x, y]) in g.coords().iter().enumerate() {
        writeln!(co, "v {} {} {}", i + 1, x, y)?;
    }
    gr.flush()?;
    co.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const CO3: &str = "p aux sp co 3\nv 1 0 0\nv 2 1 0\nv 3 2 0\n";

    #[test]
    fn symmetric_arcs_collapse() {
        let gr = "c tiny\np sp 3 4\na 1 2 2\na 2 1 2\na 2 3 3\na 3 2 3\n";
        let g = parse_dimacs(gr.as_bytes(), CO3.as_bytes()).unwrap();
        assert_eq!(g.num_vertices(), 3);
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.neighbors(1), &[(0, 2), (2, 3)]);
    }

    #[test]
    fn out_of_range_arc_is_validation_error() {
        let gr = "p sp 3 1\na 1 5 7\n";
        let err = parse_dimacs(gr.as_bytes(), CO3.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let gr = "p sp 3 1\nc ok\na 1 x 7\n";
        match parse_dimacs(gr.as_bytes(), CO3.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_coordinate_is_validation_error() {
        let gr = "p sp 3 1\na 1 3 7\n";
        let co = "v 1 0 0\nv 2 1 0\n";
        let err = parse_dimacs(gr.as_bytes(), co.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("vertex 3")), "{err}");
    }

    #[test]
    fn write_then_parse_is_identity() {
        let g = crate::roadnet::synth::random_geometric(120, 2, 11);
        let (mut gr, mut co) = (Vec::new(), Vec::new());
        write_dimacs(&g, &mut gr, &mut co).unwrap();
        let back = parse_dimacs(&gr[..], &co[..]).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.checksum(), g.checksum());
    }

    #[test]
    fn gzip_files_are_accepted() {
        use flate2::{write::GzEncoder, Compression};
        let dir = tempfile::tempdir().unwrap();
        let gr_path = dir.path().join("t.gr.gz");
        let co_path = dir.path().join("t.co");
        let mut enc = GzEncoder::new(File::create(&gr_path).unwrap(), Compression::fast());
        enc.write_all(b"p sp 3 2\na 1 2 2\na 2 3 3\n").unwrap();
        enc.finish().unwrap();
        std::fs::write(&co_path, CO3).unwrap();
        let g = load_dimacs_files(&gr_path, &co_path, ParseOptions::default()).unwrap();
        assert_eq!(g.num_edges(), 2);
    }

    #[test]
    fn equirectangular_shrinks_longitude() {
        let gr = "p sp 2 1\na 1 2 1\n";
        let co = "v 1 -74000000 60000000\nv 2 -73000000 60000000\n";
        let opts = ParseOptions { projection: CoordProjection::Equirectangular };
        let g = parse_dimacs_with(gr.as_bytes(), co.as_bytes(), opts).unwrap();
        // cos(60 deg) = 0.5
        assert_eq!(g.coord(0), [-37000000, 60000000]);
        assert_eq!(g.coord(1), [-36500000, 60000000]);
    }
}
