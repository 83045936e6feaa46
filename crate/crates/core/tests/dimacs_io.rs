//! DIMACS files on disk, plain and gzip-compressed.

use std::fs::File;
use std::io::Write;

use flate2::write::GzEncoder;
use flate2::Compression;
use fann::roadnet::synth::random_geometric;
use fann::roadnet::{load_dimacs_files, write_dimacs, ParseOptions};

#[test]
fn roundtrip_plain_and_gzip() {
    let g = random_geometric(300, 2, 11).preprocess().unwrap();
    let (mut gr, mut co) = (Vec::new(), Vec::new());
    write_dimacs(&g, &mut gr, &mut co).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let plain = (dir.path().join("x.gr"), dir.path().join("x.co"));
    std::fs::write(&plain.0, &gr).unwrap();
    std::fs::write(&plain.1, &co).unwrap();
    let gz = (dir.path().join("x.gr.gz"), dir.path().join("x.co.gz"));
    for (path, bytes) in [(&gz.0, &gr), (&gz.1, &co)] {
        let mut enc = GzEncoder::new(File::create(path).unwrap(), Compression::fast());
        enc.write_all(bytes).unwrap();
        enc.finish().unwrap();
    }

    for (a, b) in [plain, gz] {
        let back = load_dimacs_files(&a, &b, ParseOptions::default()).unwrap().preprocess().unwrap();
        assert_eq!(back.num_vertices(), g.num_vertices());
        assert_eq!(back.edges(), g.edges());
        assert_eq!(back.coords(), g.coords());
        assert_eq!(back.checksum(), g.checksum());
    }
}

#[test]
fn missing_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = load_dimacs_files(&dir.path().join("a.gr"), &dir.path().join("a.co"), ParseOptions::default());
    assert!(matches!(err, Err(fann::Error::Io(_))));
}
