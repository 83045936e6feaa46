//! Dataset names and where their files live.
//!
//! A dataset is either a DIMACS road network, looked up by its short name
//! (`NY`, `BAY`, `NW`, ...) as `USA-road-d.<NAME>.gr[.gz]` and
//! `USA-road-d.<NAME>.co[.gz]` in the data directory, or a seeded synthetic
//! network: `grid:<side>[:<seed>]`, `rgg:<n>[:<extra>[:<seed>]]` or
//! `metro:<n>[:<seed>]` (clustered cores split by rivers with few bridges).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use fann::roadnet::synth::{grid_network, metro_network, random_geometric};
use fann::roadnet::{load_dimacs_files, CoordProjection, ParseOptions};
use fann::RoadNetwork;

/// Environment variable naming the data directory.
pub const DATA_DIR_ENV: &str = "FANN_DATA_DIR";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetSource {
    Dimacs { name: String },
    Grid { side: usize, seed: u64 },
    Geometric { n: usize, extra: usize, seed: u64 },
    Metro { n: usize, seed: u64 },
}

impl FromStr for DatasetSource {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or_default();
        let mut num = |what: &str, default: Option<u64>| -> Result<u64> {
            match parts.next() {
                Some(p) => p.parse().with_context(|| format!("bad {what} `{p}` in dataset `{s}`")),
                None => default.ok_or_else(|| anyhow!("dataset `{s}` is missing its {what}")),
            }
        };
        let src = match head {
            "grid" => DatasetSource::Grid { side: num("side", None)? as usize, seed: num("seed", Some(1))? },
            "rgg" => DatasetSource::Geometric {
                n: num("vertex count", None)? as usize,
                extra: num("extra degree", Some(2))? as usize,
                seed: num("seed", Some(1))?,
            },
            "metro" => DatasetSource::Metro { n: num("vertex count", None)? as usize, seed: num("seed", Some(1))? },
            name if !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') => {
                DatasetSource::Dimacs { name: name.to_string() }
            }
            _ => bail!("unrecognized dataset `{s}`"),
        };
        if parts.next().is_some() {
            bail!("trailing fields in dataset `{s}`");
        }
        Ok(src)
    }
}

impl fmt::Display for DatasetSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSource::Dimacs { name } => f.write_str(name),
            DatasetSource::Grid { side, seed } => write!(f, "grid:{side}:{seed}"),
            DatasetSource::Geometric { n, extra, seed } => write!(f, "rgg:{n}:{extra}:{seed}"),
            DatasetSource::Metro { n, seed } => write!(f, "metro:{n}:{seed}"),
        }
    }
}

impl DatasetSource {
    /// File-name friendly identifier.
    pub fn slug(&self) -> String {
        self.to_string().replace(':', "-")
    }

    pub fn is_synthetic(&self) -> bool {
        !matches!(self, DatasetSource::Dimacs { .. })
    }

    /// Edge-weight variant recorded in benchmark metadata.
    pub fn weight_variant(&self) -> &'static str {
        match self {
            DatasetSource::Dimacs { .. } => "dimacs-distance",
            _ => "synthetic-physical-length",
        }
    }

    /// Loads and preprocesses the network (largest component, dense ids).
    pub fn load(&self, data_dir: &Path) -> Result<RoadNetwork> {
        match self {
            DatasetSource::Dimacs { name } => {
                let (gr, co) = dimacs_paths(data_dir, name).ok_or_else(|| {
                    anyhow!("no USA-road-d.{name}.gr[.gz] / .co[.gz] pair in {}", data_dir.display())
                })?;
                let opts = ParseOptions { projection: CoordProjection::Equirectangular };
                let raw = load_dimacs_files(&gr, &co, opts).with_context(|| format!("loading {}", gr.display()))?;
                Ok(raw.preprocess()?)
            }
            DatasetSource::Grid { side, seed } => Ok(grid_network(*side, *seed)),
            DatasetSource::Geometric { n, extra, seed } => Ok(random_geometric(*n, *extra, *seed).preprocess()?),
            DatasetSource::Metro { n, seed } => {
                if *n < 16 {
                    bail!("metro networks need at least 16 vertices");
                }
                Ok(metro_network(*n, *seed))
            }
        }
    }
}

/// The data directory: the environment variable if set, else `./data`.
pub fn data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("data"))
}

/// Locates the `.gr` / `.co` pair of a DIMACS dataset, preferring plain files.
pub fn dimacs_paths(dir: &Path, name: &str) -> Option<(PathBuf, PathBuf)> {
    let find = |ext: &str| {
        [format!("USA-road-d.{name}.{ext}"), format!("USA-road-d.{name}.{ext}.gz")]
            .into_iter()
            .map(|f| dir.join(f))
            .find(|p| p.is_file())
    };
    Some((find("gr")?, find("co")?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        assert_eq!("NY".parse::<DatasetSource>().unwrap(), DatasetSource::Dimacs { name: "NY".into() });
        assert_eq!("grid:40".parse::<DatasetSource>().unwrap(), DatasetSource::Grid { side: 40, seed: 1 });
        let rgg: DatasetSource = "rgg:500:3:9".parse().unwrap();
        assert_eq!(rgg.to_string(), "rgg:500:3:9");
        assert_eq!(rgg.slug(), "rgg-500-3-9");
        assert_eq!("metro:900".parse::<DatasetSource>().unwrap(), DatasetSource::Metro { n: 900, seed: 1 });
        assert!("grid".parse::<DatasetSource>().is_err());
        assert!("grid:4:1:2".parse::<DatasetSource>().is_err());
        assert!("../x".parse::<DatasetSource>().is_err());
    }

    #[test]
    fn missing_dimacs_files_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = DatasetSource::Dimacs { name: "NY".into() }.load(dir.path()).unwrap_err();
        assert!(err.to_string().contains("USA-road-d.NY"));
    }
}
