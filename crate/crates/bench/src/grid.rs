//! Experiment grid: one parameter varies per sweep, the rest stay at defaults.

use std::fmt;
use std::str::FromStr;

use anyhow::{bail, Result};
use fann::AggregateKind;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    M,
    K,
    Phi,
    Coverage,
}

impl Param {
    pub const ALL: [Param; 4] = [Param::M, Param::K, Param::Phi, Param::Coverage];
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Param::M => "m",
            Param::K => "k",
            Param::Phi => "phi",
            Param::Coverage => "coverage",
        })
    }
}

impl FromStr for Param {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "m" => Param::M,
            "k" => Param::K,
            "phi" => Param::Phi,
            "coverage" | "c" => Param::Coverage,
            other => bail!("unknown sweep parameter `{other}` (expected m, k, phi or coverage)"),
        })
    }
}

/// Parameters of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellParams {
    /// Number of query points.
    pub m: usize,
    pub k: usize,
    pub phi: f64,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentGrid {
    pub datasets: Vec<String>,
    pub ms: Vec<usize>,
    pub ks: Vec<usize>,
    pub phis: Vec<f64>,
    pub coverages: Vec<f64>,
    pub defaults: CellParams,
    pub default_dataset: String,
    pub kinds: Vec<AggregateKind>,
    pub trials: usize,
    pub seed: u64,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        Self {
            datasets: ["NY", "BAY", "COL", "FLA", "NW"].map(String::from).to_vec(),
            ms: vec![64, 128, 256, 512, 1024],
            ks: vec![1, 5, 10, 15, 20],
            phis: vec![0.1, 0.3, 0.5, 0.8, 1.0],
            coverages: vec![0.01, 0.05, 0.10, 0.15, 0.20],
            defaults: CellParams { m: 256, k: 1, phi: 0.5, coverage: 0.10 },
            default_dataset: "NW".into(),
            kinds: AggregateKind::ALL.to_vec(),
            trials: 100,
            seed: 0,
        }
    }
}

impl ExperimentGrid {
    /// Cells of a sweep over `vary`, or the single default cell.
    pub fn cells(&self, vary: Option<Param>) -> Vec<CellParams> {
        let d = self.defaults;
        match vary {
            None => vec![d],
            Some(Param::M) => self.ms.iter().map(|&m| CellParams { m, ..d }).collect(),
            Some(Param::K) => self.ks.iter().map(|&k| CellParams { k, ..d }).collect(),
            Some(Param::Phi) => self.phis.iter().map(|&phi| CellParams { phi, ..d }).collect(),
            Some(Param::Coverage) => self.coverages.iter().map(|&coverage| CellParams { coverage, ..d }).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            bail!("trials must be at least 1");
        }
        if self.kinds.is_empty() {
            bail!("no aggregate kinds selected");
        }
        let cells = Param::ALL.iter().flat_map(|&p| self.cells(Some(p)));
        for c in cells {
            if c.m == 0 || c.k == 0 {
                bail!("M and k must be positive");
            }
            if !(c.phi > 0.0 && c.phi <= 1.0) {
                bail!("phi {} outside (0, 1]", c.phi);
            }
            if !(c.coverage > 0.0 && c.coverage <= 1.0) {
                bail!("coverage {} outside (0, 1]", c.coverage);
            }
        }
        Ok(())
    }
}
