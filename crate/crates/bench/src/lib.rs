//! Benchmark harness for k-FANN search: dataset loading, index building and
//! caching, query workloads, the audit battery and experiment sweeps.

pub mod artifacts;
pub mod dataset;
pub mod differential;
pub mod grid;
pub mod sweep;
pub mod verify;
pub mod workload;

pub use artifacts::{Artifacts, BuildConfig};
pub use dataset::DatasetSource;
pub use grid::{CellParams, ExperimentGrid, Param};
pub use sweep::{run_sweep, Engine, EngineDisagreement, SweepRequest, SweepSummary};
pub use verify::{verify, VerifyOptions, VerifyReport};
pub use workload::{gen_queries, QueryWorkload};
