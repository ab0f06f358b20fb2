//! Evaluation protocols, configuration, timing and reports behind the CLI.

pub mod benchmark;
pub mod config;
pub mod protocol;
pub mod report;
pub mod sweep;

pub use benchmark::{benchmark, extraction_scaling, linear_r2};
pub use config::{Preset, Protocol, ReportFormat, RunConfig};
pub use protocol::{evaluate, evaluate_model, Split};
pub use report::{MetricsReport, TimingReport};
pub use sweep::{sweep, SweepParam, SweepTable};
