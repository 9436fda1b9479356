//! File formats, report rendering, parallel execution and run configuration
//! for [`ureg_core`]. The `ureg` binary is a thin layer over this crate.

pub mod config;
pub mod descriptor;
pub mod output;
pub mod parallel;

pub use config::{Format, RunConfig, Source};
pub use descriptor::{emit_descriptor, load_descriptor, parse_descriptor, DescriptorError};
pub use parallel::Rayon;
