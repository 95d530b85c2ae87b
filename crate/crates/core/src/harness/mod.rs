//! Experiment configuration, deterministic parallel execution and output.

pub mod config;
pub mod ensemble;
pub mod experiments;
pub mod output;
pub mod stream;

pub use config::{ConfigOverrides, ExperimentConfig, ExperimentKind};
pub use ensemble::{run_final_z, run_ordered, run_summary};
pub use experiments::{run_experiment, ExperimentOutput};
pub use output::{RunManifest, MANIFEST_NAME};
pub use stream::{derive_stream, sub_seed, Stream};
