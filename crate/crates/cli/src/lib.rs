//! Run configs, artifact caching and manifests for the `oscnh` command.

pub mod cache;
pub mod config;
pub mod manifest;
pub mod parse;
pub mod pipeline;

pub use cache::{cache_key, Cache};
pub use config::{load_config, parse_config, LoadedConfig, Module, RunConfig};
pub use manifest::{Manifest, TaskRecord, TaskStatus};
pub use pipeline::{output_root_from_env, report, run, OUTPUT_ROOT_ENV};
