//! Command-line shell around `humtrack-core`: scene configuration, metric
//! tables, dataset export and run manifests.

pub mod app;
pub mod config;
pub mod dataset;
pub mod manifest;
pub mod output;

pub use app::{run, Cli, CliError, Command};
pub use config::{load_config, parse_scene_config, ConfigError, ConfigFile, LoadedConfig};
pub use dataset::{export_dataset, DatasetRecord};
pub use manifest::{RunManifest, RunRecorder};
pub use output::{format_g9, write_metrics_csv, CsvTable};
