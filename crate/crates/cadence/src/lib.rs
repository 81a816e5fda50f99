//! File formats, experiment harness and command-line front end for
//! `cadence-core`.

pub mod cli;
pub mod config;
pub mod dataio;
pub mod error;
pub mod formats;
pub mod fsutil;
pub mod harness;
pub mod model_file;

pub use config::RunConfig;
pub use dataio::{load_csv, load_manifest, read_labels, write_csv, ManifestEntry};
pub use error::{CliError, DataError, ModelFileError};
pub use model_file::{load_model, save_model};
