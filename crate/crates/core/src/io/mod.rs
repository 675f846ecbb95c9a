//! Configuration files, CSV series and snapshots.

mod config;
mod series;
mod snapshot;

pub use config::{parse_config, ConfigError, ConfigErrors, RunConfig, SnapshotFormat, SweepConfig};
pub use series::{
    parse_series, read_series, series_time_step, series_to_csv, write_series, SERIES_HEADER,
};
pub use snapshot::{
    road_companion, snapshot_field_csv, snapshot_road_csv, snapshot_vtk, write_snapshot,
};

use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

impl IoError {
    fn file(path: &Path, source: std::io::Error) -> Self {
        Self::File {
            path: path.to_path_buf(),
            source,
        }
    }

    fn format(line: usize, message: String) -> Self {
        Self::Format { line, message }
    }
}
