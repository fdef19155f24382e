use std::io;

use archclust::cut_clustering::ClusterError;
use archclust::graph::GraphFileError;
use archclust::normalize::NormalizeError;
use archclust::relations::RelationError;
use archclust::{PerfectizeError, SearchError, TreeError, TreeFileError};

pub const MISSING_FILE: u8 = 3;
pub const FORMAT: u8 = 4;
pub const INVALID_ARGUMENT: u8 = 5;
pub const ALGORITHM: u8 = 6;
pub const OTHER: u8 = 1;

/// A flag value that parsed but is out of range.
#[derive(Debug, thiserror::Error)]
#[error("invalid argument: {0}")]
pub struct InvalidArgument(pub String);

fn io_code(e: &io::Error) -> u8 {
    if e.kind() == io::ErrorKind::NotFound {
        MISSING_FILE
    } else {
        OTHER
    }
}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<InvalidArgument>() {
            return INVALID_ARGUMENT;
        }
        if let Some(e) = cause.downcast_ref::<io::Error>() {
            return io_code(e);
        }
        if let Some(e) = cause.downcast_ref::<RelationError>() {
            return match e {
                RelationError::Io(io) => io_code(io),
                RelationError::NegativeWeight { .. } => INVALID_ARGUMENT,
                _ => FORMAT,
            };
        }
        if let Some(e) = cause.downcast_ref::<GraphFileError>() {
            return match e {
                GraphFileError::Io(io) => io_code(io),
                _ => FORMAT,
            };
        }
        if let Some(e) = cause.downcast_ref::<TreeFileError>() {
            return match e {
                TreeFileError::Io(io) => io_code(io),
                _ => FORMAT,
            };
        }
        if let Some(e) = cause.downcast_ref::<SearchError>() {
            return match e {
                SearchError::Io(io) => io_code(io),
                SearchError::Json(_) | SearchError::StateMismatch(_) => FORMAT,
                SearchError::Config(_) => INVALID_ARGUMENT,
                SearchError::Cluster(ClusterError::Io(io)) => io_code(io),
                _ => ALGORITHM,
            };
        }
        if let Some(e) = cause.downcast_ref::<ClusterError>() {
            return match e {
                ClusterError::Io(io) => io_code(io),
                ClusterError::Dimacs(_) | ClusterError::WorkerFormat { .. } => FORMAT,
                _ => ALGORITHM,
            };
        }
        if let Some(e) = cause.downcast_ref::<PerfectizeError>() {
            return match e {
                PerfectizeError::InvalidThreshold(_) => INVALID_ARGUMENT,
                PerfectizeError::Disconnected => ALGORITHM,
            };
        }
        if cause.is::<NormalizeError>() || cause.is::<TreeError>() {
            return ALGORITHM;
        }
    }
    OTHER
}
