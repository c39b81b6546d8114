//! Mapping errors onto process exit codes.

use std::fmt;

use hgmcts_core::backends::corpus::CorpusError;
use hgmcts_core::backends::scripted::ScenarioError;
use hgmcts_core::evaluation::DatasetError;
use hgmcts_core::trace::TraceError;
use hgmcts_core::{BackendError, SearchError};

pub const OK: u8 = 0;
/// Traces differ.
pub const DIVERGED: u8 = 1;
pub const USAGE: u8 = 2;
pub const UNAVAILABLE: u8 = 3;
pub const IO: u8 = 4;

/// Bad flags, arguments or config.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// Some benchmark items stopped because a backend was unreachable.
#[derive(Debug)]
pub struct ItemsAborted(pub usize);

impl fmt::Display for ItemsAborted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} item(s) aborted on an unavailable backend", self.0)
    }
}

impl std::error::Error for ItemsAborted {}

fn backend_code(e: &BackendError) -> u8 {
    match e {
        BackendError::Unavailable(_) => UNAVAILABLE,
        _ => USAGE,
    }
}

/// Exit code of the outermost error in the chain that has a known kind.
pub fn code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return USAGE;
        }
        if cause.is::<ItemsAborted>() {
            return UNAVAILABLE;
        }
        if let Some(e) = cause.downcast_ref::<SearchError>() {
            return match e {
                SearchError::Aborted { cause, .. } => backend_code(cause),
                SearchError::TraceIo { .. } => IO,
                _ => USAGE,
            };
        }
        if let Some(e) = cause.downcast_ref::<BackendError>() {
            return backend_code(e);
        }
        if let Some(e) = cause.downcast_ref::<DatasetError>() {
            return match e {
                DatasetError::Io(_) => IO,
                DatasetError::Line { .. } => USAGE,
            };
        }
        if let Some(e) = cause.downcast_ref::<ScenarioError>() {
            return match e {
                ScenarioError::Io { .. } | ScenarioError::Corpus(CorpusError::Io { .. }) => IO,
                _ => USAGE,
            };
        }
        if let Some(e) = cause.downcast_ref::<CorpusError>() {
            return match e {
                CorpusError::Io { .. } => IO,
                _ => USAGE,
            };
        }
        if cause.is::<TraceError>() || cause.is::<std::io::Error>() {
            return IO;
        }
    }
    USAGE
}
