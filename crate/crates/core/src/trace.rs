//! JSONL event log for searches, and masked trace comparison for replay
//! checks.
//!
//! The first event of every trace is a `header` event carrying the config,
//! backend identifiers and crate version. `elapsed_us` is the only field that
//! may differ between two replays of the same deterministic search.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed trace line {line}: {source}")]
    Malformed {
        line: usize,
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Header,
    ChecklistInit,
    Selection,
    SubqueryProposed,
    Retrieval,
    Summarization,
    Reward,
    FeedbackApplied,
    Backprop,
    MemoryAdmit,
    MemoryReject,
    Terminate,
    Answer,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub seq: u64,
    pub phase: Phase,
    pub payload: Value,
    pub elapsed_us: u64,
}

/// Destination for trace events.
pub trait TraceSink: Send {
    fn write(&mut self, event: &TraceEvent) -> std::io::Result<()>;

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

/// Discards events; the [`Tracer`] still keeps them in memory.
#[derive(Debug, Default)]
pub struct NullSink;

impl TraceSink for NullSink {
    fn write(&mut self, _event: &TraceEvent) -> std::io::Result<()> {
        Ok(())
    }
}

/// One JSON object per line.
pub struct JsonlSink<W: Write + Send> {
    out: W,
}

impl JsonlSink<BufWriter<File>> {
    pub fn create(path: &Path) -> std::io::Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        Ok(Self::new(BufWriter::new(File::create(path)?)))
    }
}

impl<W: Write + Send> JsonlSink<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write + Send> TraceSink for JsonlSink<W> {
    fn write(&mut self, event: &TraceEvent) -> std::io::Result<()> {
        serde_json::to_writer(&mut self.out, event)?;
        self.out.write_all(b"\n")
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}

/// Assigns sequence numbers and timestamps, forwards events to a sink and
/// keeps an in-memory copy so an aborted search can hand back its partial
/// trace.
pub struct Tracer {
    sink: Box<dyn TraceSink>,
    events: Vec<TraceEvent>,
    started: Instant,
}

impl Tracer {
    pub fn new(sink: Box<dyn TraceSink>) -> Self {
        Self {
            sink,
            events: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn in_memory() -> Self {
        Self::new(Box::new(NullSink))
    }

    pub fn emit(&mut self, phase: Phase, payload: Value) -> Result<(), TraceError> {
        let event = TraceEvent {
            seq: self.events.len() as u64,
            phase,
            payload,
            elapsed_us: self.started.elapsed().as_micros() as u64,
        };
        self.sink.write(&event)?;
        self.events.push(event);
        Ok(())
    }

    pub fn warn(&mut self, message: impl Into<String>, detail: Value) -> Result<(), TraceError> {
        self.emit(
            Phase::Warning,
            serde_json::json!({ "message": message.into(), "detail": detail }),
        )
    }

    pub fn flush(&mut self) -> Result<(), TraceError> {
        Ok(self.sink.flush()?)
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn into_events(self) -> Vec<TraceEvent> {
        self.events
    }
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceEvent>, TraceError> {
    let reader = BufReader::new(File::open(path)?);
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line).map_err(|source| TraceError::Malformed {
            line: i + 1,
            source,
        })?;
        events.push(event);
    }
    Ok(events)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReplayVerdict {
    pub equal: bool,
    /// Sequence number of the first event that differs, or of the first
    /// event present in only one trace.
    pub first_divergence: Option<u64>,
}

/// Compare two traces ignoring `elapsed_us`.
pub fn replay_verify(a: &[TraceEvent], b: &[TraceEvent]) -> ReplayVerdict {
    let same = |x: &TraceEvent, y: &TraceEvent| x.seq == y.seq && x.phase == y.phase && x.payload == y.payload;
    let first = a
        .iter()
        .zip(b)
        .position(|(x, y)| !same(x, y))
        .or_else(|| (a.len() != b.len()).then(|| a.len().min(b.len())));
    match first {
        None => ReplayVerdict {
            equal: true,
            first_divergence: None,
        },
        Some(i) => ReplayVerdict {
            equal: false,
            first_divergence: Some(a.get(i).or(b.get(i)).map_or(i as u64, |e| e.seq)),
        },
    }
}
