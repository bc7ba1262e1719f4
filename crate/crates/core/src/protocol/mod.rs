//! Subprocess protocol for external models, version "1".
//!
//! Messages are single-line JSON objects tagged by `type`, exchanged over
//! the model's standard input and output; standard error is free-form
//! diagnostics. Floats use the shortest decimal that round-trips.

mod handle;
mod messages;

pub use handle::{HandleState, HarnessHello, ModelHandle, Timeouts};
pub use messages::{decode_line, encode_line, sanitize_non_finite, FitReportWire, Message, WireFrame, WireTrainConfig};

use std::time::Duration;

use thiserror::Error;

pub const PROTOCOL_VERSION: &str = "1";

/// Energy (eV) and forces (eV/Å) predicted for one frame.
pub type PredictedFrame = (f64, Vec<[f64; 3]>);
/// Default cap on one protocol line, in bytes.
pub const MAX_LINE_BYTES: usize = 64 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("failed to launch model command {command:?}: {reason}")]
    Spawn { command: Vec<String>, reason: String },
    #[error("no {phase} reply within {:.1} s; model process terminated", timeout.as_secs_f64())]
    Timeout { phase: &'static str, timeout: Duration },
    #[error("model speaks protocol version {got:?}, harness requires {PROTOCOL_VERSION:?}")]
    VersionMismatch { got: String },
    #[error("malformed protocol line: {reason}")]
    Malformed { reason: String },
    #[error("model reported error {code}: {message}")]
    Model { code: String, message: String },
    #[error("model process exited (status {status:?}) during {phase}; stderr tail:\n{diagnostics}")]
    ProcessExited { phase: &'static str, status: Option<i32>, diagnostics: String },
    #[error("i/o error talking to the model: {0}")]
    Io(String),
    #[error("expected {expected}, model sent {got}")]
    Unexpected { expected: &'static str, got: String },
    #[error("prediction shape mismatch: {0}")]
    Shape(String),
    #[error("prediction contains a non-finite value: {0}")]
    NonFinite(String),
    #[error("prediction answers request {got}, expected {expected}")]
    RequestIdMismatch { expected: u64, got: u64 },
    #[error("operation needs state {expected:?}, handle is {actual:?}")]
    InvalidState { expected: HandleState, actual: HandleState },
    #[error("refusing to train on an empty training set")]
    EmptyTrainingSet,
    #[error("protocol line of {bytes} bytes exceeds the {cap}-byte cap; downsample the training set")]
    LineTooLong { bytes: usize, cap: usize },
}
