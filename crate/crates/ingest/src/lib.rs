//! Intake for field uploads: a participant registry keyed by device and
//! account ids, envelope routing into per-participant weekly files, and
//! read-back for the processing stages.
//!
//! Storage is append-only. A replayed upload is recognized by payload hash
//! and dropped with a notice instead of appending twice, so senders may
//! retry freely. Every stored record is attributable to exactly one
//! registered participant; envelopes from unregistered keys never touch
//! disk.

mod envelope;
mod http;
mod service;

pub use envelope::{check_key, CnCode, Envelope, KeyKind};
pub use http::router;
pub use service::{IngestService, ParticipantRecord, RecordRef, WeekData};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("source key {key:?} is not a valid {expected}")]
    BadKey { key: String, expected: &'static str },
    #[error("unknown stream code {0:?}, expected 01, 02 or 03")]
    BadCn(String),
    #[error("key {key:?} is already registered to participant {holder:?}")]
    Collision { key: String, holder: String },
    #[error("source key {0:?} is not registered")]
    UnknownKey(String),
    #[error("unknown participant {0:?}")]
    UnknownParticipant(String),
    #[error("payload line {line}: {reason}")]
    BadPayload { line: usize, reason: String },
    #[error("payload has no records")]
    EmptyPayload,
    #[error("registry file rejected: {0}")]
    BadRegistry(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}
