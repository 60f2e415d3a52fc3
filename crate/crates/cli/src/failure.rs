use std::fmt;

use credal_core::ingest::{IngestError, ViolationKind};

pub const EXIT_PARSE: u8 = 2;
pub const EXIT_SHAPE: u8 = 3;
pub const EXIT_SIMPLEX: u8 = 4;
pub const EXIT_HARTLEY_CAP: u8 = 5;
pub const EXIT_MISSING_LABELS: u8 = 6;

/// An error that carries the process exit code it should produce.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

pub fn exit_code_for(kind: ViolationKind) -> u8 {
    match kind {
        ViolationKind::Parse => EXIT_PARSE,
        ViolationKind::Shape => EXIT_SHAPE,
        ViolationKind::Simplex => EXIT_SIMPLEX,
    }
}

pub fn from_ingest(path: &str, err: &IngestError) -> Failure {
    let mut message = format!("{path}: {} problem(s)", err.diagnostics.len());
    for d in &err.diagnostics {
        message.push_str(&format!("\n  {d}"));
    }
    Failure::new(exit_code_for(err.kind()), message)
}
