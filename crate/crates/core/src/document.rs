//! Versioned JSON documents shared by the CLI, the service and the editor.
//!
//! Every document carries a top-level `schema_version`. Field order follows
//! the type definitions and maps are ordered, so equal values always
//! serialize to identical bytes.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::blueprint::Blueprint;
use crate::model::StoryFrame;

pub const STORYFRAME_SCHEMA_VERSION: u32 = 1;
pub const BLUEPRINT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum DocumentError {
    #[error("malformed {doc} document at line {line}, column {column}: {message}")]
    Malformed { doc: &'static str, line: usize, column: usize, message: String },
    #[error("{doc} document is missing `schema_version`")]
    MissingVersion { doc: &'static str },
    #[error("unsupported {doc} schema_version {found} (expected {expected})")]
    Version { doc: &'static str, found: u64, expected: u32 },
}

/// A body with its `schema_version`, serialized as one flat object.
#[derive(Serialize)]
pub struct Versioned<'a, T> {
    pub schema_version: u32,
    #[serde(flatten)]
    pub body: &'a T,
}

pub fn frame_document(frame: &StoryFrame) -> Versioned<'_, StoryFrame> {
    Versioned { schema_version: STORYFRAME_SCHEMA_VERSION, body: frame }
}

/// Versioned view of a blueprint that is already rounded (see [`Blueprint::rounded`]).
pub fn blueprint_document(blueprint: &Blueprint) -> Versioned<'_, Blueprint> {
    Versioned { schema_version: BLUEPRINT_SCHEMA_VERSION, body: blueprint }
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: Option<u64>,
}

fn to_document<T: Serialize>(body: &T, version: u32) -> String {
    let mut s = serde_json::to_string_pretty(&Versioned { schema_version: version, body })
        .expect("document types always serialize");
    s.push('\n');
    s
}

fn malformed(doc: &'static str, e: serde_json::Error) -> DocumentError {
    DocumentError::Malformed { doc, line: e.line(), column: e.column(), message: e.to_string() }
}

fn from_document<T: DeserializeOwned>(text: &str, doc: &'static str, expected: u32) -> Result<T, DocumentError> {
    let probe: VersionProbe = serde_json::from_str(text).map_err(|e| malformed(doc, e))?;
    match probe.schema_version {
        None => return Err(DocumentError::MissingVersion { doc }),
        Some(v) if v != u64::from(expected) => return Err(DocumentError::Version { doc, found: v, expected }),
        Some(_) => {}
    }
    // Body types ignore unknown keys, so `schema_version` passes through.
    serde_json::from_str(text).map_err(|e| malformed(doc, e))
}

pub fn serialize_frame(frame: &StoryFrame) -> String {
    to_document(frame, STORYFRAME_SCHEMA_VERSION)
}

pub fn parse_frame(text: &str) -> Result<StoryFrame, DocumentError> {
    from_document(text, "storyframe", STORYFRAME_SCHEMA_VERSION)
}

/// Blueprint coordinates are rounded to three decimals on write.
pub fn serialize_blueprint(blueprint: &Blueprint) -> String {
    to_document(&blueprint.rounded(), BLUEPRINT_SCHEMA_VERSION)
}

pub fn parse_blueprint(text: &str) -> Result<Blueprint, DocumentError> {
    from_document(text, "blueprint", BLUEPRINT_SCHEMA_VERSION)
}

/// Plain pretty JSON with a trailing newline, for auxiliary outputs such as
/// rankings and metrics.
pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}
