//! Wire messages. Every message is one JSON object in a WebSocket text
//! frame, discriminated by its `type` field.

use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;

/// The machine-readable form of these messages, shared with clients.
pub const PROTOCOL_SCHEMA: &str = include_str!("../schema/protocol.schema.json");

/// Joint layout declared by a client.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaDecl {
    pub joints: usize,
    pub fingertips: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Hello { version: u32, schema: SchemaDecl },
    Start,
    Stop,
    /// `xyz` holds `3 * joints` coordinates, joint-major.
    Frame { t_ms: i64, xyz: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    /// Unsupported protocol version; the connection closes.
    Version,
    /// Message not allowed in the current state.
    Order,
    /// Stop with fewer than two frames recorded.
    EmptyGesture,
    /// The frame buffer filled up; the recording is discarded.
    Overflow,
    /// No capacity or no model; the connection closes.
    Unavailable,
    /// Unparseable message, wrong frame size, or a gesture that cannot be
    /// rendered.
    Malformed,
    /// Joint layout the server does not know; the connection closes.
    Schema,
}

impl ErrorCode {
    /// Whether the server closes the connection after sending this code.
    pub fn is_fatal(self) -> bool {
        matches!(self, ErrorCode::Version | ErrorCode::Unavailable | ErrorCode::Schema)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Latency {
    pub condense: f64,
    pub infer: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionMessage {
    pub gesture_id: u64,
    /// One probability vector per stream, in `vos` order.
    pub streams: Vec<Vec<f32>>,
    pub vos: Vec<String>,
    pub tuner: Vec<f32>,
    /// 0-based index of the tuner's top class.
    pub class: usize,
    pub label: String,
    pub latency_ms: Latency,
    pub frames: usize,
    /// Last timestamp minus first.
    pub duration_ms: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    /// Handshake reply: what the server will classify with.
    Ready {
        version: u32,
        vos: Vec<String>,
        classes: Vec<String>,
    },
    Prediction(PredictionMessage),
    Error { code: ErrorCode, detail: String },
}

impl ServerMessage {
    pub fn error(code: ErrorCode, detail: impl Into<String>) -> Self {
        ServerMessage::Error {
            code,
            detail: detail.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("messages always serialize")
    }
}

impl ClientMessage {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("messages always serialize")
    }
}
