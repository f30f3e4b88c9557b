//! Per-connection protocol state, independent of the transport.

use std::sync::Arc;

use gestigo_core::{Frame, JointSchema};

use crate::protocol::{ClientMessage, ErrorCode, ServerMessage, PROTOCOL_VERSION};

pub const DEFAULT_BUFFER_FRAMES: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Capture {
    Idle,
    Recording,
}

/// A finished recording, ready to classify.
#[derive(Clone, Debug, PartialEq)]
pub struct Gesture {
    pub session_id: u64,
    pub gesture_id: u64,
    pub schema: Arc<JointSchema>,
    pub frames: Vec<Frame>,
    pub t_ms: Vec<i64>,
}

impl Gesture {
    pub fn duration_ms(&self) -> i64 {
        match (self.t_ms.first(), self.t_ms.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0,
        }
    }
}

/// What the connection should do after a message.
#[derive(Debug, PartialEq)]
pub enum Step {
    Nothing,
    /// Handshake accepted; answer with the server's ready message.
    Welcome,
    Reply(ServerMessage),
    /// Send the message, then close the connection.
    Close(ServerMessage),
    Classify(Gesture),
}

#[derive(Debug)]
pub struct SessionState {
    pub id: u64,
    schema: Option<Arc<JointSchema>>,
    capture: Capture,
    frames: Vec<Frame>,
    t_ms: Vec<i64>,
    capacity: usize,
    next_gesture: u64,
}

fn reply(code: ErrorCode, detail: impl Into<String>) -> Step {
    Step::Reply(ServerMessage::error(code, detail))
}

impl SessionState {
    pub fn new(id: u64, capacity: usize) -> Self {
        SessionState {
            id,
            schema: None,
            capture: Capture::Idle,
            frames: Vec::new(),
            t_ms: Vec::new(),
            capacity,
            next_gesture: 0,
        }
    }

    pub fn capture(&self) -> Capture {
        self.capture
    }

    pub fn schema(&self) -> Option<&Arc<JointSchema>> {
        self.schema.as_ref()
    }

    pub fn buffered(&self) -> usize {
        self.frames.len()
    }

    fn clear(&mut self) {
        self.frames.clear();
        self.t_ms.clear();
    }

    pub fn on_text(&mut self, text: &str) -> Step {
        match serde_json::from_str::<ClientMessage>(text) {
            Ok(msg) => self.on_message(msg),
            Err(e) => reply(ErrorCode::Malformed, format!("unreadable message: {e}")),
        }
    }

    pub fn on_message(&mut self, msg: ClientMessage) -> Step {
        let Some(schema) = self.schema.clone() else {
            return match msg {
                ClientMessage::Hello { version, schema } => {
                    if version != PROTOCOL_VERSION {
                        return Step::Close(ServerMessage::error(
                            ErrorCode::Version,
                            format!("protocol version {version} is not supported; this server speaks {PROTOCOL_VERSION}"),
                        ));
                    }
                    match JointSchema::matching(schema.joints, &schema.fingertips) {
                        Some(s) => {
                            self.schema = Some(Arc::new(s));
                            Step::Welcome
                        }
                        None => Step::Close(ServerMessage::error(
                            ErrorCode::Schema,
                            format!(
                                "no known joint layout has {} joints with fingertips {:?}",
                                schema.joints, schema.fingertips
                            ),
                        )),
                    }
                }
                _ => reply(ErrorCode::Order, "hello must come first"),
            };
        };
        match (msg, self.capture) {
            (ClientMessage::Hello { .. }, _) => reply(ErrorCode::Order, "hello was already received"),
            (ClientMessage::Start, Capture::Idle) => {
                self.clear();
                self.capture = Capture::Recording;
                Step::Nothing
            }
            (ClientMessage::Start, Capture::Recording) => reply(ErrorCode::Order, "already recording"),
            (ClientMessage::Frame { .. }, Capture::Idle) => reply(ErrorCode::Order, "frame received while idle"),
            (ClientMessage::Frame { t_ms, xyz }, Capture::Recording) => {
                if xyz.len() != 3 * schema.joint_count {
                    return reply(
                        ErrorCode::Malformed,
                        format!("frame has {} values, expected {}", xyz.len(), 3 * schema.joint_count),
                    );
                }
                if xyz.iter().any(|v| !v.is_finite()) {
                    return reply(ErrorCode::Malformed, "frame has non-finite coordinates");
                }
                if self.t_ms.last().is_some_and(|last| t_ms < *last) {
                    return reply(ErrorCode::Malformed, format!("timestamp {t_ms} goes backwards"));
                }
                if self.frames.len() == self.capacity {
                    self.clear();
                    self.capture = Capture::Idle;
                    return reply(
                        ErrorCode::Overflow,
                        format!("more than {} frames; recording discarded", self.capacity),
                    );
                }
                self.frames.push(xyz.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect());
                self.t_ms.push(t_ms);
                Step::Nothing
            }
            (ClientMessage::Stop, Capture::Idle) => reply(ErrorCode::Order, "stop received while idle"),
            (ClientMessage::Stop, Capture::Recording) => self.finish(schema),
        }
    }

    /// The client went quiet while recording: treated as a stop.
    pub fn on_idle_timeout(&mut self) -> Step {
        match (&self.schema, self.capture) {
            (Some(schema), Capture::Recording) => self.finish(schema.clone()),
            _ => Step::Nothing,
        }
    }

    fn finish(&mut self, schema: Arc<JointSchema>) -> Step {
        self.capture = Capture::Idle;
        if self.frames.len() < 2 {
            let n = self.frames.len();
            self.clear();
            return reply(ErrorCode::EmptyGesture, format!("{n} frames recorded; at least 2 are needed"));
        }
        self.next_gesture += 1;
        Step::Classify(Gesture {
            session_id: self.id,
            gesture_id: self.next_gesture,
            schema,
            frames: std::mem::take(&mut self.frames),
            t_ms: std::mem::take(&mut self.t_ms),
        })
    }
}
