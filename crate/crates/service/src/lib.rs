//! Real-time gesture classification over WebSocket: clients stream
//! skeleton frames between start and stop messages and receive the
//! per-stream and tuner probabilities for each gesture.

pub mod engine;
pub mod error;
pub mod protocol;
pub mod replay;
pub mod server;
pub mod session;

pub use engine::Engine;
pub use error::{Result, ServiceError};
pub use protocol::{
    ClientMessage, ErrorCode, Latency, PredictionMessage, SchemaDecl, ServerMessage, PROTOCOL_SCHEMA, PROTOCOL_VERSION,
};
pub use replay::{replay, DEFAULT_REPLAY_FPS, DEFAULT_REPLAY_TIMEOUT};
pub use server::{Server, ServerConfig, DEFAULT_IDLE_STOP, DEFAULT_MAX_SESSIONS};
pub use session::{Capture, Gesture, SessionState, Step, DEFAULT_BUFFER_FRAMES};
