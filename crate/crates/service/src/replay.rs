//! Streams a recorded gesture to a running server, as a live client would.

use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use gestigo_core::SkeletonSequence;
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

use crate::error::{Result, ServiceError};
use crate::protocol::{ClientMessage, PredictionMessage, SchemaDecl, ServerMessage, PROTOCOL_VERSION};

/// Capture rate of the live client.
pub const DEFAULT_REPLAY_FPS: f64 = 15.0;
pub const DEFAULT_REPLAY_TIMEOUT: Duration = Duration::from_secs(30);

type Socket = WebSocketStream<MaybeTlsStream<TcpStream>>;

fn url(endpoint: &str) -> String {
    if endpoint.contains("://") {
        endpoint.to_string()
    } else {
        format!("ws://{endpoint}")
    }
}

async fn send(ws: &mut Socket, msg: &ClientMessage) -> Result<()> {
    Ok(ws.send(Message::text(msg.to_json())).await?)
}

async fn receive(ws: &mut Socket, waiting_for: &'static str, timeout: Duration) -> Result<ServerMessage> {
    loop {
        let msg = tokio::time::timeout(timeout, ws.next())
            .await
            .map_err(|_| ServiceError::Timeout(waiting_for))?
            .ok_or_else(|| ServiceError::Transport(format!("connection closed while waiting for {waiting_for}")))??;
        match msg {
            Message::Text(text) => {
                let parsed: ServerMessage = serde_json::from_str(text.as_str())
                    .map_err(|e| ServiceError::Protocol(format!("unreadable server message: {e}")))?;
                return match parsed {
                    ServerMessage::Error { code, detail } => Err(ServiceError::Server { code, detail }),
                    other => Ok(other),
                };
            }
            Message::Close(_) => {
                return Err(ServiceError::Transport(format!("server closed while waiting for {waiting_for}")))
            }
            _ => {}
        }
    }
}

/// Replays `seq` at `fps` frames per second (`f64::INFINITY` for no
/// pacing) and returns the server's prediction.
pub async fn replay(endpoint: &str, seq: &SkeletonSequence, fps: f64, timeout: Duration) -> Result<PredictionMessage> {
    if fps.is_nan() || fps <= 0.0 {
        return Err(ServiceError::Argument(format!("frame rate {fps} must be positive")));
    }
    let (mut ws, _) = tokio::time::timeout(timeout, tokio_tungstenite::connect_async(url(endpoint)))
        .await
        .map_err(|_| ServiceError::Timeout("the connection"))??;
    let schema = seq.schema();
    send(
        &mut ws,
        &ClientMessage::Hello {
            version: PROTOCOL_VERSION,
            schema: SchemaDecl {
                joints: schema.joint_count,
                fingertips: schema.fingertips.clone(),
            },
        },
    )
    .await?;
    match receive(&mut ws, "the handshake", timeout).await? {
        ServerMessage::Ready { .. } => {}
        other => return Err(ServiceError::Protocol(format!("expected ready, got {other:?}"))),
    }

    send(&mut ws, &ClientMessage::Start).await?;
    let period = Duration::from_secs_f64(if fps.is_finite() { 1.0 / fps } else { 0.0 });
    let mut ticks = (!period.is_zero()).then(|| tokio::time::interval(period));
    for (i, frame) in seq.frames().iter().enumerate() {
        if let Some(t) = ticks.as_mut() {
            t.tick().await;
        }
        let t_ms = if fps.is_finite() { (i as f64 * 1e3 / fps).round() as i64 } else { 0 };
        send(
            &mut ws,
            &ClientMessage::Frame {
                t_ms,
                xyz: frame.iter().flatten().copied().collect(),
            },
        )
        .await?;
    }
    send(&mut ws, &ClientMessage::Stop).await?;
    let result = match receive(&mut ws, "the prediction", timeout).await? {
        ServerMessage::Prediction(p) => Ok(p),
        other => Err(ServiceError::Protocol(format!("expected a prediction, got {other:?}"))),
    };
    ws.close(None).await.ok();
    result
}
