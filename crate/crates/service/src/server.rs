use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use futures_util::{SinkExt, StreamExt};
use tokio::io::AsyncWriteExt;
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::Semaphore;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::WebSocketStream;

use crate::engine::Engine;
use crate::error::{Result, ServiceError};
use crate::protocol::{ErrorCode, ServerMessage, PROTOCOL_SCHEMA};
use crate::session::{Capture, SessionState, Step, DEFAULT_BUFFER_FRAMES};

/// Recording stops by itself after this long without a message.
pub const DEFAULT_IDLE_STOP: Duration = Duration::from_millis(800);
pub const DEFAULT_MAX_SESSIONS: usize = 8;
const HEADER_LIMIT: usize = 16 * 1024;
const HEADER_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Clone, Debug)]
pub struct ServerConfig {
    pub max_sessions: usize,
    pub buffer_frames: usize,
    /// Auto-stop for hands-free capture; `None` waits for an explicit stop.
    pub idle_stop: Option<Duration>,
    /// Static files served to plain HTTP requests.
    pub ui_dir: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            max_sessions: DEFAULT_MAX_SESSIONS,
            buffer_frames: DEFAULT_BUFFER_FRAMES,
            idle_stop: None,
            ui_dir: None,
        }
    }
}

pub struct Server {
    listener: TcpListener,
    engine: Arc<Engine>,
    config: Arc<ServerConfig>,
}

impl Server {
    pub async fn bind(addr: &str, engine: Arc<Engine>, config: ServerConfig) -> Result<Self> {
        if config.max_sessions == 0 || config.buffer_frames < 2 {
            return Err(ServiceError::Argument(
                "max sessions must be positive and the frame buffer at least 2".into(),
            ));
        }
        let listener = TcpListener::bind(addr)
            .await
            .map_err(|e| ServiceError::Transport(format!("cannot bind {addr}: {e}")))?;
        Ok(Server {
            listener,
            engine,
            config: Arc::new(config),
        })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        self.listener.local_addr().map_err(|e| ServiceError::Transport(e.to_string()))
    }

    /// Accepts connections until the task is dropped.
    pub async fn run(self) -> Result<()> {
        let slots = Arc::new(Semaphore::new(self.config.max_sessions));
        let ids = Arc::new(AtomicU64::new(1));
        log::info!("listening on {}", self.local_addr()?);
        loop {
            let (stream, peer) = match self.listener.accept().await {
                Ok(c) => c,
                Err(e) => {
                    log::warn!("accept failed: {e}");
                    continue;
                }
            };
            let (engine, config, slots, ids) = (self.engine.clone(), self.config.clone(), slots.clone(), ids.clone());
            tokio::spawn(async move {
                if let Err(e) = connection(stream, engine, config, slots, ids).await {
                    log::debug!("{peer}: {e}");
                }
            });
        }
    }
}

/// Reads ahead until the request header is complete without consuming it.
/// Returns the header text and its length in bytes with the blank line.
async fn peek_header(stream: &TcpStream) -> Result<(String, usize)> {
    let mut buf = vec![0u8; HEADER_LIMIT];
    let deadline = Instant::now() + HEADER_TIMEOUT;
    loop {
        let n = stream.peek(&mut buf).await.map_err(|e| ServiceError::Transport(e.to_string()))?;
        if n == 0 {
            return Err(ServiceError::Transport("connection closed before a request".into()));
        }
        if let Some(end) = buf[..n].windows(4).position(|w| w == b"\r\n\r\n") {
            return Ok((String::from_utf8_lossy(&buf[..end]).into_owned(), end + 4));
        }
        if n == HEADER_LIMIT || Instant::now() > deadline {
            return Err(ServiceError::Protocol("request header too large or too slow".into()));
        }
        tokio::time::sleep(Duration::from_millis(2)).await;
    }
}

async fn connection(
    stream: TcpStream,
    engine: Arc<Engine>,
    config: Arc<ServerConfig>,
    slots: Arc<Semaphore>,
    ids: Arc<AtomicU64>,
) -> Result<()> {
    let (header, header_len) = peek_header(&stream).await?;
    let upgrade = header
        .lines()
        .any(|l| l.to_ascii_lowercase().starts_with("upgrade:") && l.to_ascii_lowercase().contains("websocket"));
    if !upgrade {
        return serve_static(stream, &header, header_len, config.ui_dir.as_deref()).await;
    }
    let mut ws = tokio_tungstenite::accept_async(stream).await?;
    let Ok(_slot) = slots.try_acquire_owned() else {
        let msg = ServerMessage::error(ErrorCode::Unavailable, "the server is at its session limit");
        ws.send(Message::text(msg.to_json())).await?;
        ws.close(None).await.ok();
        return Ok(());
    };
    let id = ids.fetch_add(1, Ordering::Relaxed);
    log::info!("session {id} opened");
    let result = session(ws, id, engine, &config).await;
    log::info!("session {id} closed");
    result
}

async fn session(mut ws: WebSocketStream<TcpStream>, id: u64, engine: Arc<Engine>, config: &ServerConfig) -> Result<()> {
    let mut state = SessionState::new(id, config.buffer_frames);
    loop {
        let next = match (state.capture(), config.idle_stop) {
            (Capture::Recording, Some(limit)) => tokio::time::timeout(limit, ws.next()).await.ok(),
            _ => Some(ws.next().await),
        };
        let step = match next {
            None => state.on_idle_timeout(),
            Some(None) => return Ok(()),
            Some(Some(msg)) => match msg? {
                Message::Text(text) => state.on_text(text.as_str()),
                Message::Binary(_) => Step::Reply(ServerMessage::error(ErrorCode::Malformed, "binary messages are not used")),
                Message::Close(_) => return Ok(()),
                _ => Step::Nothing,
            },
        };
        match step {
            Step::Nothing => {}
            Step::Welcome => ws.send(Message::text(engine.ready_message().to_json())).await?,
            Step::Reply(msg) => ws.send(Message::text(msg.to_json())).await?,
            Step::Close(msg) => {
                ws.send(Message::text(msg.to_json())).await?;
                ws.close(None).await.ok();
                return Ok(());
            }
            Step::Classify(gesture) => {
                let received = Instant::now();
                let engine = engine.clone();
                let outcome = tokio::task::spawn_blocking(move || engine.classify(&gesture, received))
                    .await
                    .map_err(|e| ServiceError::Transport(format!("worker failed: {e}")))?;
                let msg = match outcome {
                    Ok(p) => ServerMessage::Prediction(p),
                    Err(e) => ServerMessage::error(ErrorCode::Malformed, format!("gesture could not be classified: {e}")),
                };
                ws.send(Message::text(msg.to_json())).await?;
            }
        }
    }
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript; charset=utf-8",
        Some("css") => "text/css; charset=utf-8",
        Some("json") => "application/json",
        Some("png") => "image/png",
        Some("svg") => "image/svg+xml",
        Some("wasm") => "application/wasm",
        _ => "application/octet-stream",
    }
}

/// Maps a request path onto `root`, refusing anything that leaves it.
fn resolve(root: &Path, target: &str) -> Option<PathBuf> {
    let path = target.split(['?', '#']).next().unwrap_or("/");
    let rel = Path::new(path.trim_start_matches('/'));
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return None;
    }
    let full = root.join(rel);
    Some(if full.is_dir() { full.join("index.html") } else { full })
}

async fn serve_static(mut stream: TcpStream, header: &str, header_len: usize, root: Option<&Path>) -> Result<()> {
    // Drain the header we peeked.
    let mut discard = vec![0u8; header_len];
    tokio::io::AsyncReadExt::read_exact(&mut stream, &mut discard)
        .await
        .map_err(|e| ServiceError::Transport(e.to_string()))?;
    let mut parts = header.lines().next().unwrap_or("").split_whitespace();
    let (method, target) = (parts.next().unwrap_or(""), parts.next().unwrap_or("/"));
    let (status, ctype, body) = if method != "GET" {
        ("405 Method Not Allowed", "text/plain", b"method not allowed\n".to_vec())
    } else if target == "/protocol.schema.json" {
        ("200 OK", "application/json", PROTOCOL_SCHEMA.as_bytes().to_vec())
    } else {
        match root.and_then(|r| resolve(r, target)).map(|p| (std::fs::read(&p), p)) {
            Some((Ok(bytes), p)) => ("200 OK", content_type(&p), bytes),
            _ => ("404 Not Found", "text/plain", b"not found\n".to_vec()),
        }
    };
    let head = format!(
        "HTTP/1.1 {status}\r\nContent-Type: {ctype}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    );
    let io = |e: std::io::Error| ServiceError::Transport(e.to_string());
    stream.write_all(head.as_bytes()).await.map_err(io)?;
    stream.write_all(&body).await.map_err(io)?;
    stream.shutdown().await.map_err(io)
}
