use std::io::Write;
use std::sync::Arc;
use std::time::Duration;

use gestigo_net::Model;
use gestigo_service::{Engine, Server, ServerConfig};

use crate::args::ServeArgs;
use crate::cmd::common::{runtime, vo_list};
use crate::error::{CliError, CliResult};

pub fn run(a: ServeArgs, threads: Option<usize>) -> CliResult<()> {
    let model = Model::load(&a.model)?;
    let vos = match &a.vos {
        Some(v) => vo_list("vos", v)?,
        None => model.config().vos.clone(),
    };
    let engine = Arc::new(Engine::new(model, &vos)?);
    let cfg = ServerConfig {
        max_sessions: a.max_sessions,
        buffer_frames: a.buffer,
        idle_stop: (a.idle_stop_ms > 0).then(|| Duration::from_millis(a.idle_stop_ms)),
        ui_dir: a.ui,
    };
    runtime(threads)?.block_on(async {
        let server = Server::bind(&a.bind, engine, cfg).await?;
        println!("listening on {}", server.local_addr()?);
        let _ = std::io::stdout().flush();
        tokio::select! {
            r = server.run() => r.map_err(CliError::from),
            r = tokio::signal::ctrl_c() => {
                r.map_err(|e| CliError::data(format!("signal handler: {e}")))?;
                log::info!("interrupted; shutting down");
                Ok(())
            }
        }
    })
}
