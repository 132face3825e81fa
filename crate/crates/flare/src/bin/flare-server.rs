use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use flare::{ErrorCode, Flare, ServerConfig};
use tracing_subscriber::EnvFilter;

/// Flare REST server.
#[derive(Debug, Parser)]
#[command(name = "flare-server", version)]
struct Args {
    /// TOML config file; defaults apply when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Overrides `listen` from the config. Port 0 picks a free port.
    #[arg(long)]
    listen: Option<SocketAddr>,
    /// Overrides `log_path` from the config.
    #[arg(long)]
    log_path: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let args = Args::parse();

    let mut config = match &args.config {
        Some(path) => match ServerConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("flare-server: {e}");
                return ExitCode::from(2);
            }
        },
        None => ServerConfig::default(),
    };
    if let Some(listen) = args.listen {
        config.listen = listen;
    }
    if let Some(log) = args.log_path {
        config.log_path = log;
    }

    let flare = match tokio::task::spawn_blocking({
        let config = config.clone();
        move || Flare::open(&config)
    })
    .await
    .expect("open panicked")
    {
        Ok(f) => Arc::new(f),
        Err(e) => {
            // The error code leads so scripts can match on it.
            eprintln!("flare-server: {}: {e}", e.code().as_str());
            return ExitCode::from(if e.code() == ErrorCode::CorruptLog { 3 } else { 1 });
        }
    };
    let recovery = flare.engine.recovery();
    tracing::info!(
        snapshot_seq = recovery.snapshot_seq,
        replayed = recovery.replayed,
        torn_bytes = recovery.torn_bytes,
        "storage recovered"
    );

    let result = match &config.tls {
        Some(tls) => flare::server::serve_tls(config.listen, tls, flare).await,
        None => match tokio::net::TcpListener::bind(config.listen).await {
            Ok(listener) => {
                let addr = listener.local_addr().expect("bound socket");
                println!("listening on http://{addr}");
                flare::server::serve(listener, flare).await
            }
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("flare-server: {e}");
            ExitCode::FAILURE
        }
    }
}
