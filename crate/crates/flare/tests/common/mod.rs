#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::Arc;

use flare::engine::{Durability, Engine, EngineConfig};
use flare::password::HashCost;
use flare::Flare;
use tempfile::TempDir;

pub const DEV_KEY: &str = "F92KLF5434TR4H";
pub const APP_NAME: &str = "flitterApp";

/// A server running on the test's tokio runtime.
pub struct TestServer {
    pub url: String,
    pub flare: Arc<Flare>,
    /// Owned data directory; `None` when the caller supplied one.
    pub dir: Option<TempDir>,
}

impl TestServer {
    pub async fn start() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let server = Self::start_in(dir.path()).await;
        TestServer { dir: Some(dir), ..server }
    }

    /// Starts over the data in `dir` (which the caller keeps alive).
    pub async fn start_in(dir: &Path) -> Self {
        let config = EngineConfig::new(dir.join("flare.log")).durability(Durability::Flush);
        let engine = Arc::new(Engine::open(config).unwrap());
        let flare = Arc::new(Flare::with_engine(engine, [DEV_KEY.to_string()], HashCost::MINIMAL).unwrap());
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        tokio::spawn(flare::server::serve(listener, flare.clone()));
        TestServer { url, flare, dir: None }
    }

    pub fn api(&self, path: &str) -> String {
        format!("{}{}", self.url, path)
    }
}

/// The `flare-server` binary running as a child process.
pub struct ServerProcess {
    pub url: String,
    pub child: Child,
}

pub fn write_config(dir: &Path) -> PathBuf {
    let path = dir.join("server.toml");
    let log = dir.join("flare.log");
    std::fs::write(
        &path,
        format!(
            "listen = \"127.0.0.1:0\"\nlog_path = {:?}\ndev_keys = [{DEV_KEY:?}]\n\
             [password_hash]\nmemory_kib = {}\niterations = {}\n",
            log.display().to_string(),
            HashCost::MINIMAL.memory_kib,
            HashCost::MINIMAL.iterations
        ),
    )
    .unwrap();
    path
}

pub fn server_command(config: &Path) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_flare-server"));
    cmd.arg("--config").arg(config).env("RUST_LOG", "warn");
    cmd
}

impl ServerProcess {
    pub fn spawn(config: &Path) -> Self {
        let mut child = server_command(config).stdout(Stdio::piped()).stderr(Stdio::null()).spawn().unwrap();
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
        let url = line
            .trim()
            .strip_prefix("listening on ")
            .unwrap_or_else(|| panic!("unexpected server output {line:?}"))
            .to_string();
        ServerProcess { url, child }
    }

    /// SIGKILL, no shutdown path runs.
    pub fn kill(mut self) {
        self.child.kill().unwrap();
        self.child.wait().unwrap();
    }
}

impl Drop for ServerProcess {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
