//! The `flutter` micro-blogging command-line client.
//!
//! Settings come from, highest precedence first: command-line flags, the
//! `FLUTTER_SERVER` / `FLUTTER_DEV_KEY` environment variables, the config
//! file (`$FLUTTER_CONFIG`, else `$XDG_CONFIG_HOME/flutter/config.toml`, else
//! `~/.config/flutter/config.toml`) and built-in defaults.
//!
//! ```toml
//! server = "http://127.0.0.1:8080"
//! dev_key = "F92KLF5434TR4H"
//! app_name = "flitterApp"
//! credentials_path = "/home/alice/.config/flutter/credentials.json"
//! ```
//!
//! Exit status is 0 on success, 1 for API and usage errors and 2 when the
//! server cannot be reached.

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use flare_core::{FieldEntry, FieldName, Fields, UserId, VisibleRecord};
use serde::{Deserialize, Serialize};

use crate::client::{ClientError, QueryOptions, Session};
use crate::config::DEFAULT_DEV_KEY;
use crate::users::AuthResult;
use crate::wire;

pub const DEFAULT_SERVER: &str = "http://127.0.0.1:8080";
pub const DEFAULT_APP_NAME: &str = "flitterApp";
pub const TIMELINE_LEN: u32 = 10;
const POSTS: &str = "posts";
const POST_FIELD: &str = "post";

pub const EXIT_OK: i32 = 0;
pub const EXIT_API: i32 = 1;
pub const EXIT_TRANSPORT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "flutter", version, about = "Micro-blogging on a Flare server")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Server base URL.
    #[arg(long, global = true, env = "FLUTTER_SERVER")]
    pub server: Option<String>,
    /// Developer key used to register the app.
    #[arg(long, global = true, env = "FLUTTER_DEV_KEY")]
    pub dev_key: Option<String>,
    #[arg(long, global = true, env = "FLUTTER_CONFIG")]
    pub config: Option<PathBuf>,
    /// Where login credentials are cached.
    #[arg(long, global = true, env = "FLUTTER_CREDENTIALS")]
    pub credentials: Option<PathBuf>,
    /// Print raw wire JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create an account and log in as it.
    Signup {
        username: String,
        /// Read from the first line of stdin when omitted.
        password: Option<String>,
    },
    Login {
        username: String,
        password: Option<String>,
    },
    /// Publish a post (public unless --private).
    Post {
        text: String,
        #[arg(long)]
        private: bool,
    },
    /// Your own ten newest posts, private ones included.
    Timeline,
    /// Another user's ten newest public posts.
    View { username: String },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub server: Option<String>,
    pub dev_key: Option<String>,
    pub app_name: Option<String>,
    pub credentials_path: Option<PathBuf>,
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Settings {
    pub server: String,
    pub dev_key: String,
    pub app_name: String,
    pub credentials_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredCredentials {
    pub server: String,
    pub app_name: String,
    pub username: String,
    #[serde(rename = "userID")]
    pub user_id: UserId,
    pub password: String,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("authentication failure")]
    AuthenticationFailure,
    #[error("not logged in: run `flutter login` first")]
    NotLoggedIn,
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Client(e) if e.is_transport() => EXIT_TRANSPORT,
            _ => EXIT_API,
        }
    }

    fn file(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
        move |source| CliError::File { path: path.into(), source }
    }
}

fn config_dir() -> Option<PathBuf> {
    let xdg = std::env::var_os("XDG_CONFIG_HOME").filter(|v| !v.is_empty()).map(PathBuf::from);
    xdg.or_else(|| std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".config")))
        .map(|d| d.join("flutter"))
}

impl Settings {
    pub fn resolve(cli: &Cli) -> Result<Self, CliError> {
        let path = cli.config.clone().or_else(|| config_dir().map(|d| d.join("config.toml")));
        let file = match &path {
            Some(p) => match fs::read_to_string(p) {
                Ok(text) => toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?,
                Err(e) if e.kind() == io::ErrorKind::NotFound && cli.config.is_none() => FileConfig::default(),
                Err(e) => return Err(CliError::File { path: p.clone(), source: e }),
            },
            None => FileConfig::default(),
        };
        let credentials_path = cli
            .credentials
            .clone()
            .or(file.credentials_path)
            .or_else(|| config_dir().map(|d| d.join("credentials.json")))
            .ok_or_else(|| CliError::Usage("cannot locate a config directory; set FLUTTER_CREDENTIALS".into()))?;
        Ok(Self {
            server: cli.server.clone().or(file.server).unwrap_or_else(|| DEFAULT_SERVER.into()),
            dev_key: cli.dev_key.clone().or(file.dev_key).unwrap_or_else(|| DEFAULT_DEV_KEY.into()),
            app_name: file.app_name.unwrap_or_else(|| DEFAULT_APP_NAME.into()),
            credentials_path,
        })
    }

    /// Cached credentials, if they belong to this server and app.
    pub fn load_credentials(&self) -> Result<Option<StoredCredentials>, CliError> {
        let text = match fs::read_to_string(&self.credentials_path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(CliError::file(&self.credentials_path)(e)),
        };
        let stored: StoredCredentials = serde_json::from_str(&text).map_err(|e| {
            CliError::Usage(format!("{}: {e}", self.credentials_path.display()))
        })?;
        Ok(Some(stored).filter(|s| s.server == self.server && s.app_name == self.app_name))
    }

    pub fn save_credentials(&self, creds: &StoredCredentials) -> Result<(), CliError> {
        let path = &self.credentials_path;
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(CliError::file(dir))?;
        }
        let json = serde_json::to_vec_pretty(creds).expect("plain struct");
        write_private(path, &json).map_err(CliError::file(path))
    }
}

#[cfg(unix)]
fn write_private(path: &Path, bytes: &[u8]) -> io::Result<()> {
    use std::os::unix::fs::{OpenOptionsExt, PermissionsExt};
    let mut file = fs::OpenOptions::new().write(true).create(true).truncate(true).mode(0o600).open(path)?;
    // mode() only applies on creation; tighten a pre-existing file too.
    file.set_permissions(fs::Permissions::from_mode(0o600))?;
    file.write_all(bytes)?;
    file.sync_all()
}

#[cfg(not(unix))]
fn write_private(path: &Path, bytes: &[u8]) -> io::Result<()> {
    fs::write(path, bytes)
}

fn read_password(given: Option<String>) -> Result<String, CliError> {
    let password = match given {
        Some(p) => p,
        None => {
            let mut line = String::new();
            io::stdin().lock().read_line(&mut line).map_err(|e| CliError::Usage(format!("reading password: {e}")))?;
            line.trim_end_matches(['\r', '\n']).to_string()
        }
    };
    if password.is_empty() {
        return Err(CliError::Usage("password must not be empty".into()));
    }
    Ok(password)
}

fn stamp(wall_millis: i64) -> String {
    chrono::DateTime::from_timestamp_millis(wall_millis)
        .map(|t| t.format("%Y-%m-%d %H:%M:%S").to_string())
        .unwrap_or_else(|| wall_millis.to_string())
}

fn print_posts(out: &mut dyn Write, records: Vec<VisibleRecord>, json: bool) -> io::Result<()> {
    if json {
        return writeln!(out, "{}", serde_json::to_string(&wire::Records { records }).expect("serializable"));
    }
    if records.is_empty() {
        return writeln!(out, "no posts");
    }
    for r in records {
        let text = r.fields.iter().find(|(k, _)| k.as_str() == POST_FIELD).map(|(_, v)| v.as_str()).unwrap_or_default();
        writeln!(out, "{}  {}", stamp(r.stamp.wall_millis), text)?;
    }
    Ok(())
}

fn print_json(out: &mut dyn Write, value: &impl Serialize) -> io::Result<()> {
    writeln!(out, "{}", serde_json::to_string(value).expect("serializable"))
}

/// Runs one command, writing results to `out`.
pub async fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let settings = Settings::resolve(&cli)?;
    let session = Session::new(&settings.server)?;
    session.dev().use_key(settings.dev_key.as_str());
    let stdout_err = |e: io::Error| CliError::File { path: "<stdout>".into(), source: e };

    let logged_in = |session: &Session| -> Result<Option<StoredCredentials>, CliError> {
        let stored = settings.load_credentials()?;
        if let Some(c) = &stored {
            session.set_credentials(c.user_id.clone(), c.password.as_str());
        }
        Ok(stored)
    };

    // Registration is idempotent, so every command re-binds by name.
    match cli.command {
        Command::Signup { username, password } => {
            let password = read_password(password)?;
            session.dev().register_app(&settings.app_name).await?;
            let user_id = session.users().create(&username, &password, Default::default()).await?;
            settings.save_credentials(&StoredCredentials {
                server: settings.server.clone(),
                app_name: settings.app_name.clone(),
                username,
                user_id: user_id.clone(),
                password,
            })?;
            if cli.json {
                print_json(out, &wire::UserCreated { user_id }).map_err(stdout_err)?;
            } else {
                writeln!(out, "created {user_id}").map_err(stdout_err)?;
            }
        }
        Command::Login { username, password } => {
            let password = read_password(password)?;
            session.dev().register_app(&settings.app_name).await?;
            let AuthResult::Success(user_id) = session.users().authenticate(&username, &password).await? else {
                return Err(CliError::AuthenticationFailure);
            };
            settings.save_credentials(&StoredCredentials {
                server: settings.server.clone(),
                app_name: settings.app_name.clone(),
                username: username.clone(),
                user_id: user_id.clone(),
                password,
            })?;
            if cli.json {
                print_json(out, &wire::AuthOutcome { ok: true, user_id: Some(user_id) }).map_err(stdout_err)?;
            } else {
                writeln!(out, "logged in as {username}").map_err(stdout_err)?;
            }
        }
        Command::Post { text, private } => {
            logged_in(&session)?.ok_or(CliError::NotLoggedIn)?;
            session.dev().register_app(&settings.app_name).await?;
            let entry = if private { FieldEntry::private(text) } else { FieldEntry::public(text) };
            let mut fields = Fields::new();
            fields.insert(FieldName::parse(POST_FIELD).expect("valid"), entry);
            let record_id = session.user_store().put(fields, POSTS).await?;
            if cli.json {
                print_json(out, &wire::RecordCreated { record_id }).map_err(stdout_err)?;
            } else {
                writeln!(out, "posted {record_id}").map_err(stdout_err)?;
            }
        }
        Command::Timeline => {
            logged_in(&session)?.ok_or(CliError::NotLoggedIn)?;
            session.dev().register_app(&settings.app_name).await?;
            let options = QueryOptions::count(TIMELINE_LEN).collection(POSTS);
            let records = session.user_store().get(&[POST_FIELD], &options).await?;
            print_posts(out, records, cli.json).map_err(stdout_err)?;
        }
        Command::View { username } => {
            let me = logged_in(&session)?;
            session.dev().register_app(&settings.app_name).await?;
            let owner = match me {
                Some(_) => session.users().get(&username).await?.user_id.into_inner(),
                None => format!("@{username}"),
            };
            let options = QueryOptions::count(TIMELINE_LEN).collection(POSTS).user(owner);
            let records = session.user_store().get(&[POST_FIELD], &options).await?;
            print_posts(out, records, cli.json).map_err(stdout_err)?;
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn main_with(args: impl IntoIterator<Item = std::ffi::OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_API } else { EXIT_OK };
        }
    };
    let runtime = match tokio::runtime::Builder::new_current_thread().enable_all().build() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("flutter: {e}");
            return EXIT_API;
        }
    };
    let mut stdout = io::stdout().lock();
    match runtime.block_on(execute(cli, &mut stdout)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("flutter: {e}");
            e.exit_code()
        }
    }
}
