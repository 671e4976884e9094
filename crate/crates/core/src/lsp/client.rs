//! A language-server subprocess driven over its standard streams.
//!
//! Requests are strictly sequential: each call writes one request and blocks
//! until the matching response arrives or the timeout expires. Requests the
//! server sends to us in the meantime (configuration, progress tokens,
//! capability registration) are answered with empty results.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use thiserror::Error;
use url::Url;

use super::position::SourcePosition;
use super::transport::{read_message, write_message, TransportError};

pub const DEFAULT_STARTUP_TIMEOUT: Duration = Duration::from_secs(60);
pub const DEFAULT_REQUEST_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Error)]
pub enum LspError {
    #[error("workspace not found: {0}")]
    WorkspaceNotFound(PathBuf),
    #[error("language server executable not found: {0}")]
    ExecutableNotFound(PathBuf),
    #[error("failed to spawn language server {path}: {source}")]
    Spawn {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("initialize handshake did not complete within {0:?}")]
    HandshakeTimeout(Duration),
    #[error("request {method} timed out after {after:?}")]
    Timeout { method: String, after: Duration },
    #[error("malformed server response: {0}")]
    Malformed(String),
    #[error("server returned error {code} for {method}: {message}")]
    Server {
        method: String,
        code: i64,
        message: String,
    },
    #[error("language server exited")]
    ServerExited,
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub executable: PathBuf,
    pub args: Vec<String>,
    pub startup_timeout: Duration,
    pub request_timeout: Duration,
}

impl ServerConfig {
    pub fn new(executable: impl Into<PathBuf>) -> Self {
        ServerConfig {
            executable: executable.into(),
            args: Vec::new(),
            startup_timeout: DEFAULT_STARTUP_TIMEOUT,
            request_timeout: DEFAULT_REQUEST_TIMEOUT,
        }
    }
}

/// A definition site returned by the server.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub path: PathBuf,
    pub position: SourcePosition,
}

/// Resolve a bare executable name against `PATH`.
pub fn resolve_executable(exe: &Path) -> Result<PathBuf, LspError> {
    if exe.components().count() > 1 || exe.is_absolute() {
        return if exe.exists() {
            Ok(exe.to_path_buf())
        } else {
            Err(LspError::ExecutableNotFound(exe.to_path_buf()))
        };
    }
    let path = std::env::var_os("PATH").unwrap_or_default();
    std::env::split_paths(&path)
        .map(|dir| dir.join(exe))
        .find(|p| p.is_file())
        .ok_or_else(|| LspError::ExecutableNotFound(exe.to_path_buf()))
}

pub fn path_to_uri(path: &Path) -> Result<String, LspError> {
    Url::from_file_path(path)
        .map(String::from)
        .map_err(|_| LspError::Malformed(format!("cannot express {} as a file URI", path.display())))
}

pub fn uri_to_path(uri: &str) -> Result<PathBuf, LspError> {
    Url::parse(uri)
        .ok()
        .and_then(|u| u.to_file_path().ok())
        .ok_or_else(|| LspError::Malformed(format!("not a file URI: {uri}")))
}

type Incoming = Result<Value, TransportError>;

pub struct ServerHandle {
    child: Child,
    stdin: BufWriter<ChildStdin>,
    incoming: Receiver<Incoming>,
    workspace_root: PathBuf,
    next_request_id: u64,
    open_documents: HashMap<PathBuf, i32>,
    capabilities: Value,
    request_timeout: Duration,
    shut_down: bool,
}

impl std::fmt::Debug for ServerHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ServerHandle")
            .field("pid", &self.child.id())
            .field("workspace_root", &self.workspace_root)
            .field("next_request_id", &self.next_request_id)
            .field("open_documents", &self.open_documents)
            .finish()
    }
}

impl ServerHandle {
    /// Launch the server and complete the `initialize`/`initialized` handshake.
    pub fn start(workspace_root: &Path, config: &ServerConfig) -> Result<Self, LspError> {
        if !workspace_root.is_dir() {
            return Err(LspError::WorkspaceNotFound(workspace_root.to_path_buf()));
        }
        let root = workspace_root.canonicalize()?;
        let exe = resolve_executable(&config.executable)?;
        let mut child = Command::new(&exe)
            .args(&config.args)
            .current_dir(&root)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|source| LspError::Spawn { path: exe.clone(), source })?;

        let stdout = child.stdout.take().expect("piped stdout");
        let stderr = child.stderr.take().expect("piped stderr");
        let stdin = BufWriter::new(child.stdin.take().expect("piped stdin"));
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = BufReader::new(stdout);
            loop {
                match read_message(&mut reader) {
                    Ok(Some(msg)) => {
                        if tx.send(Ok(msg)).is_err() {
                            break;
                        }
                    }
                    Ok(None) => break,
                    Err(e) => {
                        let _ = tx.send(Err(e));
                        break;
                    }
                }
            }
        });
        thread::spawn(move || {
            for line in BufReader::new(stderr).lines().map_while(Result::ok) {
                tracing::debug!(target: "ratg::lsp::stderr", "{line}");
            }
        });

        let mut handle = ServerHandle {
            child,
            stdin,
            incoming: rx,
            workspace_root: root.clone(),
            next_request_id: 1,
            open_documents: HashMap::new(),
            capabilities: Value::Null,
            request_timeout: config.request_timeout,
            shut_down: false,
        };

        let root_uri = path_to_uri(&root)?;
        let name = root.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let params = json!({
            "processId": std::process::id(),
            "rootUri": root_uri,
            "workspaceFolders": [{ "uri": root_uri, "name": name }],
            "capabilities": {
                "textDocument": {
                    "synchronization": { "didSave": false },
                    "definition": { "linkSupport": false },
                    "hover": { "contentFormat": ["markdown", "plaintext"] }
                },
                "workspace": { "configuration": true, "workspaceFolders": true }
            }
        });
        let result = match handle.request_with_timeout("initialize", params, config.startup_timeout) {
            Err(LspError::Timeout { .. }) => {
                return Err(LspError::HandshakeTimeout(config.startup_timeout));
            }
            other => other?,
        };
        handle.capabilities = result
            .get("capabilities")
            .cloned()
            .filter(Value::is_object)
            .ok_or_else(|| LspError::Malformed("initialize result has no capabilities".into()))?;
        handle.notify("initialized", json!({}))?;
        Ok(handle)
    }

    pub fn pid(&self) -> u32 {
        self.child.id()
    }

    pub fn workspace_root(&self) -> &Path {
        &self.workspace_root
    }

    pub fn capabilities(&self) -> &Value {
        &self.capabilities
    }

    fn has_capability(&self, name: &str) -> bool {
        match self.capabilities.get(name) {
            Some(Value::Bool(b)) => *b,
            Some(Value::Object(_)) => true,
            _ => false,
        }
    }

    pub fn supports_definition(&self) -> bool {
        self.has_capability("definitionProvider")
    }

    pub fn supports_hover(&self) -> bool {
        self.has_capability("hoverProvider")
    }

    /// Version currently held by the server for `path`, if open.
    pub fn document_version(&self, path: &Path) -> Option<i32> {
        self.open_documents.get(path).copied()
    }

    pub fn notify(&mut self, method: &str, params: Value) -> Result<(), LspError> {
        let msg = json!({ "jsonrpc": "2.0", "method": method, "params": params });
        write_message(&mut self.stdin, &msg).map_err(|_| LspError::ServerExited)
    }

    pub fn request(&mut self, method: &str, params: Value) -> Result<Value, LspError> {
        self.request_with_timeout(method, params, self.request_timeout)
    }

    fn request_with_timeout(&mut self, method: &str, params: Value, timeout: Duration) -> Result<Value, LspError> {
        let id = self.next_request_id;
        self.next_request_id += 1;
        let msg = json!({ "jsonrpc": "2.0", "id": id, "method": method, "params": params });
        write_message(&mut self.stdin, &msg).map_err(|_| LspError::ServerExited)?;

        let deadline = Instant::now() + timeout;
        loop {
            let remaining = deadline.saturating_duration_since(Instant::now());
            let msg = match self.incoming.recv_timeout(remaining) {
                Ok(m) => m?,
                Err(RecvTimeoutError::Timeout) => {
                    return Err(LspError::Timeout { method: method.to_string(), after: timeout });
                }
                Err(RecvTimeoutError::Disconnected) => return Err(LspError::ServerExited),
            };
            let has_method = msg.get("method").is_some();
            match (msg.get("id"), has_method) {
                (Some(_), true) => self.answer_server_request(&msg)?,
                (None, true) => {}
                (Some(rid), false) if rid.as_u64() == Some(id) => {
                    if let Some(err) = msg.get("error") {
                        return Err(LspError::Server {
                            method: method.to_string(),
                            code: err.get("code").and_then(Value::as_i64).unwrap_or(0),
                            message: err.get("message").and_then(Value::as_str).unwrap_or("").to_string(),
                        });
                    }
                    return Ok(msg.get("result").cloned().unwrap_or(Value::Null));
                }
                (Some(_), false) => {
                    tracing::debug!("discarding response to an earlier request: {msg}");
                }
                (None, false) => return Err(LspError::Malformed(format!("unexpected message {msg}"))),
            }
        }
    }

    fn answer_server_request(&mut self, msg: &Value) -> Result<(), LspError> {
        let method = msg["method"].as_str().unwrap_or_default();
        let result = match method {
            "workspace/configuration" => {
                let n = msg["params"]["items"].as_array().map_or(0, Vec::len);
                Value::Array(vec![Value::Null; n])
            }
            _ => Value::Null,
        };
        let reply = json!({ "jsonrpc": "2.0", "id": msg["id"].clone(), "result": result });
        write_message(&mut self.stdin, &reply).map_err(|_| LspError::ServerExited)
    }

    /// Full-content sync: the first call opens the document at version 1,
    /// each later call sends the whole text with the version bumped by one.
    pub fn sync_document(&mut self, path: &Path, text: &str) -> Result<i32, LspError> {
        let uri = path_to_uri(path)?;
        match self.open_documents.get(path).copied() {
            None => {
                self.notify(
                    "textDocument/didOpen",
                    json!({ "textDocument": { "uri": uri, "languageId": "go", "version": 1, "text": text } }),
                )?;
                self.open_documents.insert(path.to_path_buf(), 1);
                Ok(1)
            }
            Some(v) => {
                let version = v + 1;
                self.notify(
                    "textDocument/didChange",
                    json!({
                        "textDocument": { "uri": uri, "version": version },
                        "contentChanges": [{ "text": text }]
                    }),
                )?;
                self.open_documents.insert(path.to_path_buf(), version);
                Ok(version)
            }
        }
    }

    pub fn close_document(&mut self, path: &Path) -> Result<(), LspError> {
        if self.open_documents.remove(path).is_some() {
            let uri = path_to_uri(path)?;
            self.notify("textDocument/didClose", json!({ "textDocument": { "uri": uri } }))?;
        }
        Ok(())
    }

    fn position_params(path: &Path, pos: SourcePosition) -> Result<Value, LspError> {
        Ok(json!({
            "textDocument": { "uri": path_to_uri(path)? },
            "position": { "line": pos.line, "character": pos.character }
        }))
    }

    /// First definition site reported for the identifier at `pos`.
    pub fn definition(&mut self, path: &Path, pos: SourcePosition) -> Result<Option<Location>, LspError> {
        let result = self.request("textDocument/definition", Self::position_params(path, pos)?)?;
        let first = match result {
            Value::Null => return Ok(None),
            Value::Array(items) => match items.into_iter().next() {
                Some(v) => v,
                None => return Ok(None),
            },
            v @ Value::Object(_) => v,
            other => return Err(LspError::Malformed(format!("definition result {other}"))),
        };
        let (uri, range) = if let Some(uri) = first.get("targetUri") {
            (uri, first.get("targetSelectionRange").or_else(|| first.get("targetRange")))
        } else {
            (first.get("uri").unwrap_or(&Value::Null), first.get("range"))
        };
        let uri = uri
            .as_str()
            .ok_or_else(|| LspError::Malformed(format!("definition without uri: {first}")))?;
        let start = range
            .and_then(|r| r.get("start"))
            .ok_or_else(|| LspError::Malformed(format!("definition without range: {first}")))?;
        let position: SourcePosition = serde_json::from_value(start.clone())
            .map_err(|e| LspError::Malformed(format!("bad position {start}: {e}")))?;
        Ok(Some(Location { path: uri_to_path(uri)?, position }))
    }

    /// Hover text for the identifier at `pos`, with all content parts joined.
    pub fn hover(&mut self, path: &Path, pos: SourcePosition) -> Result<Option<String>, LspError> {
        let result = self.request("textDocument/hover", Self::position_params(path, pos)?)?;
        if result.is_null() {
            return Ok(None);
        }
        fn text_of(v: &Value) -> String {
            match v {
                Value::String(s) => s.clone(),
                Value::Array(items) => items.iter().map(text_of).collect::<Vec<_>>().join("\n\n"),
                Value::Object(o) => o.get("value").and_then(Value::as_str).unwrap_or_default().to_string(),
                _ => String::new(),
            }
        }
        let text = text_of(result.get("contents").unwrap_or(&Value::Null));
        Ok((!text.trim().is_empty()).then_some(text))
    }

    /// `shutdown` request followed by the `exit` notification.
    pub fn shutdown(mut self) -> Result<(), LspError> {
        self.shutdown_inner()
    }

    fn shutdown_inner(&mut self) -> Result<(), LspError> {
        if self.shut_down {
            return Ok(());
        }
        self.shut_down = true;
        let result = self.request("shutdown", Value::Null);
        let _ = self.notify("exit", Value::Null);
        let deadline = Instant::now() + Duration::from_secs(2);
        while Instant::now() < deadline {
            if let Ok(Some(_)) = self.child.try_wait() {
                return result.map(|_| ());
            }
            thread::sleep(Duration::from_millis(20));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
        result.map(|_| ())
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if !self.shut_down {
            self.request_timeout = Duration::from_secs(2);
            let _ = self.shutdown_inner();
        }
    }
}
