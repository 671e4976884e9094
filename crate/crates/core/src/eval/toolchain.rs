//! Running the Go toolchain with a wall-clock limit.

use std::io::Read;
use std::os::unix::process::CommandExt;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use super::EvalError;

#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub code: Option<i32>,
    pub stdout: String,
    pub stderr: String,
    pub timed_out: bool,
    pub elapsed: Duration,
}

impl CommandOutput {
    pub fn success(&self) -> bool {
        !self.timed_out && self.code == Some(0)
    }

    pub fn combined(&self) -> String {
        format!("{}{}", self.stdout, self.stderr)
    }
}

#[derive(Debug, Clone)]
pub struct GoToolchain {
    pub go: PathBuf,
    pub env: Vec<(String, String)>,
}

impl GoToolchain {
    /// Use `go` (a bare name is searched on `PATH`).
    pub fn new(go: impl Into<PathBuf>) -> Result<Self, EvalError> {
        let go = go.into();
        let resolved = crate::lsp::resolve_executable(&go).map_err(|_| EvalError::ToolchainMissing(go.clone()))?;
        Ok(GoToolchain { go: resolved, env: Vec::new() })
    }

    pub fn with_env(mut self, key: &str, value: &str) -> Self {
        self.env.push((key.to_string(), value.to_string()));
        self
    }

    /// `go version` output.
    pub fn version(&self) -> Result<String, EvalError> {
        let out = self.run(&["version"], Path::new("."), Duration::from_secs(60))?;
        Ok(out.stdout.trim().to_string())
    }

    /// Run `go args...` in `dir`. Past `timeout` the whole process group is
    /// killed and `timed_out` is set.
    pub fn run(&self, args: &[&str], dir: &Path, timeout: Duration) -> Result<CommandOutput, EvalError> {
        let mut cmd = Command::new(&self.go);
        cmd.args(args).current_dir(dir).stdin(Stdio::null()).stdout(Stdio::piped()).stderr(Stdio::piped());
        for (k, v) in &self.env {
            cmd.env(k, v);
        }
        // Own process group, so test binaries started by `go test` die too.
        cmd.process_group(0);
        let start = Instant::now();
        let mut child = cmd.spawn().map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => EvalError::ToolchainMissing(self.go.clone()),
            _ => EvalError::Io(e),
        })?;
        let pid = child.id() as i32;
        let mut so = child.stdout.take().expect("stdout piped");
        let mut se = child.stderr.take().expect("stderr piped");
        let t_out = thread::spawn(move || {
            let mut b = Vec::new();
            let _ = so.read_to_end(&mut b);
            b
        });
        let t_err = thread::spawn(move || {
            let mut b = Vec::new();
            let _ = se.read_to_end(&mut b);
            b
        });

        let mut timed_out = false;
        let status = loop {
            if let Some(st) = child.try_wait()? {
                break st;
            }
            if start.elapsed() >= timeout {
                timed_out = true;
                // SAFETY: signalling a process group we created.
                unsafe {
                    libc::kill(-pid, libc::SIGKILL);
                }
                break child.wait()?;
            }
            thread::sleep(Duration::from_millis(20));
        };
        let stdout = String::from_utf8_lossy(&t_out.join().unwrap_or_default()).into_owned();
        let stderr = String::from_utf8_lossy(&t_err.join().unwrap_or_default()).into_owned();
        Ok(CommandOutput { code: status.code(), stdout, stderr, timed_out, elapsed: start.elapsed() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_toolchain_is_reported() {
        let err = GoToolchain::new("/nonexistent/go").unwrap_err();
        assert!(matches!(err, EvalError::ToolchainMissing(_)));
    }

    #[test]
    fn timeout_kills_process_group() {
        let sh = GoToolchain { go: "/bin/sh".into(), env: vec![] };
        let out = sh.run(&["-c", "sleep 30 & sleep 30"], Path::new("."), Duration::from_millis(300)).unwrap();
        assert!(out.timed_out);
        assert!(out.elapsed < Duration::from_secs(5));
        let out = sh.run(&["-c", "echo hi; exit 3"], Path::new("."), Duration::from_secs(5)).unwrap();
        assert_eq!(out.code, Some(3));
        assert_eq!(out.stdout, "hi\n");
    }
}
