//! The run directory: every artifact of a run, a ledger of partial failures,
//! and a lock so two runs never write to it at once.

use std::fs::{self, File, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

const LOCK_FILE: &str = ".lock";
pub const LEDGER_FILE: &str = "ledger.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LedgerKind {
    /// A unit, candidate or package was not processed.
    Skipped,
    /// A non-fatal failure; the run continued.
    Error,
    /// The run stopped.
    Fatal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub stage: String,
    pub subject: String,
    pub kind: LedgerKind,
    pub message: String,
}

pub struct RunDir {
    root: PathBuf,
    locked: bool,
}

impl RunDir {
    /// Create (if needed) and lock the run directory.
    pub fn lock(root: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating run directory {}", root.display()))?;
        let root = root.canonicalize()?;
        let lock = root.join(LOCK_FILE);
        for attempt in 0..2 {
            match OpenOptions::new().write(true).create_new(true).open(&lock) {
                Ok(mut f) => {
                    writeln!(f, "{}", std::process::id())?;
                    return Ok(RunDir { root, locked: true });
                }
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists && attempt == 0 => {
                    let holder = fs::read_to_string(&lock).unwrap_or_default();
                    if !holder_alive(holder.trim()) {
                        tracing::warn!(holder = holder.trim(), "removing stale lock");
                        fs::remove_file(&lock)?;
                        continue;
                    }
                    bail!(
                        "run directory {} is in use by process {} (remove {} if that is wrong)",
                        root.display(),
                        holder.trim(),
                        lock.display()
                    );
                }
                Err(e) => return Err(e).with_context(|| format!("locking {}", lock.display())),
            }
        }
        unreachable!("second attempt either locks or fails")
    }

    /// Read-only access without taking the lock.
    pub fn open(root: &Path) -> anyhow::Result<Self> {
        if !root.is_dir() {
            bail!("{} is not a run directory", root.display());
        }
        Ok(RunDir { root: root.canonicalize()?, locked: false })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: impl AsRef<Path>) -> PathBuf {
        self.root.join(rel)
    }

    pub fn exists(&self, rel: impl AsRef<Path>) -> bool {
        self.path(rel).exists()
    }

    pub fn write_text(&self, rel: impl AsRef<Path>, text: &str) -> anyhow::Result<PathBuf> {
        let p = self.path(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
        Ok(p)
    }

    pub fn write_json<T: Serialize + ?Sized>(&self, rel: impl AsRef<Path>, value: &T) -> anyhow::Result<PathBuf> {
        self.write_text(rel, &(serde_json::to_string_pretty(value)? + "\n"))
    }

    pub fn read_json<T: DeserializeOwned>(&self, rel: impl AsRef<Path>) -> anyhow::Result<T> {
        let p = self.path(rel);
        let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
    }

    pub fn remove(&self, rel: impl AsRef<Path>) -> anyhow::Result<()> {
        let p = self.path(rel);
        if p.is_dir() {
            fs::remove_dir_all(&p)?;
        } else if p.exists() {
            fs::remove_file(&p)?;
        }
        Ok(())
    }

    pub fn record(&self, stage: &str, subject: &str, kind: LedgerKind, message: impl Into<String>) -> anyhow::Result<()> {
        let entry = LedgerEntry { stage: stage.into(), subject: subject.into(), kind, message: message.into() };
        match kind {
            LedgerKind::Fatal | LedgerKind::Error => tracing::warn!(stage, subject, "{}", entry.message),
            LedgerKind::Skipped => tracing::info!(stage, subject, "skipped: {}", entry.message),
        }
        let mut f = OpenOptions::new().create(true).append(true).open(self.path(LEDGER_FILE))?;
        writeln!(f, "{}", serde_json::to_string(&entry)?)?;
        Ok(())
    }

    pub fn ledger(&self) -> anyhow::Result<Vec<LedgerEntry>> {
        let p = self.path(LEDGER_FILE);
        if !p.exists() {
            return Ok(Vec::new());
        }
        fs::read_to_string(&p)?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).with_context(|| format!("parsing {}", p.display())))
            .collect()
    }

    /// A new empty file at `rel`, replacing any previous one.
    pub fn truncate(&self, rel: impl AsRef<Path>) -> anyhow::Result<()> {
        File::create(self.path(rel))?;
        Ok(())
    }
}

impl Drop for RunDir {
    fn drop(&mut self) {
        if self.locked {
            let _ = fs::remove_file(self.root.join(LOCK_FILE));
        }
    }
}

fn holder_alive(pid: &str) -> bool {
    let Ok(pid) = pid.parse::<u32>() else { return false };
    if pid == std::process::id() {
        return true;
    }
    let proc = Path::new("/proc");
    // Without procfs there is no cheap liveness check; assume the holder runs.
    !proc.join("self").exists() || proc.join(pid.to_string()).exists()
}
