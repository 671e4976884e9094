//! Compile checks for generated test files.

use std::fs;
use std::path::Path;
use std::sync::LazyLock;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::toolchain::GoToolchain;
use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompileStatus {
    Compiled,
    CompileError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub file: String,
    pub line: u32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileResult {
    pub candidate: String,
    pub status: CompileStatus,
    pub diagnostics: Vec<Diagnostic>,
}

static DIAG: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(\S+?\.go):(\d+)(?::(\d+))?:\s*(.*)$").expect("valid regex"));

/// Pull `file:line[:col]: message` diagnostics out of Go tool output. When
/// nothing matches, the first meaningful line becomes a file-less
/// diagnostic, so a failed build never has an empty list.
pub fn parse_diagnostics(output: &str) -> Vec<Diagnostic> {
    let mut out: Vec<Diagnostic> = output
        .lines()
        .filter_map(|l| DIAG.captures(l))
        .map(|c| Diagnostic {
            file: c[1].trim_start_matches("./").to_string(),
            line: c[2].parse().unwrap_or(0),
            message: c[4].to_string(),
        })
        .collect();
    out.dedup();
    if out.is_empty() {
        if let Some(l) = output.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('#')) {
            out.push(Diagnostic { file: String::new(), line: 0, message: l.to_string() });
        }
    }
    out
}

/// Write `test_text` to `package_dir/file_name`, build the package's test
/// binary (running nothing) and remove the file again.
pub fn compile_check(
    go: &GoToolchain,
    candidate: &str,
    test_text: &str,
    package_dir: &Path,
    file_name: &str,
    timeout: Duration,
) -> Result<CompileResult, EvalError> {
    let path = package_dir.join(file_name);
    fs::write(&path, test_text)?;
    let out = go.run(&["test", "-count=1", "-run", "^$", "."], package_dir, timeout);
    let removed = fs::remove_file(&path);
    let out = out?;
    removed?;

    if out.success() {
        return Ok(CompileResult { candidate: candidate.to_string(), status: CompileStatus::Compiled, diagnostics: vec![] });
    }
    let mut diagnostics = parse_diagnostics(&out.combined());
    if out.timed_out {
        diagnostics.insert(0, Diagnostic { file: String::new(), line: 0, message: "build timed out".into() });
    }
    if diagnostics.is_empty() {
        diagnostics.push(Diagnostic { file: String::new(), line: 0, message: format!("go test exited with {:?}", out.code) });
    }
    Ok(CompileResult { candidate: candidate.to_string(), status: CompileStatus::CompileError, diagnostics })
}

/// Fraction of results that compiled; 0 when there are none.
pub fn compile_rate(results: &[CompileResult]) -> f64 {
    if results.is_empty() {
        tracing::warn!("compile rate of zero candidates");
        return 0.0;
    }
    let ok = results.iter().filter(|r| r.status == CompileStatus::Compiled).count();
    ok as f64 / results.len() as f64
}
