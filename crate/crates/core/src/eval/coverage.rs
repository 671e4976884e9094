//! Running tests with coverage, and line coverage from Go cover profiles.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::toolchain::GoToolchain;
use super::EvalError;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("cover profile line {line}: {message}")]
pub struct CoverageError {
    pub line: usize,
    pub message: String,
}

/// Per-line coverage: a line is covered when any block touching it ran.
/// Blocks span their start line through their end line, except that an end
/// position at column 1 excludes that line.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    /// File (as named in the profile) to line to covered.
    pub files: BTreeMap<String, BTreeMap<u32, bool>>,
}

impl CoverageReport {
    pub fn total_lines(&self) -> usize {
        self.files.values().map(BTreeMap::len).sum()
    }

    pub fn covered_lines(&self) -> usize {
        self.files.values().flat_map(|m| m.values()).filter(|&&c| c).count()
    }

    /// Covered over total executable lines; 0 for an empty profile.
    pub fn line_coverage(&self) -> f64 {
        match self.total_lines() {
            0 => 0.0,
            t => self.covered_lines() as f64 / t as f64,
        }
    }

    /// Whether `line` of `file` ran. `file` may be a suffix of the profile's
    /// name, e.g. `loops/loops.go` for `example.com/m/loops/loops.go`.
    pub fn is_covered(&self, file: &str, line: u32) -> bool {
        self.files
            .iter()
            .filter(|(name, _)| *name == file || name.ends_with(&format!("/{file}")))
            .any(|(_, lines)| lines.get(&line).copied().unwrap_or(false))
    }

    pub fn merge(&mut self, other: &CoverageReport) {
        for (file, lines) in &other.files {
            let mine = self.files.entry(file.clone()).or_default();
            for (&l, &c) in lines {
                *mine.entry(l).or_insert(false) |= c;
            }
        }
    }
}

fn parse_block(line: &str) -> Option<(String, u32, u32, u64)> {
    let mut parts = line.rsplitn(3, ' ');
    let count: u64 = parts.next()?.parse().ok()?;
    let _stmts: u64 = parts.next()?.parse().ok()?;
    let loc = parts.next()?;
    let (file, range) = loc.rsplit_once(':')?;
    let (start, end) = range.split_once(',')?;
    let start_line: u32 = start.split_once('.')?.0.parse().ok()?;
    let (end_line, end_col) = end.split_once('.')?;
    let mut end_line: u32 = end_line.parse().ok()?;
    let end_col: u32 = end_col.parse().ok()?;
    if file.is_empty() || end_line < start_line {
        return None;
    }
    // End positions are exclusive: a block ending at column 1 has nothing
    // on its last line (typically a lone closing brace).
    if end_col <= 1 && end_line > start_line {
        end_line -= 1;
    }
    Some((file.to_string(), start_line, end_line, count))
}

/// Parse a `go test -coverprofile` file.
pub fn parse_coverprofile(text: &str) -> Result<CoverageReport, CoverageError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, l)) if l.starts_with("mode:") => {}
        Some((i, _)) => return Err(CoverageError { line: i + 1, message: "missing mode line".into() }),
        None => return Err(CoverageError { line: 1, message: "empty profile".into() }),
    }
    let mut report = CoverageReport::default();
    for (i, l) in lines {
        let (file, a, b, count) = parse_block(l.trim())
            .ok_or_else(|| CoverageError { line: i + 1, message: format!("malformed block `{l}`") })?;
        let entry = report.files.entry(file).or_default();
        for n in a..=b {
            *entry.entry(n).or_insert(false) |= count > 0;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestOutcome {
    Pass,
    Fail,
    Skip,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRun {
    pub outcomes: BTreeMap<String, TestOutcome>,
    pub coverage: Option<CoverageReport>,
    /// Set when the run as a whole broke (build failure, crash, timeout).
    pub package_error: Option<String>,
}

/// `^(A|B)$` for the given test names; matches nothing when empty.
pub fn run_filter<S: AsRef<str>>(tests: &[S]) -> String {
    if tests.is_empty() {
        return "^$".into();
    }
    let names: Vec<String> = tests.iter().map(|t| regex::escape(t.as_ref())).collect();
    format!("^({})$", names.join("|"))
}

/// Top-level `--- PASS/FAIL/SKIP: Name` results from `go test -v` output.
pub fn parse_test_results(output: &str) -> HashMap<String, TestOutcome> {
    let mut out = HashMap::new();
    for line in output.lines() {
        let Some(rest) = line.strip_prefix("--- ") else { continue };
        let Some((verdict, rest)) = rest.split_once(": ") else { continue };
        let name = rest.split_whitespace().next().unwrap_or("");
        if name.is_empty() || name.contains('/') {
            continue;
        }
        let outcome = match verdict {
            "PASS" => TestOutcome::Pass,
            "FAIL" => TestOutcome::Fail,
            "SKIP" => TestOutcome::Skip,
            _ => continue,
        };
        out.insert(name.to_string(), outcome);
    }
    out
}

static PROFILE_SEQ: AtomicUsize = AtomicUsize::new(0);

/// Run `tests` in `package_dir` with coverage. Each test gets its own
/// outcome; tests that never report count as timed out when the run hit
/// its limit and as failed otherwise.
pub fn run_tests_with_coverage<S: AsRef<str>>(
    go: &GoToolchain,
    package_dir: &Path,
    tests: &[S],
    timeout: Duration,
) -> Result<TestRun, EvalError> {
    let profile = package_dir.join(format!(
        ".ratg-cover-{}-{}.out",
        std::process::id(),
        PROFILE_SEQ.fetch_add(1, Ordering::Relaxed)
    ));
    let filter = run_filter(tests);
    let go_timeout = format!("-timeout={}s", timeout.as_secs().max(1));
    let cover_arg = format!("-coverprofile={}", profile.display());
    // Hard limit leaves room for compilation on top of the test timeout.
    let hard = timeout + Duration::from_secs(120);
    let out = go.run(&["test", "-count=1", "-v", &go_timeout, "-run", &filter, &cover_arg, "."], package_dir, hard);
    let coverage_text = fs::read_to_string(&profile).ok();
    let _ = fs::remove_file(&profile);
    let out = out?;
    let text = out.combined();

    let reported = parse_test_results(&text);
    let test_timeout = out.timed_out || text.contains("panic: test timed out");
    let build_failed = text.contains("[build failed]") || text.contains("[setup failed]");
    let mut outcomes = BTreeMap::new();
    for t in tests {
        let t = t.as_ref();
        let o = match reported.get(t) {
            Some(o) => *o,
            None if test_timeout => TestOutcome::Timeout,
            None => TestOutcome::Fail,
        };
        outcomes.insert(t.to_string(), o);
    }
    let package_error = if build_failed {
        Some(super::compile::parse_diagnostics(&text).first().map_or("build failed".into(), |d| d.message.clone()))
    } else if out.timed_out {
        Some("go test exceeded its time limit".into())
    } else if test_timeout {
        Some("test timed out".into())
    } else if !out.success() && reported.is_empty() && !tests.is_empty() {
        Some(text.lines().find(|l| !l.trim().is_empty()).unwrap_or("go test failed").to_string())
    } else {
        None
    };
    let coverage = match coverage_text.as_deref().map(parse_coverprofile) {
        Some(Ok(c)) => Some(c),
        Some(Err(e)) => {
            tracing::warn!(error = %e, "unreadable cover profile");
            None
        }
        None => None,
    };
    Ok(TestRun { outcomes, coverage, package_error })
}
