//! Micro-mutation testing: flip one operator or literal at a time and see
//! whether the tests notice.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::LazyLock;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::coverage::{run_filter, CoverageReport};
use super::toolchain::GoToolchain;
use super::EvalError;
use crate::extract::{ByteSpan, DeclKeyword};
use crate::golex::{self, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationOperator {
    ConditionalsNegation,
    ConditionalsBoundary,
    ArithmeticBase,
    InvertBoolean,
    IncrementDecrement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutantStatus {
    Killed,
    Survived,
    NotCovered,
    CompileSkipped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mutant {
    pub id: String,
    /// Path relative to the module root.
    pub file: String,
    pub byte_span: ByteSpan,
    pub line: u32,
    pub original_text: String,
    pub mutated_text: String,
    pub operator: MutationOperator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<MutantStatus>,
}

fn replacement(tok: &str) -> Option<(&'static str, MutationOperator)> {
    use MutationOperator::*;
    Some(match tok {
        "==" => ("!=", ConditionalsNegation),
        "!=" => ("==", ConditionalsNegation),
        "<" => (">=", ConditionalsBoundary),
        ">=" => ("<", ConditionalsBoundary),
        ">" => ("<=", ConditionalsBoundary),
        "<=" => (">", ConditionalsBoundary),
        "+" => ("-", ArithmeticBase),
        "-" => ("+", ArithmeticBase),
        "true" => ("false", InvertBoolean),
        "false" => ("true", InvertBoolean),
        "++" => ("--", IncrementDecrement),
        "--" => ("++", IncrementDecrement),
        _ => return None,
    })
}

/// Enumerate mutants for one source file, in source order.
pub fn mutants_in_source(text: &str, file: &str) -> Result<Vec<Mutant>, golex::LexError> {
    let all = golex::tokenize(text)?;
    let toks = golex::significant(&all);
    let imports: Vec<(usize, usize)> = crate::extract::top_level_decls(text)
        .map(|d| d.into_iter().filter(|d| d.keyword == DeclKeyword::Import).map(|d| d.span).collect())
        .unwrap_or_default();
    let mut out = Vec::new();
    for (i, t) in toks.iter().enumerate() {
        let s = t.text(text);
        if imports.iter().any(|&(a, b)| a <= t.start && t.start < b) {
            continue;
        }
        let is_bool = t.kind == TokenKind::Ident && (s == "true" || s == "false");
        if t.kind != TokenKind::Op && !is_bool {
            continue;
        }
        let Some((mutated, op)) = replacement(s) else { continue };
        if op == MutationOperator::ArithmeticBase {
            let prev = i.checked_sub(1).map(|p| &toks[p]);
            let next = toks.get(i + 1);
            let operand_before = prev.is_some_and(|p| match p.kind {
                TokenKind::Ident => !golex::is_keyword(p.text(text)),
                TokenKind::Number | TokenKind::String | TokenKind::RawString | TokenKind::Rune => true,
                TokenKind::Op => matches!(p.text(text), ")" | "]"),
                _ => false,
            });
            if !operand_before {
                continue; // unary
            }
            let stringy = |k: TokenKind| matches!(k, TokenKind::String | TokenKind::RawString);
            if prev.is_some_and(|p| stringy(p.kind)) || next.is_some_and(|n| stringy(n.kind)) {
                continue;
            }
        }
        out.push(Mutant {
            id: String::new(),
            file: file.to_string(),
            byte_span: ByteSpan { start: t.start, end: t.end },
            line: golex::line_of(text, t.start) as u32,
            original_text: s.to_string(),
            mutated_text: mutated.to_string(),
            operator: op,
            status: None,
        });
    }
    Ok(out)
}

/// All mutants of the non-test Go files in `package_dir`, numbered `M1`,
/// `M2`, ... in (file, offset) order. `rel_dir` is the package directory
/// relative to the module root.
pub fn micro_mutate(package_dir: &Path, rel_dir: &str) -> Result<Vec<Mutant>, EvalError> {
    let mut files: Vec<PathBuf> = fs::read_dir(package_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let n = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            n.ends_with(".go") && !n.ends_with("_test.go") && p.is_file()
        })
        .collect();
    files.sort();
    let mut out = Vec::new();
    for path in files {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        let rel = if rel_dir.is_empty() { name } else { format!("{rel_dir}/{name}") };
        let text = fs::read_to_string(&path)?;
        match mutants_in_source(&text, &rel) {
            Ok(m) => out.extend(m),
            Err(e) => tracing::warn!(file = %rel, error = %e, "skipping unlexable file"),
        }
    }
    for (n, m) in out.iter_mut().enumerate() {
        m.id = format!("M{}", n + 1);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MutationSummary {
    pub total: usize,
    /// Killed plus survived.
    pub covered: usize,
    pub killed: usize,
    pub survived: usize,
    pub not_covered: usize,
    pub compile_skipped: usize,
}

impl MutationSummary {
    pub fn from_mutants(mutants: &[Mutant]) -> Self {
        let count = |s| mutants.iter().filter(|m| m.status == Some(s)).count();
        let killed = count(MutantStatus::Killed);
        let survived = count(MutantStatus::Survived);
        MutationSummary {
            total: mutants.len(),
            covered: killed + survived,
            killed,
            survived,
            not_covered: count(MutantStatus::NotCovered),
            compile_skipped: count(MutantStatus::CompileSkipped),
        }
    }

    /// Covered over total; 0 when there are no mutants.
    pub fn mutator_coverage(&self) -> f64 {
        match self.total {
            0 => 0.0,
            t => self.covered as f64 / t as f64,
        }
    }

    /// Killed over covered; 0 when nothing is covered.
    pub fn test_efficacy(&self) -> f64 {
        match self.covered {
            0 => 0.0,
            c => self.killed as f64 / c as f64,
        }
    }
}

/// SHA-256 of every regular file under `dir`, keyed by relative path.
pub fn tree_checksums(dir: &Path) -> Result<BTreeMap<String, String>, EvalError> {
    let mut out = BTreeMap::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| EvalError::Io(e.into()))?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(dir).unwrap_or(entry.path()).to_string_lossy().into_owned();
        let digest = Sha256::digest(fs::read(entry.path())?);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        out.insert(rel, hex);
    }
    Ok(out)
}

/// Writes a file back to its original bytes when dropped.
struct Restore<'a> {
    path: &'a Path,
    original: &'a [u8],
    armed: bool,
}

impl Restore<'_> {
    fn restore(mut self) -> Result<(), EvalError> {
        self.armed = false;
        fs::write(self.path, self.original)?;
        if fs::read(self.path)? != self.original {
            return Err(EvalError::RestoreFailed(self.path.to_path_buf()));
        }
        Ok(())
    }
}

impl Drop for Restore<'_> {
    fn drop(&mut self) {
        if self.armed {
            let _ = fs::write(self.path, self.original);
        }
    }
}

/// Run every mutant against `tests` in `package_dir`.
///
/// Mutants on lines the baseline run never reached are not covered and are
/// not executed. A mutant that does not compile is skipped; a failing or
/// timed-out run kills it. Source files are restored after each mutant and
/// the package tree is checked against its initial checksums at the end.
pub fn mutation_run<S: AsRef<str>>(
    go: &GoToolchain,
    module_root: &Path,
    package_dir: &Path,
    mutants: &mut [Mutant],
    tests: &[S],
    baseline: &CoverageReport,
    timeout: Duration,
) -> Result<MutationSummary, EvalError> {
    let before = tree_checksums(package_dir)?;
    let filter = run_filter(tests);
    let go_timeout = format!("-timeout={}s", timeout.as_secs().max(1));
    let hard = timeout + Duration::from_secs(120);
    for m in mutants.iter_mut() {
        if tests.is_empty() || !baseline.is_covered(&m.file, m.line) {
            m.status = Some(MutantStatus::NotCovered);
            continue;
        }
        let path = crate::lsp::workspace_file(module_root, &m.file);
        let original = fs::read(&path)?;
        if original.get(m.byte_span.start..m.byte_span.end) != Some(m.original_text.as_bytes()) {
            return Err(EvalError::StaleMutant(m.id.clone()));
        }
        let mut mutated = original[..m.byte_span.start].to_vec();
        mutated.extend_from_slice(m.mutated_text.as_bytes());
        mutated.extend_from_slice(&original[m.byte_span.end..]);

        let guard = Restore { path: &path, original: &original, armed: true };
        fs::write(&path, &mutated)?;
        let out = go.run(&["test", "-count=1", &go_timeout, "-run", &filter, "."], package_dir, hard);
        guard.restore()?;
        let out = out?;
        let text = out.combined();
        m.status = Some(if out.success() {
            MutantStatus::Survived
        } else if text.contains("[build failed]") || text.contains("[setup failed]") {
            MutantStatus::CompileSkipped
        } else {
            MutantStatus::Killed
        });
        tracing::debug!(id = %m.id, status = ?m.status, "mutant done");
    }
    if tree_checksums(package_dir)? != before {
        return Err(EvalError::TreeChanged(package_dir.to_path_buf()));
    }
    Ok(MutationSummary::from_mutants(mutants))
}

static GREMLINS_COUNTS: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(killed|lived|not covered|timed out|not viable)\s*:\s*(\d+)").expect("valid regex")
});

/// Parse the summary of an external mutation tool in the Gremlins style:
/// `Killed: N, Lived: M, Not covered: K` (plus optional `Timed out` and
/// `Not viable`). Timed-out mutants count as killed, non-viable ones as
/// compile-skipped.
pub fn parse_gremlins_summary(output: &str) -> Option<MutationSummary> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for c in GREMLINS_COUNTS.captures_iter(output) {
        counts.insert(c[1].to_lowercase(), c[2].parse().ok()?);
    }
    if !counts.contains_key("killed") || !counts.contains_key("lived") {
        return None;
    }
    let get = |k: &str| counts.get(k).copied().unwrap_or(0);
    let killed = get("killed") + get("timed out");
    let survived = get("lived");
    let not_covered = get("not covered");
    let compile_skipped = get("not viable");
    Some(MutationSummary {
        total: killed + survived + not_covered + compile_skipped,
        covered: killed + survived,
        killed,
        survived,
        not_covered,
        compile_skipped,
    })
}

/// Run an external mutation tool in `package_dir` and parse its summary.
pub fn run_external_mutator(tool: &Path, args: &[String], package_dir: &Path) -> Result<MutationSummary, EvalError> {
    let out = Command::new(tool).args(args).current_dir(package_dir).output()?;
    let text = format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
    parse_gremlins_summary(&text).ok_or_else(|| EvalError::ExternalTool(format!("no summary in output of {}", tool.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ops(src: &str) -> Vec<(String, String)> {
        mutants_in_source(src, "p/p.go")
            .unwrap()
            .into_iter()
            .map(|m| (m.original_text, m.mutated_text))
            .collect()
    }

    #[test]
    fn operator_table() {
        let src = "package p\n\nfunc f(a, b int) bool {\n\ta++\n\tb--\n\treturn a == b || a != b && a < b || a >= b || a > b || a <= b || true || false\n}\n";
        let got = ops(src);
        let want: Vec<(String, String)> = [
            ("++", "--"), ("--", "++"), ("==", "!="), ("!=", "=="), ("<", ">="), (">=", "<"),
            (">", "<="), ("<=", ">"), ("true", "false"), ("false", "true"),
        ]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn arithmetic_skips_unary_and_strings() {
        let src = "package p\n\nfunc f(a int, s string) (int, string) {\n\tx := -a + 1\n\treturn -x - a, s + \"!\"\n}\n";
        let got = ops(src);
        assert_eq!(got, vec![("+".into(), "-".into()), ("-".into(), "+".into())]);
    }

    #[test]
    fn imports_comments_and_literals_are_not_mutated() {
        let src = "package p\n\nimport (\n\t\"fmt\"\n)\n\n// a == b\nvar s = \"x < y\"\n\nfunc g() { fmt.Println(s) }\n";
        assert!(ops(src).is_empty());
    }

    #[test]
    fn spans_and_lines() {
        let src = "package p\n\nfunc f(a int) bool {\n\treturn a > 0\n}\n";
        let m = &mutants_in_source(src, "p/p.go").unwrap()[0];
        assert_eq!(&src[m.byte_span.start..m.byte_span.end], ">");
        assert_eq!(m.line, 4);
    }

    #[test]
    fn summary_arithmetic() {
        let mk = |s| Mutant {
            id: "M".into(),
            file: "f".into(),
            byte_span: ByteSpan { start: 0, end: 1 },
            line: 1,
            original_text: "<".into(),
            mutated_text: ">=".into(),
            operator: MutationOperator::ConditionalsBoundary,
            status: Some(s),
        };
        use MutantStatus::*;
        let ms: Vec<Mutant> = [Killed, Killed, Survived, NotCovered, CompileSkipped].into_iter().map(mk).collect();
        let s = MutationSummary::from_mutants(&ms);
        assert_eq!((s.total, s.covered, s.killed, s.not_covered, s.compile_skipped), (5, 3, 2, 1, 1));
        assert!((s.mutator_coverage() - 0.6).abs() < 1e-12);
        assert_eq!(MutationSummary::default().mutator_coverage(), 0.0);
    }

    #[test]
    fn gremlins_summary() {
        let out = "Mutation testing completed in 2 seconds\nKilled: 164, Lived: 96, Not covered: 625\nTimed out: 1, Not viable: 2, Skipped: 0\n";
        let s = parse_gremlins_summary(out).unwrap();
        assert_eq!((s.killed, s.survived, s.not_covered, s.compile_skipped, s.total), (165, 96, 625, 2, 888));
        assert!(parse_gremlins_summary("nothing here").is_none());
    }
}
