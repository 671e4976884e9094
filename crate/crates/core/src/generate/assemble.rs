//! Turning a generated test function into a compilable `_test.go` file.

use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};

use thiserror::Error;

use super::segment::Segmenter;
use super::state::{FetchRecord, FetchStatus};
use crate::extract::import_path;

#[derive(Debug, Error)]
pub enum AssembleError {
    #[error("test source does not start with a function declaration")]
    NotAFunction,
    #[error("import fixer {tool}: {message}")]
    Fixer { tool: String, message: String },
}

/// Append whatever closes the literals and brackets left open in `source`.
pub fn close_unbalanced(source: &str) -> String {
    let mut seg = Segmenter::new();
    seg.feed(source);
    let closers = seg.closers();
    format!("{source}{closers}")
}

/// Replace the name of the leading `func Name(` declaration.
pub fn rename_test(source: &str, new_name: &str) -> Result<String, AssembleError> {
    let rest = source.strip_prefix("func").ok_or(AssembleError::NotAFunction)?;
    let trimmed = rest.trim_start();
    let ws = &rest[..rest.len() - trimmed.len()];
    if ws.is_empty() {
        return Err(AssembleError::NotAFunction);
    }
    let name_len = trimmed.find(|c: char| !crate::golex::is_ident_char(c)).unwrap_or(trimmed.len());
    if name_len == 0 {
        return Err(AssembleError::NotAFunction);
    }
    Ok(format!("func{ws}{new_name}{}", &trimmed[name_len..]))
}

/// Make test names unique within one package: repeats of `TestX` become
/// `TestX_2`, `TestX_3`, ... in order.
pub fn unique_test_names<S: AsRef<str>>(names: &[S]) -> Vec<String> {
    let mut taken: BTreeSet<String> = BTreeSet::new();
    let mut counts: HashMap<&str, usize> = HashMap::new();
    names
        .iter()
        .map(|n| {
            let base = n.as_ref();
            let c = counts.entry(base).or_insert(0);
            loop {
                *c += 1;
                let candidate = if *c == 1 { base.to_string() } else { format!("{base}_{c}") };
                if taken.insert(candidate.clone()) {
                    return candidate;
                }
            }
        })
        .collect()
}

/// Import paths of workspace packages, other than the test's own, whose
/// definitions were fetched and whose name is used qualified in `source`.
pub fn referenced_imports(source: &str, fetch_log: &[FetchRecord], module_path: &str, own_dir: &str) -> Vec<String> {
    let mut out = BTreeSet::new();
    for rec in fetch_log.iter().filter(|r| r.outcome == FetchStatus::Hit) {
        let Some(loc) = &rec.location else { continue };
        if Path::new(&loc.path).is_absolute() {
            continue;
        }
        let dir = loc.path.rsplit_once('/').map_or("", |(d, _)| d);
        if dir == own_dir {
            continue;
        }
        let name = dir.rsplit('/').next().unwrap_or(dir);
        if !name.is_empty() && source.contains(&format!("{name}.")) {
            out.insert(import_path(module_path, dir));
        }
    }
    out.into_iter().collect()
}

/// A complete test file: package clause, imports (always `testing`), and
/// the test function with any open brackets closed.
pub fn assemble_test_file(package_name: &str, test_source: &str, extra_imports: &[String]) -> String {
    let mut imports: Vec<&str> = vec!["testing"];
    for i in extra_imports {
        if !imports.contains(&i.as_str()) {
            imports.push(i);
        }
    }
    let import_block = if imports.len() == 1 {
        "import \"testing\"\n".to_string()
    } else {
        let mut s = String::from("import (\n");
        for i in &imports {
            s.push_str(&format!("\t\"{i}\"\n"));
        }
        s.push_str(")\n");
        s
    };
    let body = close_unbalanced(test_source);
    format!("package {package_name}\n\n{import_block}\n{}\n", body.trim_end())
}

/// Pipe `text` through an import-fixing tool (e.g. `goimports`). The tool
/// reads the file on stdin and prints the fixed file.
pub fn run_import_fixer(tool: &Path, text: &str) -> Result<String, AssembleError> {
    let err = |message: String| AssembleError::Fixer { tool: tool.display().to_string(), message };
    let mut child = Command::new(tool)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| err(e.to_string()))?;
    child
        .stdin
        .take()
        .expect("stdin is piped")
        .write_all(text.as_bytes())
        .map_err(|e| err(e.to_string()))?;
    let out = child.wait_with_output().map_err(|e| err(e.to_string()))?;
    if !out.status.success() {
        return Err(err(String::from_utf8_lossy(&out.stderr).trim().to_string()));
    }
    let fixed = String::from_utf8(out.stdout).map_err(|e| err(e.to_string()))?;
    if fixed.trim().is_empty() {
        return Err(err("empty output".into()));
    }
    Ok(fixed)
}
