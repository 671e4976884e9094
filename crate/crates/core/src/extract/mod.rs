//! Focal method/function extraction from Go source trees.
//!
//! Every top-level `func` declaration in a non-test file becomes a
//! [`FocalUnit`]. Scanning is lexical: comments and literals are skipped
//! correctly, but no type checking happens.

mod decl;
mod signature;

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use decl::{doc_above, top_level_decls, DeclBlock, DeclKeyword, DeclScanError, Span, SpecBlock};
pub(crate) use signature::type_end;
pub use signature::{parse_signature, FocalKind, Param, ResultType, Signature, SignatureError};

use crate::golex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ByteSpan {
    pub start: usize,
    pub end: usize,
}

/// One method or function under test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FocalUnit {
    pub name: String,
    pub kind: FocalKind,
    pub receiver_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub type_params: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub type_param_names: Vec<String>,
    pub params: Vec<Param>,
    pub returns: Vec<ResultType>,
    pub doc_comment: Option<String>,
    pub source_text: String,
    /// Path relative to the module root, `/`-separated.
    pub file_path: String,
    /// Import path of the containing package.
    pub package_path: String,
    /// Name from the package clause.
    pub package_name: String,
    pub byte_span: ByteSpan,
}

impl FocalUnit {
    /// `Stack.Push` for methods, `Add` for functions.
    pub fn qualified_name(&self) -> String {
        match &self.receiver_type {
            Some(r) => format!("{r}.{}", self.name),
            None => self.name.clone(),
        }
    }

    /// Package directory relative to the module root (`""` for the root).
    pub fn package_dir(&self) -> &str {
        self.file_path.rsplit_once('/').map_or("", |(d, _)| d)
    }

    /// Stable key, e.g. `stack/Stack.Push`.
    pub fn key(&self) -> String {
        match self.package_dir() {
            "" => self.qualified_name(),
            d => format!("{d}/{}", self.qualified_name()),
        }
    }

    pub fn is_exported(&self) -> bool {
        self.name.chars().next().is_some_and(char::is_uppercase)
    }

    /// Signature fields as stored on the unit.
    pub fn signature(&self) -> Signature {
        Signature {
            kind: self.kind,
            name: self.name.clone(),
            receiver_type: self.receiver_type.clone(),
            type_params: self.type_params.clone(),
            type_param_names: self.type_param_names.clone(),
            params: self.params.clone(),
            returns: self.returns.clone(),
        }
    }

    /// Text of the declaration header, up to but excluding the body.
    pub fn header_text(&self) -> &str {
        header_of(&self.source_text)
    }
}

/// Declaration text with any function body removed.
pub fn header_of(decl_text: &str) -> &str {
    let Ok(all) = golex::tokenize(decl_text) else {
        return decl_text;
    };
    let toks: Vec<_> = golex::significant(&all).into_iter().filter(|t| !t.is_auto_semi()).collect();
    // Skip receiver, name, type params and params, then the result type, so
    // braces inside e.g. `interface{}` results are not mistaken for the body.
    let mut i = 1;
    if toks.get(i).is_some_and(|t| t.is_op(decl_text, "(")) {
        match golex::matching_close(decl_text, &toks, i) {
            Some(c) => i = c + 1,
            None => return decl_text,
        }
    }
    i += 1;
    while toks.get(i).is_some_and(|t| t.is_op(decl_text, "[") || t.is_op(decl_text, "(")) {
        match golex::matching_close(decl_text, &toks, i) {
            Some(c) => i = c + 1,
            None => return decl_text,
        }
        if toks.get(i - 1).is_some_and(|t| t.is_op(decl_text, ")")) {
            break;
        }
    }
    if let Some(t) = toks.get(i) {
        if !t.is_op(decl_text, "{") {
            if let Some(end) = type_end(decl_text, &toks, i) {
                i = end;
            }
        }
    }
    match toks.get(i) {
        Some(t) if t.is_op(decl_text, "{") => decl_text[..t.start].trim_end(),
        _ => decl_text,
    }
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no .go files in {0}")]
    NoGoFiles(PathBuf),
}

/// A file that could not be scanned; the rest of the scan continues.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileError {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanOutcome {
    pub units: Vec<FocalUnit>,
    pub errors: Vec<FileError>,
}

/// Module root (directory holding `go.mod`) and module path, if any.
pub fn find_module(start: &Path) -> Option<(PathBuf, String)> {
    let start = start.canonicalize().ok()?;
    for dir in start.ancestors() {
        let gomod = dir.join("go.mod");
        if let Ok(text) = fs::read_to_string(&gomod) {
            let module = text
                .lines()
                .find_map(|l| l.trim().strip_prefix("module "))
                .map(|m| m.trim().trim_matches('"').to_string())
                .unwrap_or_default();
            return Some((dir.to_path_buf(), module));
        }
    }
    None
}

/// Import path for a module-relative directory.
pub fn import_path(module_path: &str, rel_dir: &str) -> String {
    match (module_path.is_empty(), rel_dir.is_empty()) {
        (_, true) => module_path.to_string(),
        (true, false) => rel_dir.to_string(),
        (false, false) => format!("{module_path}/{rel_dir}"),
    }
}

fn rel_slash(root: &Path, path: &Path) -> String {
    path.strip_prefix(root)
        .unwrap_or(path)
        .components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Extract every top-level `func` declaration of the non-test files in
/// `dir`, ordered by (file path, byte offset).
pub fn scan_package(dir: &Path) -> Result<ScanOutcome, ExtractError> {
    let io = |source| ExtractError::Io { path: dir.to_path_buf(), source };
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension().is_some_and(|e| e == "go")
                && !p.to_string_lossy().ends_with("_test.go")
        })
        .collect();
    if files.is_empty() {
        return Err(ExtractError::NoGoFiles(dir.to_path_buf()));
    }
    files.sort();

    let (root, module) = find_module(dir).unwrap_or_else(|| (dir.to_path_buf(), String::new()));
    let canon_dir = dir.canonicalize().unwrap_or_else(|_| dir.to_path_buf());
    let rel_dir = rel_slash(&root, &canon_dir);
    let package_path = import_path(&module, &rel_dir);

    let mut outcome = ScanOutcome::default();
    for path in files {
        let rel = rel_slash(&root, &canon_dir.join(path.file_name().unwrap()));
        let text = match fs::read(&path) {
            Ok(bytes) => match String::from_utf8(bytes) {
                Ok(t) => t,
                Err(_) => {
                    outcome.errors.push(FileError { path: rel, message: "file is not valid UTF-8".into() });
                    continue;
                }
            },
            Err(e) => {
                outcome.errors.push(FileError { path: rel, message: e.to_string() });
                continue;
            }
        };
        let (units, errors) = scan_source(&text, &rel, &package_path);
        outcome.units.extend(units);
        outcome.errors.extend(errors);
    }
    Ok(outcome)
}

/// Extract focal units from one file's text.
pub fn scan_source(text: &str, rel_path: &str, package_path: &str) -> (Vec<FocalUnit>, Vec<FileError>) {
    let mut errors = Vec::new();
    let decls = match top_level_decls(text) {
        Ok(d) => d,
        Err(e) => {
            errors.push(FileError { path: rel_path.to_string(), message: e.to_string() });
            return (Vec::new(), errors);
        }
    };
    let package_name = decls
        .iter()
        .find(|d| d.keyword == DeclKeyword::Package)
        .and_then(|d| text[d.span.0..d.span.1].split_whitespace().nth(1))
        .unwrap_or_default()
        .to_string();

    let mut units = Vec::new();
    for d in decls.iter().filter(|d| d.keyword == DeclKeyword::Func) {
        let source_text = &text[d.span.0..d.span.1];
        match parse_signature(source_text) {
            Ok(sig) => units.push(FocalUnit {
                name: sig.name,
                kind: sig.kind,
                receiver_type: sig.receiver_type,
                type_params: sig.type_params,
                type_param_names: sig.type_param_names,
                params: sig.params,
                returns: sig.returns,
                doc_comment: d.doc.map(|(a, b)| text[a..b].to_string()),
                source_text: source_text.to_string(),
                file_path: rel_path.to_string(),
                package_path: package_path.to_string(),
                package_name: package_name.clone(),
                byte_span: ByteSpan { start: d.span.0, end: d.span.1 },
            }),
            Err(e) => errors.push(FileError {
                path: rel_path.to_string(),
                message: format!("declaration at byte {}: {e}", d.span.0),
            }),
        }
    }
    (units, errors)
}

/// Directories skipped while walking a module.
fn skip_dir(name: &str) -> bool {
    name == "vendor" || name == "testdata" || name.starts_with('.') || name.starts_with('_')
}

/// Scan every package directory below `root`, skipping vendored, hidden and
/// `testdata` directories.
pub fn scan_module(root: &Path) -> Result<ScanOutcome, ExtractError> {
    let mut dirs = Vec::new();
    let walker = walkdir::WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| e.depth() == 0 || !(e.file_type().is_dir() && skip_dir(&e.file_name().to_string_lossy())));
    for entry in walker {
        let entry = entry.map_err(|e| ExtractError::Io {
            path: root.to_path_buf(),
            source: e.into(),
        })?;
        if entry.file_type().is_dir() {
            let has_go = fs::read_dir(entry.path())
                .map_err(|source| ExtractError::Io { path: entry.path().to_path_buf(), source })?
                .filter_map(Result::ok)
                .any(|f| {
                    let n = f.file_name().to_string_lossy().into_owned();
                    n.ends_with(".go") && !n.ends_with("_test.go")
                });
            if has_go {
                dirs.push(entry.path().to_path_buf());
            }
        }
    }
    let mut outcome = ScanOutcome::default();
    for dir in dirs {
        let part = scan_package(&dir)?;
        outcome.units.extend(part.units);
        outcome.errors.extend(part.errors);
    }
    outcome
        .units
        .sort_by(|a, b| (&a.file_path, a.byte_span.start).cmp(&(&b.file_path, b.byte_span.start)));
    Ok(outcome)
}

/// Selection of focal units by name and visibility.
#[derive(Debug, Clone, Default)]
pub struct FocalFilter {
    pub name_pattern: Option<Regex>,
    pub exported_only: bool,
}

impl FocalFilter {
    pub fn accepts(&self, unit: &FocalUnit) -> bool {
        if self.exported_only && !unit.is_exported() {
            return false;
        }
        match &self.name_pattern {
            Some(re) => re.is_match(&unit.qualified_name()) || re.is_match(&unit.key()),
            None => true,
        }
    }
}

/// Identifiers fetched before generation starts: the receiver type, then
/// parameter types, then result types. Predeclared names and generic type
/// parameters are left out; duplicates keep their first position.
pub fn seed_identifiers(unit: &FocalUnit) -> Vec<String> {
    let candidates = unit
        .receiver_type
        .iter()
        .chain(unit.params.iter().flat_map(|p| &p.type_identifiers))
        .chain(unit.returns.iter().flat_map(|r| &r.type_identifiers));
    let mut seen = HashSet::new();
    candidates
        .filter(|id| !golex::is_predeclared(id))
        .filter(|id| !unit.type_param_names.contains(id))
        .filter(|id| seen.insert(id.as_str()))
        .cloned()
        .collect()
}
