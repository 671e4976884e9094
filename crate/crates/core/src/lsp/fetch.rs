//! Definition + documentation lookup for a single identifier.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::client::{LspError, ServerHandle};
use super::position::{byte_offset, utf16_position, SourcePosition};
use crate::extract::{self, DeclKeyword};
use crate::golex;

/// Where a fetched definition lives. `path` is relative to the workspace
/// root when the definition is inside it, absolute otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefinitionLocation {
    pub path: String,
    pub position: SourcePosition,
}

/// One fetched definition with its documentation comment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextEntry {
    pub identifier: String,
    pub definition_text: String,
    pub doc_comment: Option<String>,
    pub location: DefinitionLocation,
    /// 0 for the seed fetch, otherwise the token index that triggered it.
    pub fetch_round: usize,
}

impl ContextEntry {
    pub fn is_seed(&self) -> bool {
        self.fetch_round == 0
    }
}

#[derive(Debug, Clone, Default)]
pub struct FetchOptions {
    /// Also inject definitions that resolve outside the workspace (standard
    /// library, module cache).
    pub include_external: bool,
}

/// A declaration found around a definition site.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractedDefinition {
    pub definition_text: String,
    pub doc_comment: Option<String>,
}

/// Extract the top-level declaration (or the single spec of a grouped
/// declaration) containing `offset`. Type declarations are followed by the
/// signatures of the methods declared on that type in `package_dir`.
pub fn extract_definition(text: &str, offset: usize, package_dir: Option<&Path>) -> Option<ExtractedDefinition> {
    let decls = extract::top_level_decls(text).ok()?;
    let decl = decls.iter().find(|d| d.span.0 <= offset && offset < d.span.1)?;
    let (span, doc) = match decl.specs.iter().find(|s| s.span.0 <= offset && offset < s.span.1) {
        Some(spec) => {
            let doc = spec.doc.or(if decl.specs.len() == 1 { decl.doc } else { None });
            let text_span = if decl.specs.len() == 1 { decl.span } else { spec.span };
            (text_span, doc)
        }
        None => (decl.span, decl.doc),
    };
    let mut definition_text = text[span.0..span.1].to_string();

    if decl.keyword == DeclKeyword::Type {
        if let (Some(dir), Some(name)) = (package_dir, identifier_at(text, offset)) {
            let methods = method_headers(dir, name);
            if !methods.is_empty() {
                definition_text.push_str("\n\n");
                definition_text.push_str(&methods.join("\n"));
            }
        }
    }
    Some(ExtractedDefinition {
        definition_text,
        doc_comment: doc.map(|(a, b)| text[a..b].to_string()),
    })
}

fn identifier_at(text: &str, offset: usize) -> Option<&str> {
    let start = text[..offset]
        .char_indices()
        .rev()
        .take_while(|&(_, c)| golex::is_ident_char(c))
        .last()
        .map_or(offset, |(i, _)| i);
    let end = text[offset..]
        .char_indices()
        .find(|&(_, c)| !golex::is_ident_char(c))
        .map_or(text.len(), |(i, _)| offset + i);
    let word = &text[start..end];
    golex::is_identifier(word).then_some(word)
}

fn method_headers(dir: &Path, type_name: &str) -> Vec<String> {
    let Ok(scan) = extract::scan_package(dir) else {
        return Vec::new();
    };
    scan.units
        .iter()
        .filter(|u| u.receiver_type.as_deref() == Some(type_name))
        .map(|u| u.header_text().to_string())
        .collect()
}

/// Prose part of a hover: everything outside fenced code blocks.
fn hover_prose(hover: &str) -> Option<String> {
    let mut out = Vec::new();
    let mut in_fence = false;
    for line in hover.lines() {
        if line.trim_start().starts_with("```") {
            in_fence = !in_fence;
            continue;
        }
        if !in_fence {
            out.push(line);
        }
    }
    let prose = out.join("\n").trim().to_string();
    (!prose.is_empty()).then_some(prose)
}

/// Look up the identifier ending at `position` in `lookup_path`.
///
/// Returns `None` when the server knows no definition, when the definition is
/// the lookup file itself (a local of the test being written), or when it
/// lies outside the workspace and external definitions are not wanted.
pub fn fetch_identifier_context(
    handle: &mut ServerHandle,
    identifier: &str,
    scratch_path: &Path,
    position: SourcePosition,
    options: &FetchOptions,
) -> Result<Option<ContextEntry>, LspError> {
    fetch_at(handle, identifier, scratch_path, position, options, true)
}

pub(crate) fn fetch_at(
    handle: &mut ServerHandle,
    identifier: &str,
    lookup_path: &Path,
    position: SourcePosition,
    options: &FetchOptions,
    exclude_lookup_file: bool,
) -> Result<Option<ContextEntry>, LspError> {
    let Some(loc) = handle.definition(lookup_path, position)? else {
        return Ok(None);
    };
    if exclude_lookup_file && same_file(&loc.path, lookup_path) {
        return Ok(None);
    }
    let root = handle.workspace_root().to_path_buf();
    let target = loc.path.canonicalize().unwrap_or_else(|_| loc.path.clone());
    let inside = target.starts_with(&root);
    if !inside && !options.include_external {
        return Ok(None);
    }
    let Ok(text) = fs::read_to_string(&target) else {
        return Ok(None);
    };
    let Ok(offset) = byte_offset(&text, loc.position) else {
        return Ok(None);
    };
    let Some(def) = extract_definition(&text, offset, target.parent()) else {
        return Ok(None);
    };
    if def.definition_text.trim().is_empty() {
        return Ok(None);
    }

    let doc_comment = match def.doc_comment {
        Some(d) => Some(d),
        None if handle.supports_hover() => handle
            .hover(lookup_path, position)
            .ok()
            .flatten()
            .as_deref()
            .and_then(hover_prose),
        None => None,
    };
    let path = if inside {
        relative_slash(&root, &target)
    } else {
        target.to_string_lossy().into_owned()
    };
    Ok(Some(ContextEntry {
        identifier: identifier.to_string(),
        definition_text: def.definition_text,
        doc_comment,
        location: DefinitionLocation { path, position: loc.position },
        fetch_round: 0,
    }))
}

fn same_file(a: &Path, b: &Path) -> bool {
    let ca = a.canonicalize().unwrap_or_else(|_| a.to_path_buf());
    let cb = b.canonicalize().unwrap_or_else(|_| b.to_path_buf());
    ca == cb
}

pub(crate) fn relative_slash(root: &Path, path: &Path) -> String {
    path.strip_prefix(root)
        .unwrap_or(path)
        .components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Position of the last character of the first whole-word occurrence of
/// `identifier` inside `text[range]`.
pub(crate) fn word_end_position(
    text: &str,
    range: (usize, usize),
    identifier: &str,
) -> Option<(usize, SourcePosition)> {
    let hay = &text[range.0..range.1];
    let mut from = 0;
    while let Some(idx) = hay[from..].find(identifier) {
        let start = range.0 + from + idx;
        let end = start + identifier.len();
        let before_ok = !text[..start].chars().next_back().is_some_and(golex::is_ident_char);
        let after_ok = !text[end..].chars().next().is_some_and(golex::is_ident_char);
        if before_ok && after_ok {
            let last = text[..end].char_indices().next_back()?.0;
            return utf16_position(text, last).ok().map(|p| (last, p));
        }
        from += idx + identifier.len();
    }
    None
}

pub(crate) fn workspace_file(root: &Path, rel: &str) -> PathBuf {
    rel.split('/').fold(root.to_path_buf(), |p, c| p.join(c))
}
