//! Context sources for generation: the language server, a fixed table, or
//! nothing at all.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::state::FetchOutcome;
use crate::extract::FocalUnit;
use crate::lsp::{
    fetch_at, utf16_position, word_end_position, workspace_file, ContextEntry, FetchOptions, LspError,
    ServerHandle, SourcePosition,
};

/// Name of the scratch test file written next to the focal package while
/// a candidate is being generated.
pub const SCRATCH_FILE_NAME: &str = "ratg_scratch_test.go";

/// Prefix of the scratch file: package clause and the `testing` import.
pub fn scratch_header(package_name: &str) -> String {
    format!("package {package_name}\n\nimport \"testing\"\n\n")
}

pub trait ContextFetcher {
    /// Resolve an identifier taken from the focal unit's signature.
    fn seed(&mut self, focal: &FocalUnit, identifier: &str) -> FetchOutcome;

    /// Prepare for lookups inside a new candidate.
    fn open_scratch(&mut self, focal: &FocalUnit, text: &str) -> Result<(), LspError>;

    /// Resolve `identifier`, whose last character sits at `position` of the
    /// updated scratch `text`.
    fn lookup(&mut self, identifier: &str, text: &str, position: SourcePosition) -> FetchOutcome;

    /// Drop the scratch state.
    fn close_scratch(&mut self) -> Result<(), LspError>;
}

/// Never finds anything. Used to generate without repository context.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullFetcher;

impl ContextFetcher for NullFetcher {
    fn seed(&mut self, _: &FocalUnit, _: &str) -> FetchOutcome {
        FetchOutcome::Miss
    }
    fn open_scratch(&mut self, _: &FocalUnit, _: &str) -> Result<(), LspError> {
        Ok(())
    }
    fn lookup(&mut self, _: &str, _: &str, _: SourcePosition) -> FetchOutcome {
        FetchOutcome::Miss
    }
    fn close_scratch(&mut self) -> Result<(), LspError> {
        Ok(())
    }
}

/// Answers from a fixed identifier table and records what it was asked.
#[derive(Debug, Default, Clone)]
pub struct StaticFetcher {
    pub table: HashMap<String, ContextEntry>,
    pub lookups: Vec<(String, SourcePosition)>,
    pub syncs: usize,
}

impl StaticFetcher {
    pub fn new(entries: impl IntoIterator<Item = ContextEntry>) -> Self {
        StaticFetcher {
            table: entries.into_iter().map(|e| (e.identifier.clone(), e)).collect(),
            ..Default::default()
        }
    }

    fn answer(&self, identifier: &str) -> FetchOutcome {
        match self.table.get(identifier) {
            Some(e) => FetchOutcome::Hit(e.clone()),
            None => FetchOutcome::Miss,
        }
    }
}

impl ContextFetcher for StaticFetcher {
    fn seed(&mut self, _: &FocalUnit, identifier: &str) -> FetchOutcome {
        self.answer(identifier)
    }
    fn open_scratch(&mut self, _: &FocalUnit, _: &str) -> Result<(), LspError> {
        self.syncs += 1;
        Ok(())
    }
    fn lookup(&mut self, identifier: &str, _: &str, position: SourcePosition) -> FetchOutcome {
        self.syncs += 1;
        self.lookups.push((identifier.to_string(), position));
        self.answer(identifier)
    }
    fn close_scratch(&mut self) -> Result<(), LspError> {
        Ok(())
    }
}

/// Resolves identifiers through a running language server. The partial
/// test lives in a scratch file inside the focal package so that package
/// members resolve exactly as they would in a real test.
pub struct LspFetcher<'a> {
    handle: &'a mut ServerHandle,
    options: FetchOptions,
    scratch: Option<PathBuf>,
}

impl<'a> LspFetcher<'a> {
    pub fn new(handle: &'a mut ServerHandle, options: FetchOptions) -> Self {
        LspFetcher { handle, options, scratch: None }
    }

    pub fn handle(&mut self) -> &mut ServerHandle {
        self.handle
    }

    pub fn scratch_path(&self) -> Option<&Path> {
        self.scratch.as_deref()
    }

    fn outcome(result: Result<Option<ContextEntry>, LspError>) -> FetchOutcome {
        match result {
            Ok(Some(e)) => FetchOutcome::Hit(e),
            Ok(None) => FetchOutcome::Miss,
            Err(e) => FetchOutcome::Error(e.to_string()),
        }
    }
}

impl ContextFetcher for LspFetcher<'_> {
    fn seed(&mut self, focal: &FocalUnit, identifier: &str) -> FetchOutcome {
        let file = workspace_file(self.handle.workspace_root(), &focal.file_path);
        let Ok(text) = fs::read_to_string(&file) else {
            return FetchOutcome::Error(format!("cannot read {}", file.display()));
        };
        let header_end = focal.byte_span.start + focal.header_text().len();
        if header_end > text.len() {
            return FetchOutcome::Error(format!("{} changed since extraction", file.display()));
        }
        let Some((_, pos)) = word_end_position(&text, (focal.byte_span.start, header_end), identifier) else {
            return FetchOutcome::Miss;
        };
        let options = self.options.clone();
        Self::outcome(fetch_at(self.handle, identifier, &file, pos, &options, false))
    }

    fn open_scratch(&mut self, focal: &FocalUnit, text: &str) -> Result<(), LspError> {
        let root = self.handle.workspace_root().to_path_buf();
        let path = workspace_file(&root, focal.package_dir()).join(SCRATCH_FILE_NAME);
        if path.exists() {
            tracing::warn!(path = %path.display(), "overwriting stale scratch file");
        }
        fs::write(&path, text)?;
        self.scratch = Some(path.clone());
        self.handle.sync_document(&path, text)?;
        Ok(())
    }

    fn lookup(&mut self, identifier: &str, text: &str, position: SourcePosition) -> FetchOutcome {
        let Some(path) = self.scratch.clone() else {
            return FetchOutcome::Error("no scratch file open".into());
        };
        if let Err(e) = fs::write(&path, text) {
            return FetchOutcome::Error(e.to_string());
        }
        if let Err(e) = self.handle.sync_document(&path, text) {
            return FetchOutcome::Error(e.to_string());
        }
        let options = self.options.clone();
        Self::outcome(fetch_at(self.handle, identifier, &path, position, &options, true))
    }

    fn close_scratch(&mut self) -> Result<(), LspError> {
        let Some(path) = self.scratch.take() else {
            return Ok(());
        };
        let closed = self.handle.close_document(&path);
        let removed = fs::remove_file(&path);
        closed?;
        removed?;
        Ok(())
    }
}

impl Drop for LspFetcher<'_> {
    fn drop(&mut self) {
        if let Some(path) = self.scratch.take() {
            let _ = fs::remove_file(path);
        }
    }
}

/// UTF-16 position in the scratch file of a byte offset inside the snippet.
pub fn scratch_position(header: &str, snippet: &str, snippet_offset: usize) -> SourcePosition {
    // The header ends with a newline, so the snippet starts at column 0.
    let p = utf16_position(snippet, snippet_offset).unwrap_or(SourcePosition { line: 0, character: 0 });
    SourcePosition { line: header.matches('\n').count() as u32 + p.line, character: p.character }
}
