//! Per-candidate generation state and the token step.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::segment::Segmenter;
use crate::context::ContextStore;
use crate::lsp::{ContextEntry, DefinitionLocation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FetchStatus {
    Hit,
    Miss,
    Error,
}

/// One identifier lookup, in the order it happened.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchRecord {
    pub identifier: String,
    pub outcome: FetchStatus,
    /// 0 for seed lookups, else the 1-based index of the triggering token.
    pub token_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<DefinitionLocation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FetchOutcome {
    Hit(ContextEntry),
    Miss,
    Error(String),
}

/// What the fetch callback needs to resolve one completed identifier.
#[derive(Debug, Clone, Copy)]
pub struct LookupRequest<'a> {
    pub identifier: &'a str,
    /// Full snippet so far, including the current token.
    pub snippet: &'a str,
    /// Byte offset of the identifier's last character within `snippet`.
    pub last_char: usize,
    pub token_index: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepReport {
    pub completed: usize,
    pub fetched: usize,
    pub context_changed: bool,
}

#[derive(Debug, Clone)]
pub struct GenerationState {
    pub token_length: usize,
    pub test_snippet: String,
    pub fetch_log: Vec<FetchRecord>,
    segmenter: Segmenter,
    skip: HashSet<String>,
}

impl GenerationState {
    pub fn new(initial_snippet: &str) -> Self {
        let mut segmenter = Segmenter::new();
        segmenter.feed(initial_snippet);
        GenerationState {
            token_length: 0,
            test_snippet: initial_snippet.to_string(),
            fetch_log: Vec::new(),
            segmenter,
            skip: HashSet::new(),
        }
    }

    /// Identifiers that are never looked up (e.g. the focal unit's name).
    pub fn skip_identifier(&mut self, identifier: &str) {
        self.skip.insert(identifier.to_string());
    }

    pub fn identifier_buffer(&self) -> &str {
        self.segmenter.buffer()
    }

    pub fn brace_depth(&self) -> usize {
        self.segmenter.brace_depth()
    }

    /// True once the test function body has been closed.
    pub fn is_closed(&self) -> bool {
        self.segmenter.closed_at().is_some()
    }

    /// Snippet up to and including the closing brace of the body, or the
    /// whole snippet while it is still open.
    pub fn body_text(&self) -> &str {
        match self.segmenter.closed_at() {
            Some(end) => &self.test_snippet[..end],
            None => &self.test_snippet,
        }
    }

    /// Text closing every open literal and bracket in the snippet.
    pub fn closers(&self) -> String {
        self.segmenter.closers()
    }

    /// Closers for the snippet once `token` has been appended.
    pub fn closers_after(&self, token: &str) -> String {
        let mut seg = self.segmenter.clone();
        seg.feed(token);
        seg.closers()
    }

    /// Append `token`, flush identifiers it completes and resolve the
    /// unfamiliar ones through `fetch`. Hits and misses are recorded in
    /// `store`; fetch errors count as misses.
    pub fn step(
        &mut self,
        token: &str,
        store: &mut ContextStore,
        fetch: &mut dyn FnMut(&LookupRequest<'_>) -> FetchOutcome,
    ) -> StepReport {
        self.token_length += 1;
        let token_index = self.token_length;
        self.test_snippet.push_str(token);
        let flushed = self.segmenter.feed(token);
        let mut report = StepReport { completed: flushed.len(), ..Default::default() };
        for f in flushed {
            if self.skip.contains(&f.identifier) || store.contains(&f.identifier) {
                continue;
            }
            let req = LookupRequest {
                identifier: &f.identifier,
                snippet: &self.test_snippet,
                last_char: f.last_char,
                token_index,
            };
            let outcome = fetch(&req);
            report.fetched += 1;
            let record = match outcome {
                FetchOutcome::Hit(mut entry) => {
                    entry.identifier = f.identifier.clone();
                    entry.fetch_round = token_index;
                    let location = Some(entry.location.clone());
                    report.context_changed |= store.insert(entry);
                    FetchRecord { identifier: f.identifier, outcome: FetchStatus::Hit, token_index, location, message: None }
                }
                FetchOutcome::Miss => {
                    store.record_miss(&f.identifier);
                    FetchRecord { identifier: f.identifier, outcome: FetchStatus::Miss, token_index, location: None, message: None }
                }
                FetchOutcome::Error(message) => {
                    tracing::warn!(identifier = %f.identifier, %message, "context fetch failed");
                    store.record_miss(&f.identifier);
                    FetchRecord {
                        identifier: f.identifier,
                        outcome: FetchStatus::Error,
                        token_index,
                        location: None,
                        message: Some(message),
                    }
                }
            };
            self.fetch_log.push(record);
        }
        report
    }
}
