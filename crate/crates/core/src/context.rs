//! The growing "precise context": fetched definitions, deduplicated by
//! identifier, plus the identifiers already known to have no definition.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::golex;
use crate::lsp::ContextEntry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetUnit {
    Chars,
    /// Estimated generator tokens: one token per four characters, rounded up.
    Tokens,
}

impl BudgetUnit {
    pub fn measure(self, text: &str) -> usize {
        let chars = text.chars().count();
        match self {
            BudgetUnit::Chars => chars,
            BudgetUnit::Tokens => chars.div_ceil(4),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextBudget {
    /// `None` means unlimited.
    pub limit: Option<usize>,
    pub unit: BudgetUnit,
}

impl ContextBudget {
    pub const DEFAULT_CHARS: usize = 6_000;

    pub fn unlimited() -> Self {
        ContextBudget { limit: None, unit: BudgetUnit::Chars }
    }

    pub fn chars(limit: usize) -> Self {
        ContextBudget { limit: Some(limit), unit: BudgetUnit::Chars }
    }
}

impl Default for ContextBudget {
    fn default() -> Self {
        ContextBudget::chars(Self::DEFAULT_CHARS)
    }
}

pub fn elision_marker(dropped: usize) -> String {
    format!("// [{dropped} context entries elided]")
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContextStore {
    entries: Vec<ContextEntry>,
    misses: BTreeSet<String>,
    budget: ContextBudget,
}

/// Serializable view of a store for the run directory. Reserved Go words
/// are left out of the miss list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextSnapshot {
    pub entries: Vec<ContextEntry>,
    pub misses: Vec<String>,
}

impl ContextStore {
    pub fn new(budget: ContextBudget) -> Self {
        ContextStore { entries: Vec::new(), misses: BTreeSet::new(), budget }
    }

    /// A store where Go keywords and predeclared identifiers are already
    /// recorded as misses, so they never trigger a lookup.
    pub fn with_go_reserved(budget: ContextBudget) -> Self {
        let mut store = Self::new(budget);
        for w in golex::KEYWORDS.iter().chain(golex::PREDECLARED.iter()) {
            store.misses.insert((*w).to_string());
        }
        store
    }

    pub fn budget(&self) -> ContextBudget {
        self.budget
    }

    pub fn entries(&self) -> &[ContextEntry] {
        &self.entries
    }

    pub fn misses(&self) -> impl Iterator<Item = &str> {
        self.misses.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Known either as a fetched entry or as a recorded miss.
    pub fn contains(&self, identifier: &str) -> bool {
        self.misses.contains(identifier) || self.entries.iter().any(|e| e.identifier == identifier)
    }

    /// Append `entry` unless its identifier is already known.
    pub fn insert(&mut self, entry: ContextEntry) -> bool {
        if self.contains(&entry.identifier) {
            return false;
        }
        self.entries.push(entry);
        true
    }

    pub fn record_miss(&mut self, identifier: &str) {
        if !self.entries.iter().any(|e| e.identifier == identifier) {
            self.misses.insert(identifier.to_string());
        }
    }

    pub fn snapshot(&self) -> ContextSnapshot {
        ContextSnapshot {
            entries: self.entries.clone(),
            misses: self
                .misses
                .iter()
                .filter(|m| !golex::is_keyword(m) && !golex::is_predeclared(m))
                .cloned()
                .collect(),
        }
    }

    fn block(entry: &ContextEntry) -> String {
        match &entry.doc_comment {
            Some(doc) => format!("{doc}\n{}", entry.definition_text),
            None => entry.definition_text.clone(),
        }
    }

    /// Render entries in insertion order, blank-line separated. Over budget,
    /// the oldest non-seed entries go first and seed entries last; any
    /// dropping is announced by one marker line at the top.
    pub fn render(&self) -> String {
        let blocks: Vec<String> = self.entries.iter().map(Self::block).collect();
        let full = blocks.join("\n\n");
        let Some(limit) = self.budget.limit else {
            return full;
        };
        let unit = self.budget.unit;
        if unit.measure(&full) <= limit {
            return full;
        }

        let eviction_order: Vec<usize> = (0..self.entries.len())
            .filter(|&i| !self.entries[i].is_seed())
            .chain((0..self.entries.len()).filter(|&i| self.entries[i].is_seed()))
            .collect();
        let mut dropped = HashSet::new();
        for idx in eviction_order {
            dropped.insert(idx);
            let kept: Vec<&str> = blocks
                .iter()
                .enumerate()
                .filter(|(i, _)| !dropped.contains(i))
                .map(|(_, b)| b.as_str())
                .collect();
            let marker = elision_marker(dropped.len());
            let rendered = if kept.is_empty() {
                marker
            } else {
                format!("{marker}\n\n{}", kept.join("\n\n"))
            };
            if unit.measure(&rendered) <= limit {
                return rendered;
            }
        }
        String::new()
    }
}
