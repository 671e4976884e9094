//! Prompt assembly: task description, precise context, focal unit and the
//! test snippet generated so far.

use thiserror::Error;

use crate::context::ContextStore;
use crate::extract::{FocalKind, FocalUnit};
use crate::golex;

pub const DEFAULT_TASK_DESCRIPTION: &str =
    "I will give you a Golang method or function, please generate a Golang unit test";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("`{0}` is not a valid Go identifier")]
    InvalidName(String),
}

/// `func Test<Name>(t *testing.T) {`
pub fn initial_snippet(focal_name: &str) -> Result<String, PromptError> {
    if !golex::is_identifier(focal_name) || golex::is_keyword(focal_name) {
        return Err(PromptError::InvalidName(focal_name.to_string()));
    }
    Ok(format!("func Test{focal_name}(t *testing.T) {{"))
}

/// The four prompt parts, already rendered to text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub task_description: String,
    pub precise_context: String,
    pub focal_kind: FocalKind,
    pub focal_text: String,
    pub test_snippet: String,
}

impl Prompt {
    /// Sections separated by one blank line, in fixed order. An empty
    /// context section is left out entirely; the text always ends with the
    /// snippet, exactly.
    pub fn render(&self) -> String {
        let header = match self.focal_kind {
            FocalKind::Method => "### METHOD UNDER TEST",
            FocalKind::Function => "### FUNCTION UNDER TEST",
        };
        let mut out = String::with_capacity(
            self.task_description.len() + self.precise_context.len() + self.focal_text.len() + self.test_snippet.len() + 64,
        );
        out.push_str(&self.task_description);
        out.push_str("\n\n");
        if !self.precise_context.is_empty() {
            out.push_str(&self.precise_context);
            out.push_str("\n\n");
        }
        out.push_str(header);
        out.push('\n');
        out.push_str(&self.focal_text);
        out.push_str("\n\n");
        out.push_str(&self.test_snippet);
        out
    }
}

/// Builds prompts for one focal unit; the task text is configurable.
#[derive(Debug, Clone)]
pub struct Formulator {
    pub task_description: String,
}

impl Default for Formulator {
    fn default() -> Self {
        Formulator { task_description: DEFAULT_TASK_DESCRIPTION.to_string() }
    }
}

impl Formulator {
    pub fn new(task_description: impl Into<String>) -> Self {
        Formulator { task_description: task_description.into() }
    }

    pub fn prompt(&self, store: &ContextStore, focal: &FocalUnit, test_snippet: &str) -> Prompt {
        let focal_text = match &focal.doc_comment {
            Some(doc) => format!("{doc}\n{}", focal.source_text),
            None => focal.source_text.clone(),
        };
        Prompt {
            task_description: self.task_description.clone(),
            precise_context: store.render(),
            focal_kind: focal.kind,
            focal_text,
            test_snippet: test_snippet.to_string(),
        }
    }

    pub fn build_prompt(&self, store: &ContextStore, focal: &FocalUnit, test_snippet: &str) -> String {
        self.prompt(store, focal, test_snippet).render()
    }
}
