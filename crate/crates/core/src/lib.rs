//! Repository-aware Go unit test generation.
//!
//! The pipeline: [`extract`] focal units from a Go module, seed a
//! [`context::ContextStore`] through the language server ([`lsp`]), then
//! [`generate`] a test token by token while fetching definitions for each
//! identifier the generator writes. [`eval`] measures the results.

pub mod context;
pub mod eval;
pub mod extract;
pub mod generate;
pub mod golex;
pub mod lsp;
pub mod prompt;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/extraction.md")]
    mod extraction {}
    #[doc = include_str!("../../../book/src/generation.md")]
    mod generation {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
