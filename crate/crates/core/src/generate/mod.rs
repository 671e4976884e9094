//! Token-by-token test generation with on-the-fly context fetching.
//!
//! Each generated token is appended to the test snippet; identifiers it
//! completes are looked up, their definitions join the context store, and
//! the prompt for the next token is rebuilt from the updated store.

mod assemble;
mod fetcher;
mod generator;
mod segment;
mod state;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use assemble::{
    run_import_fixer,
    assemble_test_file, close_unbalanced, referenced_imports, rename_test, unique_test_names, AssembleError,
};
pub use fetcher::{
    scratch_header, scratch_position, ContextFetcher, LspFetcher, NullFetcher, StaticFetcher, SCRATCH_FILE_NAME,
};
pub use generator::{
    escape_token, format_token_list, parse_token_list, parse_token_response, GeneratorError, RemoteGenerator,
    ScriptedGenerator, TokenFileError, TokenGenerator, ENDPOINT_ENV, TOKEN_ENV,
};
pub use segment::{classify_chars, Flushed, LexMode, Segmenter};
pub use state::{FetchOutcome, FetchRecord, FetchStatus, GenerationState, LookupRequest, StepReport};

use crate::context::ContextStore;
use crate::extract::{seed_identifiers, FocalUnit};
use crate::lsp::LspError;
use crate::prompt::{initial_snippet, Formulator, PromptError};

pub const DEFAULT_MAX_TOKENS: usize = 512;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub max_tokens: usize,
    /// Extra attempts after a failed generator call.
    pub generator_retries: u32,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig { max_tokens: DEFAULT_MAX_TOKENS, generator_retries: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    BraceClose,
    TokenCap,
    GeneratorEnd,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCandidate {
    /// Key of the focal unit, e.g. `stack/Stack.Push`.
    pub focal: String,
    pub test_name: String,
    /// 1-based among candidates for the same focal unit.
    pub candidate_index: usize,
    /// The test function, cut after its closing brace when there is one.
    pub source_text: String,
    pub stop_reason: StopReason,
    pub token_count: usize,
    pub fetch_log: Vec<FetchRecord>,
}

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("generator failed after {attempts} attempts: {source}")]
    Generator {
        attempts: u32,
        #[source]
        source: GeneratorError,
    },
    #[error("scratch file: {0}")]
    Scratch(#[from] LspError),
    #[error("cannot write trace: {0}")]
    Trace(#[from] std::io::Error),
}

/// Resolve the focal unit's signature identifiers and add the hits to
/// `store` as round-0 entries.
pub fn seed_context(focal: &FocalUnit, fetcher: &mut dyn ContextFetcher, store: &mut ContextStore) -> Vec<FetchRecord> {
    let mut log = Vec::new();
    for id in seed_identifiers(focal) {
        if store.contains(&id) {
            continue;
        }
        let record = match fetcher.seed(focal, &id) {
            FetchOutcome::Hit(mut entry) => {
                entry.identifier = id.clone();
                entry.fetch_round = 0;
                let location = Some(entry.location.clone());
                store.insert(entry);
                FetchRecord { identifier: id, outcome: FetchStatus::Hit, token_index: 0, location, message: None }
            }
            FetchOutcome::Miss => {
                store.record_miss(&id);
                FetchRecord { identifier: id, outcome: FetchStatus::Miss, token_index: 0, location: None, message: None }
            }
            FetchOutcome::Error(message) => {
                tracing::warn!(identifier = %id, %message, "seed fetch failed");
                store.record_miss(&id);
                FetchRecord { identifier: id, outcome: FetchStatus::Error, token_index: 0, location: None, message: Some(message) }
            }
        };
        log.push(record);
    }
    log
}

fn next_with_retries(
    generator: &mut dyn TokenGenerator,
    prompt: &str,
    retries: u32,
) -> Result<Option<String>, GenerationError> {
    let mut attempt = 0;
    loop {
        attempt += 1;
        match generator.next_token(prompt) {
            Ok(t) => return Ok(t),
            Err(e) if attempt > retries => return Err(GenerationError::Generator { attempts: attempt, source: e }),
            Err(e) => tracing::warn!(attempt, error = %e, "generator call failed; retrying"),
        }
    }
}

/// Generate one test candidate for `focal`.
///
/// The seed fetch runs first for signature identifiers not yet in `store`;
/// the store keeps growing across candidates for the same focal unit. With
/// `trace_dir`, every prompt, the token stream and the fetch log are
/// written there.
#[allow(clippy::too_many_arguments)]
pub fn generate(
    focal: &FocalUnit,
    generator: &mut dyn TokenGenerator,
    fetcher: &mut dyn ContextFetcher,
    store: &mut ContextStore,
    formulator: &Formulator,
    config: &GenerationConfig,
    candidate_index: usize,
    trace_dir: Option<&Path>,
) -> Result<TestCandidate, GenerationError> {
    let snippet = initial_snippet(&focal.name)?;
    let test_name = format!("Test{}", focal.name);
    let mut state = GenerationState::new(&snippet);
    state.skip_identifier(&focal.name);
    state.fetch_log = seed_context(focal, fetcher, store);
    let header = scratch_header(&focal.package_name);
    if let Some(dir) = trace_dir {
        fs::create_dir_all(dir)?;
    }

    fetcher.open_scratch(focal, &format!("{header}{}\n{}", state.test_snippet, state.closers()))?;
    let mut tokens = Vec::new();
    let result = (|| {
        let stop = loop {
            if state.token_length >= config.max_tokens {
                break StopReason::TokenCap;
            }
            let prompt = formulator.build_prompt(store, focal, &state.test_snippet);
            if let Some(dir) = trace_dir {
                fs::write(dir.join(format!("prompt_{:04}.txt", state.token_length + 1)), &prompt)?;
            }
            let Some(token) = next_with_retries(generator, &prompt, config.generator_retries)? else {
                break StopReason::GeneratorEnd;
            };
            if token.is_empty() {
                break StopReason::GeneratorEnd;
            }
            tokens.push(token.clone());
            // Lookups see the snippet including this whole token, closed off
            // so the scratch file parses.
            let closers = state.closers_after(&token);
            let mut lookup = |req: &LookupRequest<'_>| {
                let pos = scratch_position(&header, req.snippet, req.last_char);
                fetcher.lookup(req.identifier, &format!("{header}{}\n{closers}", req.snippet), pos)
            };
            state.step(&token, store, &mut lookup);
            if state.is_closed() {
                break StopReason::BraceClose;
            }
        };
        Ok::<_, GenerationError>(stop)
    })();
    let closed = fetcher.close_scratch();
    let stop_reason = result?;
    closed?;

    if let Some(dir) = trace_dir {
        fs::write(dir.join("tokens.txt"), format_token_list(&tokens))?;
        let log = serde_json::to_string_pretty(&state.fetch_log).expect("fetch log serializes");
        fs::write(dir.join("fetch_log.json"), log + "\n")?;
    }

    Ok(TestCandidate {
        focal: focal.key(),
        test_name,
        candidate_index,
        source_text: state.body_text().to_string(),
        stop_reason,
        token_count: state.token_length,
        fetch_log: state.fetch_log,
    })
}
