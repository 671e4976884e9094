//! Token generators: a scripted replay generator and a remote HTTP one.

use std::fs;
use std::path::Path;
use std::time::Duration;

use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("generator request failed: {0}")]
    Request(String),
    #[error("generator returned an unusable response: {0}")]
    Response(String),
    #[error("{0} is not set")]
    MissingEndpoint(&'static str),
}

/// Produces the next token for a prompt; `None` ends the stream.
pub trait TokenGenerator {
    fn next_token(&mut self, prompt: &str) -> Result<Option<String>, GeneratorError>;
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TokenFileError {
    #[error("line {line}: empty token")]
    EmptyToken { line: usize },
    #[error("line {line}: unknown escape `\\{escape}`")]
    BadEscape { line: usize, escape: char },
    #[error("line {line}: dangling backslash")]
    DanglingBackslash { line: usize },
    #[error("cannot read token file {path}: {message}")]
    Io { path: String, message: String },
}

/// Parse a token file: one token per line, with `\n`, `\t`, `\r`, `\s`
/// (space) and `\\` escapes. A final newline is optional.
pub fn parse_token_list(text: &str) -> Result<Vec<String>, TokenFileError> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.is_empty() {
        return Ok(Vec::new());
    }
    body.split('\n')
        .enumerate()
        .map(|(i, raw)| {
            let line = i + 1;
            let raw = raw.strip_suffix('\r').unwrap_or(raw);
            if raw.is_empty() {
                return Err(TokenFileError::EmptyToken { line });
            }
            let mut out = String::with_capacity(raw.len());
            let mut chars = raw.chars();
            while let Some(c) = chars.next() {
                if c != '\\' {
                    out.push(c);
                    continue;
                }
                match chars.next() {
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    Some('r') => out.push('\r'),
                    Some('s') => out.push(' '),
                    Some('\\') => out.push('\\'),
                    Some(escape) => return Err(TokenFileError::BadEscape { line, escape }),
                    None => return Err(TokenFileError::DanglingBackslash { line }),
                }
            }
            Ok(out)
        })
        .collect()
}

/// Inverse of [`parse_token_list`] for a single token.
pub fn escape_token(token: &str) -> String {
    let mut out = String::with_capacity(token.len());
    for c in token.chars() {
        match c {
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            ' ' => out.push_str("\\s"),
            '\\' => out.push_str("\\\\"),
            c => out.push(c),
        }
    }
    out
}

pub fn format_token_list<S: AsRef<str>>(tokens: &[S]) -> String {
    tokens.iter().map(|t| escape_token(t.as_ref()) + "\n").collect()
}

/// Replays a fixed token sequence and records every prompt it is shown.
#[derive(Debug, Clone, Default)]
pub struct ScriptedGenerator {
    tokens: Vec<String>,
    next: usize,
    prompts: Vec<String>,
}

impl ScriptedGenerator {
    pub fn new<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Self {
        ScriptedGenerator { tokens: tokens.into_iter().map(Into::into).collect(), next: 0, prompts: Vec::new() }
    }

    pub fn from_file(path: &Path) -> Result<Self, TokenFileError> {
        let text = fs::read_to_string(path).map_err(|e| TokenFileError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(Self::new(parse_token_list(&text)?))
    }

    pub fn prompts(&self) -> &[String] {
        &self.prompts
    }

    pub fn consumed(&self) -> usize {
        self.next
    }

    /// Start over from the first token, keeping recorded prompts.
    pub fn rewind(&mut self) {
        self.next = 0;
    }
}

impl TokenGenerator for ScriptedGenerator {
    fn next_token(&mut self, prompt: &str) -> Result<Option<String>, GeneratorError> {
        self.prompts.push(prompt.to_string());
        let t = self.tokens.get(self.next).cloned();
        if t.is_some() {
            self.next += 1;
        }
        Ok(t)
    }
}

pub const ENDPOINT_ENV: &str = "RATG_LLM_ENDPOINT";
pub const TOKEN_ENV: &str = "RATG_LLM_TOKEN";

/// One-token-per-request HTTP generator.
///
/// Sends `{"prompt", "max_new_tokens": 1, "temperature"}` as JSON and accepts
/// `{"token": ...}`, `{"generated_text": ...}` or a completions-style
/// `{"choices": [{"text": ...}]}` reply. A null or empty token ends the stream.
#[derive(Debug)]
pub struct RemoteGenerator {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_token: Option<String>,
    pub temperature: f64,
}

impl RemoteGenerator {
    pub fn new(endpoint: impl Into<String>, api_token: Option<String>, temperature: f64) -> Result<Self, GeneratorError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| GeneratorError::Request(e.to_string()))?;
        Ok(RemoteGenerator { client, endpoint: endpoint.into(), api_token, temperature })
    }

    pub fn from_env(temperature: f64) -> Result<Self, GeneratorError> {
        let endpoint = std::env::var(ENDPOINT_ENV).map_err(|_| GeneratorError::MissingEndpoint(ENDPOINT_ENV))?;
        Self::new(endpoint, std::env::var(TOKEN_ENV).ok(), temperature)
    }
}

/// Pull the next token out of a generator reply.
pub fn parse_token_response(v: &Value) -> Result<Option<String>, GeneratorError> {
    let field = v
        .get("token")
        .or_else(|| v.get("generated_text"))
        .or_else(|| v.pointer("/choices/0/text"))
        .ok_or_else(|| GeneratorError::Response(format!("no token field in {v}")))?;
    match field {
        Value::Null => Ok(None),
        Value::String(s) if s.is_empty() => Ok(None),
        Value::String(s) => Ok(Some(s.clone())),
        other => Err(GeneratorError::Response(format!("token is not a string: {other}"))),
    }
}

impl TokenGenerator for RemoteGenerator {
    fn next_token(&mut self, prompt: &str) -> Result<Option<String>, GeneratorError> {
        let body = json!({ "prompt": prompt, "max_new_tokens": 1, "temperature": self.temperature });
        let mut req = self.client.post(&self.endpoint).json(&body);
        if let Some(t) = &self.api_token {
            req = req.bearer_auth(t);
        }
        let resp = req.send().map_err(|e| GeneratorError::Request(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(GeneratorError::Request(format!("HTTP {status}")));
        }
        let v: Value = resp.json().map_err(|e| GeneratorError::Response(e.to_string()))?;
        parse_token_response(&v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn token_file_escapes() {
        let toks = parse_token_list("\\n\\t\\ss\nc.String(\n\\\\n\n").unwrap();
        assert_eq!(toks, vec!["\n\t s", "c.String(", "\\n"]);
        assert_eq!(parse_token_list(""), Ok(vec![]));
        assert_eq!(parse_token_list("a\n\nb"), Err(TokenFileError::EmptyToken { line: 2 }));
        assert_eq!(parse_token_list("a\\q"), Err(TokenFileError::BadEscape { line: 1, escape: 'q' }));
        assert_eq!(parse_token_list("a\\"), Err(TokenFileError::DanglingBackslash { line: 1 }));
    }

    #[test]
    fn scripted_records_prompts() {
        let mut g = ScriptedGenerator::new(["a", "b"]);
        assert_eq!(g.next_token("p1").unwrap().as_deref(), Some("a"));
        assert_eq!(g.next_token("p2").unwrap().as_deref(), Some("b"));
        assert_eq!(g.next_token("p3").unwrap(), None);
        assert_eq!(g.prompts(), ["p1", "p2", "p3"]);
    }

    #[test]
    fn response_shapes() {
        assert_eq!(parse_token_response(&json!({"token": "x"})).unwrap().as_deref(), Some("x"));
        assert_eq!(parse_token_response(&json!({"token": null})).unwrap(), None);
        assert_eq!(parse_token_response(&json!({"generated_text": ""})).unwrap(), None);
        assert_eq!(parse_token_response(&json!({"choices": [{"text": "y"}]})).unwrap().as_deref(), Some("y"));
        assert!(parse_token_response(&json!({"foo": 1})).is_err());
        assert!(parse_token_response(&json!({"token": 3})).is_err());
    }

    proptest::proptest! {
        #[test]
        fn escape_round_trip(toks in proptest::collection::vec("[a-z \\\\\n\t\r(){}\"]{1,8}", 0..20)) {
            let text = format_token_list(&toks);
            proptest::prop_assert_eq!(parse_token_list(&text).unwrap(), toks);
        }
    }
}
