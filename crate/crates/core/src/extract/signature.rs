//! Decomposition of a Go `func` declaration header.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::golex::{self, LexError, Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FocalKind {
    Method,
    Function,
}

/// One (possibly unnamed) parameter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: Option<String>,
    pub type_text: String,
    pub type_identifiers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultType {
    pub type_text: String,
    pub type_identifiers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub kind: FocalKind,
    pub name: String,
    /// Receiver base type name, pointer marker and type arguments stripped.
    pub receiver_type: Option<String>,
    /// Raw generic type-parameter list, brackets included.
    pub type_params: Option<String>,
    pub type_param_names: Vec<String>,
    pub params: Vec<Param>,
    pub returns: Vec<ResultType>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignatureError {
    #[error("declaration does not start with `func`")]
    NotAFunc,
    #[error("unbalanced brackets at bytes {start}..{end}")]
    Unbalanced { start: usize, end: usize },
    #[error("missing function name at bytes {start}..{end}")]
    MissingName { start: usize, end: usize },
    #[error("missing parameter list at bytes {start}..{end}")]
    MissingParams { start: usize, end: usize },
    #[error("malformed parameter list at bytes {start}..{end}: {reason}")]
    BadParams {
        start: usize,
        end: usize,
        reason: &'static str,
    },
    #[error(transparent)]
    Lex(#[from] LexError),
}

/// Parse the header of a `func` declaration. `decl_text` may include the body.
pub fn parse_signature(decl_text: &str) -> Result<Signature, SignatureError> {
    let src = decl_text;
    let toks: Vec<Token> = golex::significant(&golex::tokenize(src)?)
        .into_iter()
        .filter(|t| !t.is_auto_semi())
        .collect();
    if !toks.first().is_some_and(|t| t.is_ident(src, "func")) {
        return Err(SignatureError::NotAFunc);
    }
    let span_from = |i: usize| {
        let start = toks.get(i).map_or(src.len(), |t| t.start);
        let end = toks.get(i).map_or(src.len(), |t| t.end);
        (start, end)
    };
    let close_of = |i: usize| {
        golex::matching_close(src, &toks, i).ok_or_else(|| {
            let (start, _) = span_from(i);
            SignatureError::Unbalanced { start, end: src.len() }
        })
    };

    let mut i = 1;
    let mut receiver_type = None;
    if toks.get(i).is_some_and(|t| t.is_op(src, "(")) {
        let close = close_of(i)?;
        let recv = parse_param_list(src, &toks[i + 1..close])?;
        let first = recv.first().ok_or(SignatureError::BadParams {
            start: toks[i].start,
            end: toks[close].end,
            reason: "empty receiver",
        })?;
        receiver_type = base_type_name(&first.type_text);
        i = close + 1;
    }

    let name = match toks.get(i) {
        Some(t) if t.kind == TokenKind::Ident && !golex::is_keyword(t.text(src)) => {
            t.text(src).to_string()
        }
        _ => {
            let (start, end) = span_from(i);
            return Err(SignatureError::MissingName { start, end });
        }
    };
    i += 1;

    let mut type_params = None;
    let mut type_param_names = Vec::new();
    if toks.get(i).is_some_and(|t| t.is_op(src, "[")) {
        let close = close_of(i)?;
        type_params = Some(src[toks[i].start..toks[close].end].to_string());
        type_param_names = parse_param_list(src, &toks[i + 1..close])?
            .into_iter()
            .filter_map(|p| p.name)
            .collect();
        i = close + 1;
    }

    if !toks.get(i).is_some_and(|t| t.is_op(src, "(")) {
        let (start, end) = span_from(i);
        return Err(SignatureError::MissingParams { start, end });
    }
    let close = close_of(i)?;
    let params = parse_param_list(src, &toks[i + 1..close])?;
    i = close + 1;

    let returns = match toks.get(i) {
        None => Vec::new(),
        Some(t) if t.is_op(src, "{") || t.kind == TokenKind::Semi => Vec::new(),
        Some(t) if t.is_op(src, "(") => {
            let close = close_of(i)?;
            parse_param_list(src, &toks[i + 1..close])?
                .into_iter()
                .map(|p| ResultType {
                    type_text: p.type_text,
                    type_identifiers: p.type_identifiers,
                })
                .collect()
        }
        Some(_) => {
            let end = type_end(src, &toks, i).ok_or_else(|| {
                let (start, end) = span_from(i);
                SignatureError::BadParams { start, end, reason: "unrecognised result type" }
            })?;
            let tt = &toks[i..end];
            vec![ResultType {
                type_text: src[tt[0].start..tt[tt.len() - 1].end].to_string(),
                type_identifiers: type_identifiers(src, tt),
            }]
        }
    };

    let kind = if receiver_type.is_some() {
        FocalKind::Method
    } else {
        FocalKind::Function
    };
    Ok(Signature {
        kind,
        name,
        receiver_type,
        type_params,
        type_param_names,
        params,
        returns,
    })
}

/// `*Stack[T]` -> `Stack`.
fn base_type_name(type_text: &str) -> Option<String> {
    let trimmed = type_text.trim_start_matches(|c: char| c == '*' || c == '(' || c.is_whitespace());
    let name: String = trimmed.chars().take_while(|&c| golex::is_ident_char(c)).collect();
    golex::is_identifier(&name).then_some(name)
}

/// Identifiers naming types inside a type expression: keywords and package
/// qualifiers are dropped, `pkg.Name` contributes `Name`.
fn type_identifiers(src: &str, toks: &[Token]) -> Vec<String> {
    let mut out = Vec::new();
    for (k, t) in toks.iter().enumerate() {
        if t.kind != TokenKind::Ident {
            continue;
        }
        let text = t.text(src);
        if golex::is_keyword(text) {
            continue;
        }
        if toks.get(k + 1).is_some_and(|n| n.is_op(src, ".")) {
            continue;
        }
        out.push(text.to_string());
    }
    out
}

fn split_top_level_commas(src: &str, toks: &[Token]) -> Vec<(usize, usize)> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut begin = 0;
    for (k, t) in toks.iter().enumerate() {
        if t.kind != TokenKind::Op {
            continue;
        }
        match t.text(src) {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            "," if depth == 0 => {
                parts.push((begin, k));
                begin = k + 1;
            }
            _ => {}
        }
    }
    if begin < toks.len() {
        parts.push((begin, toks.len()));
    }
    parts
}

fn parse_param_list(src: &str, toks: &[Token]) -> Result<Vec<Param>, SignatureError> {
    let toks: Vec<Token> = toks.iter().copied().filter(|t| t.kind != TokenKind::Semi).collect();
    if toks.is_empty() {
        return Ok(Vec::new());
    }
    let list_span = (toks[0].start, toks[toks.len() - 1].end);
    let elems: Vec<&[Token]> = split_top_level_commas(src, &toks)
        .into_iter()
        .map(|(a, b)| &toks[a..b])
        .collect();
    if elems.iter().any(|e| e.is_empty()) {
        return Err(SignatureError::BadParams {
            start: list_span.0,
            end: list_span.1,
            reason: "empty parameter",
        });
    }

    let is_named = |e: &[Token]| {
        let first = e[0];
        first.kind == TokenKind::Ident
            && !golex::is_keyword(first.text(src))
            && e.len() > 1
            && !e[1].is_op(src, ".")
            && !(e[1].is_op(src, "[") && e[1].start == first.end)
    };
    let make_type = |tt: &[Token]| {
        (
            src[tt[0].start..tt[tt.len() - 1].end].to_string(),
            type_identifiers(src, tt),
        )
    };

    if !elems.iter().any(|e| is_named(e)) {
        return Ok(elems
            .into_iter()
            .map(|e| {
                let (type_text, type_identifiers) = make_type(e);
                Param { name: None, type_text, type_identifiers }
            })
            .collect());
    }

    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    for e in elems {
        if is_named(e) {
            let (type_text, type_identifiers) = make_type(&e[1..]);
            for n in pending.drain(..) {
                out.push(Param {
                    name: Some(n),
                    type_text: type_text.clone(),
                    type_identifiers: type_identifiers.clone(),
                });
            }
            out.push(Param {
                name: Some(e[0].text(src).to_string()),
                type_text,
                type_identifiers,
            });
        } else if e.len() == 1 && e[0].kind == TokenKind::Ident && !golex::is_keyword(e[0].text(src)) {
            pending.push(e[0].text(src).to_string());
        } else {
            return Err(SignatureError::BadParams {
                start: e[0].start,
                end: e[e.len() - 1].end,
                reason: "mixed named and unnamed parameters",
            });
        }
    }
    if !pending.is_empty() {
        return Err(SignatureError::BadParams {
            start: list_span.0,
            end: list_span.1,
            reason: "parameter name without a type",
        });
    }
    Ok(out)
}

fn starts_type(src: &str, t: &Token) -> bool {
    match t.kind {
        TokenKind::Ident => {
            let s = t.text(src);
            !golex::is_keyword(s) || matches!(s, "map" | "chan" | "func" | "struct" | "interface")
        }
        TokenKind::Op => matches!(t.text(src), "*" | "[" | "(" | "<-" | "..."),
        _ => false,
    }
}

/// Index just past the type expression starting at `i`.
pub(crate) fn type_end(src: &str, toks: &[Token], i: usize) -> Option<usize> {
    let t = toks.get(i)?;
    let close = |j: usize| golex::matching_close(src, toks, j);
    match (t.kind, t.text(src)) {
        (TokenKind::Op, "*" | "...") => type_end(src, toks, i + 1),
        (TokenKind::Op, "[") => type_end(src, toks, close(i)? + 1),
        (TokenKind::Op, "(") => Some(close(i)? + 1),
        (TokenKind::Op, "<-") => type_end(src, toks, i + 1),
        (TokenKind::Ident, "map") => {
            if !toks.get(i + 1)?.is_op(src, "[") {
                return None;
            }
            type_end(src, toks, close(i + 1)? + 1)
        }
        (TokenKind::Ident, "chan") => {
            let j = if toks.get(i + 1).is_some_and(|n| n.is_op(src, "<-")) { i + 2 } else { i + 1 };
            type_end(src, toks, j)
        }
        (TokenKind::Ident, "func") => {
            if !toks.get(i + 1)?.is_op(src, "(") {
                return None;
            }
            let j = close(i + 1)? + 1;
            match toks.get(j) {
                Some(n) if n.is_op(src, "(") => Some(close(j)? + 1),
                Some(n) if starts_type(src, n) => type_end(src, toks, j),
                _ => Some(j),
            }
        }
        (TokenKind::Ident, "struct" | "interface") => {
            if !toks.get(i + 1)?.is_op(src, "{") {
                return None;
            }
            Some(close(i + 1)? + 1)
        }
        (TokenKind::Ident, s) if !golex::is_keyword(s) => {
            let mut j = i + 1;
            if toks.get(j).is_some_and(|n| n.is_op(src, "."))
                && toks.get(j + 1).is_some_and(|n| n.kind == TokenKind::Ident)
            {
                j += 2;
            }
            if let Some(n) = toks.get(j) {
                if n.is_op(src, "[") && n.start == toks[j - 1].end {
                    j = close(j)? + 1;
                }
            }
            Some(j)
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(name: Option<&str>, ty: &str, ids: &[&str]) -> Param {
        Param {
            name: name.map(str::to_string),
            type_text: ty.to_string(),
            type_identifiers: ids.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn method_with_variadic_and_no_results() {
        let sig =
            parse_signature("func (c *Context) String(code int, format string, values ...any)")
                .unwrap();
        assert_eq!(sig.kind, FocalKind::Method);
        assert_eq!(sig.name, "String");
        assert_eq!(sig.receiver_type.as_deref(), Some("Context"));
        assert_eq!(
            sig.params,
            vec![
                p(Some("code"), "int", &["int"]),
                p(Some("format"), "string", &["string"]),
                p(Some("values"), "...any", &["any"]),
            ]
        );
        assert!(sig.returns.is_empty());
    }

    #[test]
    fn grouped_parameters_expand() {
        let sig = parse_signature("func Add(a, b int) int { return a + b }").unwrap();
        assert_eq!(sig.kind, FocalKind::Function);
        assert_eq!(sig.params, vec![p(Some("a"), "int", &["int"]), p(Some("b"), "int", &["int"])]);
        assert_eq!(sig.returns.len(), 1);
        assert_eq!(sig.returns[0].type_text, "int");
    }

    #[test]
    fn unnamed_params_and_qualified_types() {
        let sig = parse_signature("func H(http.ResponseWriter, *http.Request) (int, error)").unwrap();
        assert_eq!(
            sig.params,
            vec![
                p(None, "http.ResponseWriter", &["ResponseWriter"]),
                p(None, "*http.Request", &["Request"]),
            ]
        );
        let rets: Vec<_> = sig.returns.iter().map(|r| r.type_text.as_str()).collect();
        assert_eq!(rets, ["int", "error"]);
    }

    #[test]
    fn pointer_receiver_with_type_args() {
        let sig = parse_signature("func (s *Set[K]) Has(k K) bool { return false }").unwrap();
        assert_eq!(sig.receiver_type.as_deref(), Some("Set"));
    }

    #[test]
    fn generic_function_records_type_params() {
        let sig = parse_signature("func Map[T any, U comparable](xs []T, f func(T) U) []U {}").unwrap();
        assert_eq!(sig.type_params.as_deref(), Some("[T any, U comparable]"));
        assert_eq!(sig.type_param_names, ["T", "U"]);
        assert_eq!(sig.params[1].type_text, "func(T) U");
        assert_eq!(sig.returns[0].type_identifiers, ["U"]);
    }

    #[test]
    fn results_with_brace_types() {
        let sig = parse_signature("func F() interface{ M() } { return nil }").unwrap();
        assert_eq!(sig.returns[0].type_text, "interface{ M() }");
        let sig = parse_signature("func G() func() int { return nil }").unwrap();
        assert_eq!(sig.returns[0].type_text, "func() int");
        let sig = parse_signature("func K() map[string][]Item {}").unwrap();
        assert_eq!(sig.returns[0].type_identifiers, ["string", "Item"]);
    }

    #[test]
    fn named_results_keep_types_only() {
        let sig = parse_signature("func (s *Stack) Pop() (v Item, ok bool) {}").unwrap();
        let rets: Vec<_> = sig.returns.iter().map(|r| r.type_text.as_str()).collect();
        assert_eq!(rets, ["Item", "bool"]);
    }

    #[test]
    fn errors_name_the_offending_span() {
        assert_eq!(parse_signature("var x = 1"), Err(SignatureError::NotAFunc));
        assert!(matches!(
            parse_signature("func Broken(a int"),
            Err(SignatureError::Unbalanced { start: 11, .. })
        ));
        assert!(matches!(
            parse_signature("func (a int)"),
            Err(SignatureError::MissingParams { .. }) | Err(SignatureError::MissingName { .. })
        ));
        assert!(matches!(
            parse_signature("func () {}"),
            Err(SignatureError::BadParams { .. }) | Err(SignatureError::MissingName { .. })
        ));
        // Unnamed parameters of types `a` and `b`.
        assert!(parse_signature("func F(a, b) {}").is_ok());
    }
}
