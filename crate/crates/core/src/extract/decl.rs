//! Top-level declaration boundaries of a Go file, found lexically.

use thiserror::Error;

use crate::golex::{self, LexError, Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeclKeyword {
    Package,
    Import,
    Func,
    Type,
    Var,
    Const,
}

/// A byte range `[start, end)`.
pub type Span = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecBlock {
    pub span: Span,
    pub doc: Option<Span>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeclBlock {
    pub keyword: DeclKeyword,
    pub span: Span,
    /// Contiguous comment block directly above the declaration.
    pub doc: Option<Span>,
    /// Individual specs of a parenthesized `type`/`var`/`const`/`import`
    /// group; empty for ungrouped declarations.
    pub specs: Vec<SpecBlock>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeclScanError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("unbalanced brackets in declaration starting at byte {0}")]
    Unbalanced(usize),
    #[error("unexpected top-level token {1:?} at byte {0}")]
    UnexpectedToken(usize, String),
}

/// Scan all top-level declarations of `src` in source order.
pub fn top_level_decls(src: &str) -> Result<Vec<DeclBlock>, DeclScanError> {
    let all = golex::tokenize(src)?;
    let comments: Vec<Token> = all.iter().copied().filter(|t| t.kind == TokenKind::Comment).collect();
    let toks = golex::significant(&all);

    let mut decls = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        if toks[i].kind == TokenKind::Semi {
            i += 1;
            continue;
        }
        let first = toks[i];
        let keyword = match first.text(src) {
            "package" if first.kind == TokenKind::Ident => DeclKeyword::Package,
            "import" if first.kind == TokenKind::Ident => DeclKeyword::Import,
            "func" if first.kind == TokenKind::Ident => DeclKeyword::Func,
            "type" if first.kind == TokenKind::Ident => DeclKeyword::Type,
            "var" if first.kind == TokenKind::Ident => DeclKeyword::Var,
            "const" if first.kind == TokenKind::Ident => DeclKeyword::Const,
            other => {
                return Err(DeclScanError::UnexpectedToken(first.start, other.to_string()));
            }
        };
        let end = decl_end(src, &toks, i)?;
        let last = toks[end - 1];
        let mut specs = Vec::new();
        if keyword != DeclKeyword::Func
            && keyword != DeclKeyword::Package
            && toks.get(i + 1).is_some_and(|t| t.is_op(src, "("))
        {
            let close = golex::matching_close(src, &toks, i + 1)
                .ok_or(DeclScanError::Unbalanced(first.start))?;
            specs = group_specs(src, &toks[i + 2..close], &comments);
        }
        decls.push(DeclBlock {
            keyword,
            span: (first.start, last.end),
            doc: doc_above(src, &comments, first.start),
            specs,
        });
        i = end;
    }
    Ok(decls)
}

/// Index one past the last token of the declaration starting at `i`: the
/// first depth-0 semicolon (or the end of input).
fn decl_end(src: &str, toks: &[Token], i: usize) -> Result<usize, DeclScanError> {
    let mut stack: Vec<&str> = Vec::new();
    for (j, t) in toks.iter().enumerate().skip(i) {
        match (t.kind, t.text(src)) {
            (TokenKind::Semi, _) if stack.is_empty() => return Ok(j),
            (TokenKind::Op, "(") => stack.push(")"),
            (TokenKind::Op, "[") => stack.push("]"),
            (TokenKind::Op, "{") => stack.push("}"),
            (TokenKind::Op, close @ (")" | "]" | "}")) if stack.pop() != Some(close) => {
                return Err(DeclScanError::Unbalanced(toks[i].start));
            }
            _ => {}
        }
    }
    if stack.is_empty() {
        Ok(toks.len())
    } else {
        Err(DeclScanError::Unbalanced(toks[i].start))
    }
}

fn group_specs(src: &str, body: &[Token], comments: &[Token]) -> Vec<SpecBlock> {
    let mut specs = Vec::new();
    let mut depth = 0i32;
    let mut begin: Option<usize> = None;
    for (k, t) in body.iter().enumerate() {
        match (t.kind, t.text(src)) {
            (TokenKind::Semi, _) if depth == 0 => {
                if let Some(b) = begin.take() {
                    specs.push((b, k));
                }
                continue;
            }
            (TokenKind::Op, "(" | "[" | "{") => depth += 1,
            (TokenKind::Op, ")" | "]" | "}") => depth -= 1,
            _ => {}
        }
        begin.get_or_insert(k);
    }
    if let Some(b) = begin {
        specs.push((b, body.len()));
    }
    specs
        .into_iter()
        .map(|(a, b)| SpecBlock {
            span: (body[a].start, body[b - 1].end),
            doc: doc_above(src, comments, body[a].start),
        })
        .collect()
}

fn starts_own_line(src: &str, offset: usize) -> bool {
    let line_start = src[..offset].rfind('\n').map_or(0, |n| n + 1);
    src[line_start..offset].trim().is_empty()
}

fn single_line_gap(gap: &str) -> bool {
    gap.trim().is_empty() && gap.matches('\n').count() == 1
}

/// The contiguous comment block ending on the line directly above `start`.
pub fn doc_above(src: &str, comments: &[Token], start: usize) -> Option<Span> {
    let idx = comments.iter().rposition(|c| c.end <= start)?;
    let last = comments[idx];
    if !single_line_gap(&src[last.end..start]) || !starts_own_line(src, last.start) {
        return None;
    }
    let mut first = last;
    for c in comments[..idx].iter().rev() {
        if single_line_gap(&src[c.end..first.start]) && starts_own_line(src, c.start) {
            first = *c;
        } else {
            break;
        }
    }
    Some((first.start, last.end))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SRC: &str = "// Package p.\npackage p\n\nimport (\n\t\"fmt\"\n)\n\n// T doc.\ntype T struct {\n\tx int\n}\n\nvar f = func() {\n\tfmt.Println()\n}\n\ntype (\n\t// A doc.\n\tA int\n\tB string\n)\n\n/* F doc */\nfunc F() {}\n\nfunc (t T) M() int { return t.x } // trailing\nfunc G()\n";

    #[test]
    fn finds_each_declaration() {
        let decls = top_level_decls(SRC).unwrap();
        let kinds: Vec<_> = decls.iter().map(|d| d.keyword).collect();
        use DeclKeyword::*;
        assert_eq!(kinds, [Package, Import, Type, Var, Type, Func, Func, Func]);
        let texts: Vec<_> = decls.iter().map(|d| &SRC[d.span.0..d.span.1]).collect();
        assert_eq!(texts[5], "func F() {}");
        assert_eq!(texts[6], "func (t T) M() int { return t.x }");
        assert_eq!(texts[7], "func G()");
        assert!(texts[3].ends_with("fmt.Println()\n}"));
    }

    #[test]
    fn doc_comments_attach_only_when_adjacent() {
        let decls = top_level_decls(SRC).unwrap();
        let doc = |i: usize| decls[i].doc.map(|(a, b)| &SRC[a..b]);
        assert_eq!(doc(0), Some("// Package p."));
        assert_eq!(doc(1), None);
        assert_eq!(doc(2), Some("// T doc."));
        assert_eq!(doc(5), Some("/* F doc */"));
        assert_eq!(doc(6), None);
        // the trailing comment of M sits on M's line, not above G
        assert_eq!(doc(7), None);
    }

    #[test]
    fn grouped_specs_carry_their_own_docs() {
        let decls = top_level_decls(SRC).unwrap();
        let group = &decls[4];
        assert_eq!(group.specs.len(), 2);
        let s0 = &group.specs[0];
        assert_eq!(&SRC[s0.span.0..s0.span.1], "A int");
        assert_eq!(s0.doc.map(|(a, b)| &SRC[a..b]), Some("// A doc."));
        assert_eq!(group.specs[1].doc, None);
    }

    #[test]
    fn unbalanced_declaration_is_an_error() {
        assert_eq!(
            top_level_decls("package p\nfunc F() {\n"),
            Err(DeclScanError::Unbalanced(10))
        );
    }
}
