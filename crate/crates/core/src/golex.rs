//! Lexical scanner for Go source.
//!
//! Produces a flat token stream with byte spans, including the automatic
//! semicolons the Go grammar inserts at line ends. It understands comments,
//! interpreted/raw string literals, rune literals and number literals, which
//! is all the declaration scanner, the mutator and the test assembler need.

use thiserror::Error;

/// The 25 Go keywords.
pub const KEYWORDS: [&str; 25] = [
    "break",
    "case",
    "chan",
    "const",
    "continue",
    "default",
    "defer",
    "else",
    "fallthrough",
    "for",
    "func",
    "go",
    "goto",
    "if",
    "import",
    "interface",
    "map",
    "package",
    "range",
    "return",
    "select",
    "struct",
    "switch",
    "type",
    "var",
];

/// Predeclared identifiers of the Go 1.21 universe block: types, constants,
/// the zero value `nil`, and builtin functions.
pub const PREDECLARED: [&str; 44] = [
    // types
    "any",
    "bool",
    "byte",
    "comparable",
    "complex64",
    "complex128",
    "error",
    "float32",
    "float64",
    "int",
    "int8",
    "int16",
    "int32",
    "int64",
    "rune",
    "string",
    "uint",
    "uint8",
    "uint16",
    "uint32",
    "uint64",
    "uintptr",
    // constants
    "true",
    "false",
    "iota",
    // zero value
    "nil",
    // functions
    "append",
    "cap",
    "clear",
    "close",
    "complex",
    "copy",
    "delete",
    "imag",
    "len",
    "make",
    "max",
    "min",
    "new",
    "panic",
    "print",
    "println",
    "real",
    "recover",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

pub fn is_predeclared(s: &str) -> bool {
    PREDECLARED.contains(&s)
}

/// Letter per Go's lexical grammar: a Unicode letter or `_`.
pub fn is_letter(c: char) -> bool {
    c == '_' || c.is_alphabetic()
}

pub fn is_digit(c: char) -> bool {
    c.is_numeric()
}

pub fn is_ident_char(c: char) -> bool {
    is_letter(c) || is_digit(c)
}

/// True if `s` is lexically a Go identifier (keywords included).
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if is_letter(c) => chars.all(is_ident_char),
        _ => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Number,
    String,
    RawString,
    Rune,
    Comment,
    Op,
    /// Explicit `;` or one inserted at a line end.
    Semi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        &src[self.start..self.end]
    }

    pub fn is_op(&self, src: &str, op: &str) -> bool {
        self.kind == TokenKind::Op && self.text(src) == op
    }

    pub fn is_ident(&self, src: &str, name: &str) -> bool {
        self.kind == TokenKind::Ident && self.text(src) == name
    }

    /// Automatic semicolon (zero width) rather than a written `;`.
    pub fn is_auto_semi(&self) -> bool {
        self.kind == TokenKind::Semi && self.start == self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("unterminated string literal starting at byte {0}")]
    UnterminatedString(usize),
    #[error("unterminated raw string literal starting at byte {0}")]
    UnterminatedRawString(usize),
    #[error("unterminated rune literal starting at byte {0}")]
    UnterminatedRune(usize),
    #[error("unterminated block comment starting at byte {0}")]
    UnterminatedComment(usize),
    #[error("unexpected character {1:?} at byte {0}")]
    UnexpectedChar(usize, char),
}

impl LexError {
    pub fn offset(&self) -> usize {
        match *self {
            LexError::UnterminatedString(o)
            | LexError::UnterminatedRawString(o)
            | LexError::UnterminatedRune(o)
            | LexError::UnterminatedComment(o)
            | LexError::UnexpectedChar(o, _) => o,
        }
    }
}

const OPERATORS: [&str; 48] = [
    "<<=", ">>=", "&^=", "...", "&&", "||", "<-", "++", "--", "==", "!=", "<=", ">=", ":=", "+=",
    "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "&^", "+", "-", "*", "/", "%", "&", "|",
    "^", "<", ">", "=", "!", "(", ")", "[", "]", "{", "}", ",", ".", ":", "~", "?",
];

fn ends_statement(src: &str, tok: &Token) -> bool {
    match tok.kind {
        TokenKind::Ident => {
            let t = tok.text(src);
            !is_keyword(t) || matches!(t, "break" | "continue" | "fallthrough" | "return")
        }
        TokenKind::Number | TokenKind::String | TokenKind::RawString | TokenKind::Rune => true,
        TokenKind::Op => matches!(tok.text(src), ")" | "]" | "}" | "++" | "--"),
        TokenKind::Comment | TokenKind::Semi => false,
    }
}

/// Tokenize `src`, keeping comments and inserting automatic semicolons.
pub fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    let bytes = src.as_bytes();
    let mut out: Vec<Token> = Vec::new();
    let mut last_sig: Option<Token> = None;
    let mut i = 0;

    let newline = |out: &mut Vec<Token>, last_sig: &mut Option<Token>, at: usize| {
        if let Some(t) = last_sig.take() {
            if ends_statement(src, &t) {
                out.push(Token { kind: TokenKind::Semi, start: at, end: at });
            }
        }
    };

    while i < bytes.len() {
        let c = src[i..].chars().next().unwrap();
        match c {
            '\n' => {
                newline(&mut out, &mut last_sig, i);
                i += 1;
            }
            ' ' | '\t' | '\r' | '\u{feff}' => i += c.len_utf8(),
            '/' if bytes.get(i + 1) == Some(&b'/') => {
                let end = src[i..].find('\n').map_or(src.len(), |n| i + n);
                out.push(Token { kind: TokenKind::Comment, start: i, end });
                i = end;
            }
            '/' if bytes.get(i + 1) == Some(&b'*') => {
                let close = src[i + 2..]
                    .find("*/")
                    .ok_or(LexError::UnterminatedComment(i))?;
                let end = i + 2 + close + 2;
                let has_newline = src[i..end].contains('\n');
                out.push(Token { kind: TokenKind::Comment, start: i, end });
                if has_newline {
                    newline(&mut out, &mut last_sig, i);
                }
                i = end;
            }
            '"' => {
                let start = i;
                i += 1;
                loop {
                    match bytes.get(i) {
                        None | Some(b'\n') => return Err(LexError::UnterminatedString(start)),
                        Some(b'\\') => i += 2,
                        Some(b'"') => {
                            i += 1;
                            break;
                        }
                        Some(_) => i += 1,
                    }
                }
                let t = Token { kind: TokenKind::String, start, end: i };
                out.push(t);
                last_sig = Some(t);
            }
            '`' => {
                let start = i;
                let close = src[i + 1..]
                    .find('`')
                    .ok_or(LexError::UnterminatedRawString(start))?;
                i = i + 1 + close + 1;
                let t = Token { kind: TokenKind::RawString, start, end: i };
                out.push(t);
                last_sig = Some(t);
            }
            '\'' => {
                let start = i;
                i += 1;
                loop {
                    match bytes.get(i) {
                        None | Some(b'\n') => return Err(LexError::UnterminatedRune(start)),
                        Some(b'\\') => i += 2,
                        Some(b'\'') => {
                            i += 1;
                            break;
                        }
                        Some(_) => i += 1,
                    }
                }
                let t = Token { kind: TokenKind::Rune, start, end: i };
                out.push(t);
                last_sig = Some(t);
            }
            ';' => {
                let t = Token { kind: TokenKind::Semi, start: i, end: i + 1 };
                out.push(t);
                last_sig = Some(t);
                i += 1;
            }
            c if c.is_ascii_digit()
                || (c == '.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) =>
            {
                let start = i;
                i = scan_number(src, i);
                let t = Token { kind: TokenKind::Number, start, end: i };
                out.push(t);
                last_sig = Some(t);
            }
            c if is_letter(c) => {
                let start = i;
                let end = src[i..]
                    .char_indices()
                    .find(|&(_, ch)| !is_ident_char(ch))
                    .map_or(src.len(), |(n, _)| i + n);
                i = end;
                let t = Token { kind: TokenKind::Ident, start, end };
                out.push(t);
                last_sig = Some(t);
            }
            _ => {
                let op = OPERATORS
                    .iter()
                    .find(|op| src[i..].starts_with(**op))
                    .ok_or(LexError::UnexpectedChar(i, c))?;
                let t = Token { kind: TokenKind::Op, start: i, end: i + op.len() };
                out.push(t);
                last_sig = Some(t);
                i += op.len();
            }
        }
    }
    newline(&mut out, &mut last_sig, src.len());
    Ok(out)
}

fn scan_number(src: &str, start: usize) -> usize {
    let bytes = src.as_bytes();
    let hex = src[start..].starts_with("0x") || src[start..].starts_with("0X");
    let mut i = start;
    while i < bytes.len() {
        let b = bytes[i];
        if b.is_ascii_alphanumeric() || b == b'_' || b == b'.' {
            i += 1;
        } else if (b == b'+' || b == b'-') && i > start {
            let prev = bytes[i - 1].to_ascii_lowercase();
            if prev == b'p' || (prev == b'e' && !hex) {
                i += 1;
            } else {
                break;
            }
        } else {
            break;
        }
    }
    i
}

/// Tokens without comments.
pub fn significant(tokens: &[Token]) -> Vec<Token> {
    tokens
        .iter()
        .copied()
        .filter(|t| t.kind != TokenKind::Comment)
        .collect()
}

/// Index of the token closing the bracket opened at `open`, over a token
/// slice without comments. Tracks `()`, `[]` and `{}` together.
pub fn matching_close(src: &str, tokens: &[Token], open: usize) -> Option<usize> {
    let mut stack: Vec<&str> = Vec::new();
    for (idx, t) in tokens.iter().enumerate().skip(open) {
        if t.kind != TokenKind::Op {
            continue;
        }
        match t.text(src) {
            "(" => stack.push(")"),
            "[" => stack.push("]"),
            "{" => stack.push("}"),
            close @ (")" | "]" | "}") => {
                if stack.pop() != Some(close) {
                    return None;
                }
                if stack.is_empty() {
                    return Some(idx);
                }
            }
            _ => {}
        }
    }
    None
}

/// 1-based line number of a byte offset.
pub fn line_of(src: &str, offset: usize) -> usize {
    src.as_bytes()[..offset.min(src.len())]
        .iter()
        .filter(|&&b| b == b'\n')
        .count()
        + 1
}
