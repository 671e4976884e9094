//! Character-level identifier segmentation of a token stream.
//!
//! Generator tokens do not line up with Go identifiers, so identifiers are
//! accumulated one character at a time and flushed when an identifier run
//! ends. Text inside string, rune and comment literals never contributes.

use crate::golex;

/// Split `token` into maximal runs of identifier / non-identifier
/// characters. A digit can only continue an identifier: with an empty
/// buffer, a leading digit run is non-identifier text.
pub fn classify_chars(token: &str, buffer_empty: bool) -> Vec<(String, bool)> {
    let mut out: Vec<(String, bool)> = Vec::new();
    let mut in_ident = !buffer_empty;
    for c in token.chars() {
        let is_id = if in_ident { golex::is_ident_char(c) } else { golex::is_letter(c) };
        in_ident = is_id;
        match out.last_mut() {
            Some((s, flag)) if *flag == is_id => s.push(c),
            _ => out.push((c.to_string(), is_id)),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LexMode {
    #[default]
    Code,
    String { escaped: bool },
    RawString,
    Rune { escaped: bool },
    LineComment,
    BlockComment { star: bool },
}

/// An identifier that has just ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flushed {
    pub identifier: String,
    /// Byte offset (in the fed text) of its last character.
    pub last_char: usize,
}

/// Streaming segmenter over text fed in arbitrary chunks.
#[derive(Debug, Clone, Default)]
pub struct Segmenter {
    mode: LexMode,
    buffer: String,
    buffer_last: usize,
    prev_slash: bool,
    /// Open brackets in code, innermost last.
    open: Vec<char>,
    /// Byte offset just past the `}` that first emptied `open`.
    closed_at: Option<usize>,
    fed: usize,
}

impl Segmenter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn mode(&self) -> LexMode {
        self.mode
    }

    pub fn buffer(&self) -> &str {
        &self.buffer
    }

    /// Depth of `{` nesting.
    pub fn brace_depth(&self) -> usize {
        self.open.iter().filter(|&&c| c == '{').count()
    }

    pub fn open_brackets(&self) -> &[char] {
        &self.open
    }

    pub fn closed_at(&self) -> Option<usize> {
        self.closed_at
    }

    /// Total bytes fed so far.
    pub fn offset(&self) -> usize {
        self.fed
    }

    /// Feed the next chunk; returns the identifiers it completed.
    pub fn feed(&mut self, chunk: &str) -> Vec<Flushed> {
        let mut flushed = Vec::new();
        for (i, c) in chunk.char_indices() {
            let at = self.fed + i;
            self.step_char(c, at, &mut flushed);
        }
        self.fed += chunk.len();
        flushed
    }

    fn flush(&mut self, out: &mut Vec<Flushed>) {
        if !self.buffer.is_empty() {
            out.push(Flushed { identifier: std::mem::take(&mut self.buffer), last_char: self.buffer_last });
        }
    }

    fn step_char(&mut self, c: char, at: usize, out: &mut Vec<Flushed>) {
        match self.mode {
            LexMode::Code => {}
            LexMode::String { escaped } => {
                self.mode = match c {
                    _ if escaped => LexMode::String { escaped: false },
                    '\\' => LexMode::String { escaped: true },
                    '"' | '\n' => LexMode::Code,
                    _ => LexMode::String { escaped: false },
                };
                return;
            }
            LexMode::Rune { escaped } => {
                self.mode = match c {
                    _ if escaped => LexMode::Rune { escaped: false },
                    '\\' => LexMode::Rune { escaped: true },
                    '\'' | '\n' => LexMode::Code,
                    _ => LexMode::Rune { escaped: false },
                };
                return;
            }
            LexMode::RawString => {
                if c == '`' {
                    self.mode = LexMode::Code;
                }
                return;
            }
            LexMode::LineComment => {
                if c == '\n' {
                    self.mode = LexMode::Code;
                }
                return;
            }
            LexMode::BlockComment { star } => {
                self.mode = if star && c == '/' {
                    LexMode::Code
                } else {
                    LexMode::BlockComment { star: c == '*' }
                };
                return;
            }
        }

        let is_id = if self.buffer.is_empty() { golex::is_letter(c) } else { golex::is_ident_char(c) };
        if is_id {
            self.buffer.push(c);
            self.buffer_last = at;
            self.prev_slash = false;
            return;
        }
        self.flush(out);
        let after_slash = std::mem::replace(&mut self.prev_slash, false);
        match c {
            '"' => self.mode = LexMode::String { escaped: false },
            '`' => self.mode = LexMode::RawString,
            '\'' => self.mode = LexMode::Rune { escaped: false },
            '/' if after_slash => self.mode = LexMode::LineComment,
            '*' if after_slash => self.mode = LexMode::BlockComment { star: false },
            '/' => self.prev_slash = true,
            '(' | '[' | '{' => self.open.push(c),
            ')' | ']' | '}' => {
                let want = match c {
                    ')' => '(',
                    ']' => '[',
                    _ => '{',
                };
                // Pop to the matching opener; stray closers are ignored.
                if let Some(pos) = self.open.iter().rposition(|&o| o == want) {
                    self.open.truncate(pos);
                    if c == '}' && self.brace_depth() == 0 && self.closed_at.is_none() {
                        self.closed_at = Some(at + 1);
                    }
                }
            }
            _ => {}
        }
    }

    /// Text that would close every open literal, comment and bracket.
    pub fn closers(&self) -> String {
        let mut s = String::new();
        match self.mode {
            LexMode::Code => {}
            LexMode::String { escaped } => {
                if escaped {
                    s.push('\\');
                }
                s.push('"');
            }
            LexMode::Rune { escaped } => {
                if escaped {
                    s.push('\\');
                }
                s.push('\'');
            }
            LexMode::RawString => s.push('`'),
            LexMode::LineComment => {}
            LexMode::BlockComment { .. } => s.push_str(" */"),
        }
        for &o in self.open.iter().rev() {
            s.push('\n');
            s.push(match o {
                '(' => ')',
                '[' => ']',
                _ => '}',
            });
        }
        s
    }
}
