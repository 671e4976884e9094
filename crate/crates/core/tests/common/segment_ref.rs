//! Brute-force identifier scanner and random token streams for checking
//! the streaming segmenter.

use proptest::prelude::*;

pub fn letter(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

pub fn ident_part(c: char) -> bool {
    letter(c) || c.is_numeric()
}

/// One pass over the whole text, skipping literal and comment bodies
/// wholesale. Identifiers still open at the end are pending, not flushed.
pub fn reference_identifiers(text: &str) -> Vec<String> {
    let c: Vec<char> = text.chars().collect();
    let n = c.len();
    let mut out = Vec::new();
    let mut i = 0;
    // Skip past a quoted literal starting at `i`; backslash escapes one char.
    let skip_quoted = |mut i: usize, q: char| {
        i += 1;
        while i < n {
            if c[i] == '\\' {
                i += 2;
                continue;
            }
            if c[i] == q || c[i] == '\n' {
                return i + 1;
            }
            i += 1;
        }
        n
    };
    while i < n {
        let ch = c[i];
        if letter(ch) {
            let start = i;
            while i < n && ident_part(c[i]) {
                i += 1;
            }
            if i < n {
                out.push(c[start..i].iter().collect());
            }
            continue;
        }
        match ch {
            '"' | '\'' => i = skip_quoted(i, ch),
            '`' => i = c[i + 1..].iter().position(|&x| x == '`').map_or(n, |p| i + 1 + p + 1),
            '/' if c.get(i + 1) == Some(&'/') => i = c[i..].iter().position(|&x| x == '\n').map_or(n, |p| i + p + 1),
            '/' if c.get(i + 1) == Some(&'*') => {
                let body = i + 2;
                i = (body..n.saturating_sub(1)).find(|&k| c[k] == '*' && c[k + 1] == '/').map_or(n, |k| k + 2);
            }
            _ => i += 1,
        }
    }
    out
}

const ALPHABET: &[&str] = &[
    "a", "b", "x", "Z", "_", "é", "π", "0", "7", "e", ".", "(", ")", "{", "}", "[", "]", " ", "\n", "\t", "\"", "'",
    "`", "/", "*", "\\", ",", ":=", "+",
];

fn text_strategy() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(ALPHABET), 0..120).prop_map(|v| v.concat())
}

/// Random Go-like text split into non-empty chunks at char boundaries.
pub fn token_streams() -> impl Strategy<Value = Vec<String>> {
    (text_strategy(), prop::collection::vec(1usize..6, 1..200)).prop_map(|(text, sizes)| {
        let chars: Vec<char> = text.chars().collect();
        let mut out = Vec::new();
        let mut i = 0;
        let mut k = 0;
        while i < chars.len() {
            let len = sizes[k % sizes.len()].min(chars.len() - i);
            out.push(chars[i..i + len].iter().collect());
            i += len;
            k += 1;
        }
        out
    })
}
