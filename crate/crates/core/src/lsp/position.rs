//! Byte offsets <-> protocol positions (0-based line, UTF-16 code units).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourcePosition {
    pub line: u32,
    pub character: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PositionError {
    #[error("byte offset {offset} is past the end of the text ({len} bytes)")]
    OutOfRange { offset: usize, len: usize },
    #[error("byte offset {0} is not on a character boundary")]
    MidCharacter(usize),
    #[error("line {0} does not exist")]
    NoSuchLine(u32),
    #[error("character {character} is past the end of line {line}")]
    PastLineEnd { line: u32, character: u32 },
}

/// Protocol position of `byte_offset` within `text`.
pub fn utf16_position(text: &str, byte_offset: usize) -> Result<SourcePosition, PositionError> {
    if byte_offset > text.len() {
        return Err(PositionError::OutOfRange { offset: byte_offset, len: text.len() });
    }
    if !text.is_char_boundary(byte_offset) {
        return Err(PositionError::MidCharacter(byte_offset));
    }
    let before = &text[..byte_offset];
    let line_start = before.rfind('\n').map_or(0, |n| n + 1);
    let line = before.bytes().filter(|&b| b == b'\n').count() as u32;
    let character = before[line_start..].encode_utf16().count() as u32;
    Ok(SourcePosition { line, character })
}

/// Byte offset of a protocol position. A character index past the end of
/// the line is an error; one landing inside a surrogate pair is rounded
/// down to the start of that character.
pub fn byte_offset(text: &str, pos: SourcePosition) -> Result<usize, PositionError> {
    let mut line_start = 0;
    for _ in 0..pos.line {
        match text[line_start..].find('\n') {
            Some(n) => line_start += n + 1,
            None => return Err(PositionError::NoSuchLine(pos.line)),
        }
    }
    let line_end = text[line_start..].find('\n').map_or(text.len(), |n| line_start + n);
    let mut units = 0u32;
    for (i, c) in text[line_start..line_end].char_indices() {
        let w = c.len_utf16() as u32;
        if units + w > pos.character {
            return Ok(line_start + i);
        }
        units += w;
    }
    if units == pos.character {
        Ok(line_end)
    } else {
        Err(PositionError::PastLineEnd { line: pos.line, character: pos.character })
    }
}
