//! `Content-Length` framing of JSON-RPC messages.

use std::io::{self, BufRead, Write};

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("transport i/o: {0}")]
    Io(#[from] io::Error),
    #[error("message without Content-Length header")]
    MissingContentLength,
    #[error("malformed header line {0:?}")]
    BadHeader(String),
    #[error("message body is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub fn write_message<W: Write>(w: &mut W, body: &Value) -> io::Result<()> {
    let bytes = serde_json::to_vec(body)?;
    write!(w, "Content-Length: {}\r\n\r\n", bytes.len())?;
    w.write_all(&bytes)?;
    w.flush()
}

/// Read one message. `Ok(None)` on a clean end of stream between messages.
pub fn read_message<R: BufRead>(r: &mut R) -> Result<Option<Value>, TransportError> {
    let mut length = None;
    let mut saw_header = false;
    loop {
        let mut line = String::new();
        if r.read_line(&mut line)? == 0 {
            if saw_header {
                return Err(io::Error::from(io::ErrorKind::UnexpectedEof).into());
            }
            return Ok(None);
        }
        let line = line.trim_end_matches(['\r', '\n']);
        if line.is_empty() {
            if saw_header {
                break;
            }
            continue;
        }
        saw_header = true;
        let (name, value) = line
            .split_once(':')
            .ok_or_else(|| TransportError::BadHeader(line.to_string()))?;
        if name.trim().eq_ignore_ascii_case("content-length") {
            let n = value
                .trim()
                .parse::<usize>()
                .map_err(|_| TransportError::BadHeader(line.to_string()))?;
            length = Some(n);
        }
    }
    let n = length.ok_or(TransportError::MissingContentLength)?;
    let mut body = vec![0u8; n];
    r.read_exact(&mut body)?;
    Ok(Some(serde_json::from_slice(&body)?))
}
