//! Language Server Protocol client used to fetch definitions and
//! documentation comments for identifiers.

mod client;
mod fetch;
mod position;
mod transport;

pub use client::{
    path_to_uri, resolve_executable, uri_to_path, Location, LspError, ServerConfig, ServerHandle,
    DEFAULT_REQUEST_TIMEOUT, DEFAULT_STARTUP_TIMEOUT,
};
pub use fetch::{
    extract_definition, fetch_identifier_context, ContextEntry, DefinitionLocation, ExtractedDefinition,
    FetchOptions,
};
pub(crate) use fetch::{fetch_at, word_end_position, workspace_file};
pub use position::{byte_offset, utf16_position, PositionError, SourcePosition};
pub use transport::{read_message, write_message, TransportError};
