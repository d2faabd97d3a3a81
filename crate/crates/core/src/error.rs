//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by indexing, retrieval, and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("path not indexed: {0}")]
    UnknownPath(String),

    #[error("no MODULE node for path: {0}")]
    MissingModule(String),

    #[error("relation endpoint not found: {relation} {endpoint} (record {index})")]
    DanglingEndpoint {
        relation: String,
        endpoint: String,
        index: usize,
    },

    #[error("conflicting duplicate node id: {0}")]
    ConflictingNode(String),

    #[error("schema violation in {path} at record {index}: {message}")]
    FactsSchema {
        path: String,
        index: usize,
        message: String,
    },

    #[error("corrupt file {path} at line {line}, column {column} (byte offset {offset}): {message}")]
    Corrupt {
        path: String,
        line: usize,
        column: usize,
        offset: usize,
        message: String,
    },

    #[error("cursor line {line} out of range 1..={max} for {path}")]
    CursorOutOfRange { path: String, line: u32, max: u32 },

    #[error("no files indexed")]
    NoFilesIndexed,

    #[error("oracle table has no score for item: {0}")]
    OracleMissing(String),

    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),

    #[error("{0}")]
    Eval(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wrap a serde_json error with the byte offset it points at, computed
    /// from the parsed input.
    pub fn corrupt(path: &str, input: &str, err: &serde_json::Error) -> Error {
        let line = err.line();
        let column = err.column();
        let offset = byte_offset(input, line, column);
        Error::Corrupt {
            path: path.to_string(),
            line,
            column,
            offset,
            message: err.to_string(),
        }
    }
}

fn byte_offset(input: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut offset = 0usize;
    for (idx, l) in input.split('\n').enumerate() {
        if idx + 1 == line {
            return offset + column.saturating_sub(1).min(l.len());
        }
        offset += l.len() + 1;
    }
    input.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corrupt_error_reports_byte_offset() {
        let input = "{\"nodes\": [\n  broken\n]}";
        let err = serde_json::from_str::<serde_json::Value>(input).unwrap_err();
        let wrapped = Error::corrupt("graph.json", input, &err);
        match wrapped {
            Error::Corrupt { line, offset, .. } => {
                assert_eq!(line, 2);
                // offset points into the second line
                assert!(offset >= input.find('\n').unwrap());
            }
            other => panic!("unexpected error: {other:?}"),
        }
    }
}
