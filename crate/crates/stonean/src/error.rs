use std::path::PathBuf;

use stonean_core::logic::ParseError;

/// Anything wrong with the input rather than with the mathematics. The
/// command line maps these to exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("`{name}` is {found}, expected {expected}")]
    WrongKind {
        name: String,
        expected: &'static str,
        found: &'static str,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{origin}: malformed JSON at line {line}, column {column}: {message}")]
    Json {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{origin}: {message}")]
    Schema { origin: String, message: String },
    #[error("grammar error: {kind} at column {column}\n  {source_text}\n  {caret}")]
    Grammar {
        kind: String,
        column: usize,
        source_text: String,
        caret: String,
    },
    #[error("{context}: {source}")]
    Core {
        context: String,
        source: stonean_core::Error,
    },
}

pub type Result<T, E = InputError> = std::result::Result<T, E>;

impl InputError {
    pub(crate) fn schema(origin: &str, message: impl Into<String>) -> Self {
        InputError::Schema {
            origin: origin.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn json(origin: &str, e: &serde_json::Error) -> Self {
        if e.line() == 0 {
            return InputError::schema(origin, e.to_string());
        }
        InputError::Json {
            origin: origin.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }

    /// A formula error with a caret under the offending character.
    pub fn grammar(src: &str, e: &ParseError) -> Self {
        let column = e.pos + 1;
        InputError::Grammar {
            kind: e.kind.to_string(),
            column,
            source_text: src.to_string(),
            caret: format!("{}^", " ".repeat(column - 1)),
        }
    }
}

/// Attaches a context line to core errors.
pub(crate) trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T>;
}

impl<T> Context<T> for Result<T, stonean_core::Error> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|source| InputError::Core {
            context: what(),
            source,
        })
    }
}
