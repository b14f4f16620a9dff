//! Problem-file formats, report writing and the subcommands behind the
//! `pep` binary.

pub mod commands;
pub mod format;
pub mod report;

use std::fmt;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const PARSE: i32 = 2;
    pub const UNSUPPORTED_FIELD: i32 = 3;
    pub const CAP: i32 = 4;
    pub const DIAGNOSTIC: i32 = 5;
}

#[derive(Debug)]
pub enum CliError {
    Io { path: String, source: std::io::Error },
    Parse { path: String, line: usize, column: usize, message: String },
    /// Well-formed JSON that does not describe a valid problem.
    Schema(String),
    Overflow(String),
    Core(pep_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use pep_core::Error as E;
        match self {
            CliError::Io { .. } => exit::IO,
            CliError::Parse { .. } | CliError::Schema(_) => exit::PARSE,
            CliError::Overflow(_) => exit::CAP,
            CliError::Core(e) => match e {
                E::UnsupportedField(_) => exit::UNSUPPORTED_FIELD,
                E::Cap { .. } | E::Factorization(_) => exit::CAP,
                E::UnitRelations | E::Diagnostic(_) => exit::DIAGNOSTIC,
                E::IncompatibleFields
                | E::ZeroBase
                | E::DivisionByZero
                | E::Shape(_)
                | E::Precondition(_)
                | E::Singular
                | E::Certificate(_) => exit::PARSE,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io { path, source } => write!(f, "{path}: {source}"),
            CliError::Parse { path, line, column, message } => write!(f, "{path}:{line}:{column}: {message}"),
            CliError::Schema(m) => write!(f, "invalid problem: {m}"),
            CliError::Overflow(what) => write!(f, "{what} does not fit in 64 bits"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<pep_core::Error> for CliError {
    fn from(e: pep_core::Error) -> Self {
        CliError::Core(e)
    }
}
