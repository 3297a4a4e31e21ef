use thiserror::Error;

/// Errors surfaced to callers. Precondition violations inside the event loop
/// (scheduling into the past, unicast to a non-neighbor) panic instead.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("site generation gave up after {attempts} rejections (cr={cr} too large for the field?)")]
    SiteGeneration { attempts: u64, cr: f64 },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("refusing to overwrite `{0}` (pass --force)")]
    WouldOverwrite(String),

    #[error("invariant violated (seed {seed}): {detail}")]
    Invariant { seed: u64, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn parse(line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            line,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
