use thiserror::Error;

/// Scenario and parameter errors. Maps to exit code 2 in the CLI.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{field}: {message}")]
    Invariant { field: String, message: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

impl ConfigError {
    pub fn invariant(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invariant { field: field.into(), message: message.into() }
    }
}

/// Errors raised while planning or simulating.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("transfer did not complete before the grid horizon ({horizon_s} s); unfinished: {}", brief(unfinished))]
    NonCompletion { horizon_s: f64, unfinished: Vec<String> },
    #[error("inter-orbit path cannot cover orbits {missing:?}")]
    Coverage { missing: Vec<usize> },
    #[error("topology invariant violated: {0}")]
    Topology(String),
}

fn brief(items: &[String]) -> String {
    const SHOWN: usize = 6;
    let mut s = items.iter().take(SHOWN).cloned().collect::<Vec<_>>().join(", ");
    if items.len() > SHOWN {
        s.push_str(&format!(" and {} more", items.len() - SHOWN));
    }
    s
}
