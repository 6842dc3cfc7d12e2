use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ProviderErrorKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    Done,
    Error,
}

/// One scripted provider response, keyed by request fingerprint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fixture {
    pub fingerprint: String,
    pub chunks: Vec<String>,
    pub terminal: Terminal,
    /// Sleep before each chunk; missing entries mean no delay.
    #[serde(default)]
    pub delays_ms: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Kind reported on replay; `scripted` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_kind: Option<ProviderErrorKind>,
}

impl Fixture {
    pub fn done(fingerprint: impl Into<String>, chunks: &[&str]) -> Self {
        Self {
            fingerprint: fingerprint.into(),
            chunks: chunks.iter().map(|c| c.to_string()).collect(),
            terminal: Terminal::Done,
            delays_ms: Vec::new(),
            error: None,
            error_kind: None,
        }
    }

    pub fn failing(fingerprint: impl Into<String>, chunks: &[&str], message: &str) -> Self {
        Self {
            terminal: Terminal::Error,
            error: Some(message.to_string()),
            ..Self::done(fingerprint, chunks)
        }
    }

    pub fn with_delays(mut self, delays_ms: Vec<u64>) -> Self {
        self.delays_ms = delays_ms;
        self
    }

    pub fn text(&self) -> String {
        self.chunks.concat()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("reading fixtures: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing fixtures: {0}")]
    Json(#[from] serde_json::Error),
    #[error("fixture {index} has an empty fingerprint")]
    EmptyFingerprint { index: usize },
}

pub fn read_fixtures(path: impl AsRef<Path>) -> Result<Vec<Fixture>, FixtureError> {
    let fixtures: Vec<Fixture> = serde_json::from_slice(&std::fs::read(path)?)?;
    if let Some(index) = fixtures.iter().position(|f| f.fingerprint.is_empty()) {
        return Err(FixtureError::EmptyFingerprint { index });
    }
    Ok(fixtures)
}

pub fn write_fixtures(path: impl AsRef<Path>, fixtures: &[Fixture]) -> Result<(), FixtureError> {
    let mut json = serde_json::to_vec_pretty(fixtures)?;
    json.push(b'\n');
    std::fs::write(path, json)?;
    Ok(())
}
