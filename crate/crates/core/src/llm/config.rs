use std::fmt;

use serde::{Deserialize, Serialize};

pub const ENV_API_KEY: &str = "MARGINALIA_API_KEY";
pub const ENV_ENDPOINT: &str = "MARGINALIA_ENDPOINT";
pub const ENV_MODEL: &str = "MARGINALIA_MODEL";

pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo";
pub const DEFAULT_CONTEXT_BUDGET: usize = 8_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("no API credential configured; set {ENV_API_KEY}")]
    MissingCredential,
    #[error("context budget must be positive")]
    ZeroBudget,
    #[error("invalid endpoint URL `{0}`")]
    BadEndpoint(String),
}

/// An API key. Never printed, never serialized.
#[derive(Clone, PartialEq, Eq)]
pub struct Secret(String);

impl Secret {
    pub fn new(value: impl Into<String>) -> Self {
        Self(value.into())
    }

    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Secret(***)")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub endpoint: String,
    pub model: String,
    #[serde(skip)]
    pub api_key: Option<Secret>,
    pub context_budget_chars: usize,
    pub timeout_secs: u64,
    pub retries: u32,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            endpoint: DEFAULT_ENDPOINT.to_string(),
            model: DEFAULT_MODEL.to_string(),
            api_key: None,
            context_budget_chars: DEFAULT_CONTEXT_BUDGET,
            timeout_secs: 30,
            retries: 2,
        }
    }
}

impl ProviderConfig {
    /// Defaults overridden by `MARGINALIA_API_KEY`, `MARGINALIA_ENDPOINT`
    /// and `MARGINALIA_MODEL`.
    pub fn from_env() -> Self {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Self {
        let mut config = Self::default();
        let non_empty = |k: &str| lookup(k).filter(|v| !v.trim().is_empty());
        if let Some(key) = non_empty(ENV_API_KEY) {
            config.api_key = Some(Secret::new(key.trim()));
        }
        if let Some(endpoint) = non_empty(ENV_ENDPOINT) {
            config.endpoint = endpoint;
        }
        if let Some(model) = non_empty(ENV_MODEL) {
            config.model = model;
        }
        config
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.api_key.is_none() {
            return Err(ConfigError::MissingCredential);
        }
        if self.context_budget_chars == 0 {
            return Err(ConfigError::ZeroBudget);
        }
        if reqwest::Url::parse(&self.endpoint).is_err() {
            return Err(ConfigError::BadEndpoint(self.endpoint.clone()));
        }
        Ok(())
    }
}
