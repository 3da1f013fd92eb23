use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use super::backend::{BackendError, LlmBackend};
use super::mock::MockBackend;
use super::remote::{RemoteBackend, RemoteConfig};
use crate::workspace::ModelConfig;

pub const ENV_PREFIX: &str = "SENSEMAP_";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Mock,
    Remote,
}

impl std::str::FromStr for BackendKind {
    type Err = BackendError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mock" => Ok(BackendKind::Mock),
            "remote" => Ok(BackendKind::Remote),
            other => Err(BackendError::Config(format!("unknown backend {other:?} (expected mock or remote)"))),
        }
    }
}

/// Backend selection and model overrides, read from `SENSEMAP_*` variables.
///
/// | variable | meaning |
/// |---|---|
/// | `SENSEMAP_BACKEND` | `mock` (default) or `remote` |
/// | `SENSEMAP_BASE_URL` | OpenAI-compatible base URL, required for `remote` |
/// | `SENSEMAP_API_KEY` | bearer token |
/// | `SENSEMAP_MODEL`, `SENSEMAP_TEMPERATURE`, `SENSEMAP_MAX_TOKENS` | model overrides |
/// | `SENSEMAP_TIMEOUT_SECS` | HTTP timeout, default 120 |
#[derive(Debug, Clone, PartialEq)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub base_url: Option<String>,
    pub api_key: Option<String>,
    pub model_name: Option<String>,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
    pub timeout: Duration,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Mock,
            base_url: None,
            api_key: None,
            model_name: None,
            temperature: None,
            max_tokens: None,
            timeout: Duration::from_secs(120),
        }
    }
}

impl BackendConfig {
    pub fn from_env() -> Result<Self, BackendError> {
        let vars: BTreeMap<String, String> = std::env::vars()
            .filter_map(|(k, v)| k.strip_prefix(ENV_PREFIX).map(|k| (k.to_owned(), v)))
            .collect();
        Self::from_vars(&vars)
    }

    /// Same as [`from_env`](Self::from_env) over an explicit map of unprefixed names.
    pub fn from_vars(vars: &BTreeMap<String, String>) -> Result<Self, BackendError> {
        let get = |k: &str| vars.get(k).map(|v| v.trim().to_owned()).filter(|v| !v.is_empty());
        let num = |k: &str| -> Result<Option<f64>, BackendError> {
            get(k)
                .map(|v| v.parse::<f64>().map_err(|e| BackendError::Config(format!("{ENV_PREFIX}{k}: {e}"))))
                .transpose()
        };
        let mut c = BackendConfig::default();
        if let Some(kind) = get("BACKEND") {
            c.kind = kind.parse()?;
        }
        c.base_url = get("BASE_URL");
        c.api_key = get("API_KEY");
        c.model_name = get("MODEL");
        c.temperature = num("TEMPERATURE")?;
        c.max_tokens = num("MAX_TOKENS")?.map(|v| v as u32);
        if let Some(t) = num("TIMEOUT_SECS")? {
            c.timeout = Duration::from_secs_f64(t);
        }
        Ok(c)
    }

    pub fn build(&self) -> Result<Arc<dyn LlmBackend>, BackendError> {
        match self.kind {
            BackendKind::Mock => Ok(Arc::new(MockBackend)),
            BackendKind::Remote => {
                let base_url = self
                    .base_url
                    .clone()
                    .ok_or_else(|| BackendError::Config(format!("{ENV_PREFIX}BASE_URL is required for the remote backend")))?;
                Ok(Arc::new(RemoteBackend::new(RemoteConfig {
                    base_url,
                    api_key: self.api_key.clone(),
                    timeout: self.timeout,
                })?))
            }
        }
    }

    /// Applies the overrides on top of the workspace's model settings.
    pub fn model(&self, base: &ModelConfig) -> ModelConfig {
        ModelConfig {
            model_name: self.model_name.clone().unwrap_or_else(|| base.model_name.clone()),
            temperature: self.temperature.unwrap_or(base.temperature),
            max_tokens: self.max_tokens.unwrap_or(base.max_tokens),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults_to_mock() {
        let c = BackendConfig::from_vars(&vars(&[])).unwrap();
        assert_eq!(c.kind, BackendKind::Mock);
        assert_eq!(c.build().unwrap().name(), "mock");
    }

    #[test]
    fn remote_needs_base_url() {
        let c = BackendConfig::from_vars(&vars(&[("BACKEND", "remote")])).unwrap();
        assert!(matches!(c.build(), Err(BackendError::Config(_))));
        let c = BackendConfig::from_vars(&vars(&[("BACKEND", "Remote"), ("BASE_URL", "http://x/v1")])).unwrap();
        assert_eq!(c.build().unwrap().name(), "remote");
    }

    #[test]
    fn overrides() {
        let c = BackendConfig::from_vars(&vars(&[("MODEL", "m"), ("TEMPERATURE", "0"), ("MAX_TOKENS", "9")])).unwrap();
        let m = c.model(&ModelConfig::default());
        assert_eq!((m.model_name.as_str(), m.temperature, m.max_tokens), ("m", 0.0, 9));
        assert!(BackendConfig::from_vars(&vars(&[("TEMPERATURE", "hot")])).is_err());
        assert!(BackendConfig::from_vars(&vars(&[("BACKEND", "gpt")])).is_err());
    }
}
