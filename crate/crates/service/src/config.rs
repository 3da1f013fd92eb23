use std::path::PathBuf;

use sensemap_core::agents::{BackendConfig, ENV_PREFIX};

use crate::error::ServiceError;

pub const DEFAULT_BIND: &str = "127.0.0.1:8080";
pub const DEFAULT_DATA_DIR: &str = "sensemap-data";

/// `SENSEMAP_DATA_DIR` and `SENSEMAP_BIND` on top of the backend variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub bind: String,
    pub data_dir: PathBuf,
    pub backend: BackendConfig,
}

impl ServiceConfig {
    pub fn from_env() -> Result<Self, ServiceError> {
        let var = |k: &str| std::env::var(format!("{ENV_PREFIX}{k}")).ok().filter(|v| !v.trim().is_empty());
        Ok(ServiceConfig {
            bind: var("BIND").unwrap_or_else(|| DEFAULT_BIND.to_owned()),
            data_dir: var("DATA_DIR").map_or_else(|| PathBuf::from(DEFAULT_DATA_DIR), PathBuf::from),
            backend: BackendConfig::from_env().map_err(|e| ServiceError::BadRequest(e.to_string()))?,
        })
    }
}
