//! HTTP session server. Configured through `SENSEMAP_*` variables; `RUST_LOG` sets the log filter.

use std::process::ExitCode;

use sensemap_service::{serve, ServiceConfig};
use tracing_subscriber::EnvFilter;

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let result = match ServiceConfig::from_env() {
        Ok(config) => serve(config).await,
        Err(e) => Err(e),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
