//! Blocking JSON-over-HTTP calls to remote providers (embeddings, chat completions).

use std::time::Duration;

use serde::Serialize;
use serde_json::Value;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ProviderError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("provider returned status {status}: {message}")]
    Status { status: u16, message: String },
    #[error("unexpected response shape: {0}")]
    Shape(String),
}

/// A reusable client with a per-request timeout.
#[derive(Clone, Debug)]
pub struct HttpClient {
    agent: ureq::Agent,
}

impl HttpClient {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build();
        HttpClient { agent: ureq::Agent::new_with_config(config) }
    }

    pub fn post_json<B: Serialize>(&self, url: &str, body: &B) -> Result<Value, ProviderError> {
        let mut resp = self.agent.post(url).send_json(body).map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| ProviderError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(ProviderError::Status { status, message: text });
        }
        serde_json::from_str(&text).map_err(|e| ProviderError::Shape(format!("body is not JSON: {e}")))
    }
}

impl Default for HttpClient {
    fn default() -> Self {
        HttpClient::new(DEFAULT_TIMEOUT)
    }
}
