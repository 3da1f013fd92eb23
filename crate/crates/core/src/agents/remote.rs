use std::sync::OnceLock;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::backend::{estimate_tokens, BackendError, LlmBackend, LlmRequest, LlmResponse, Usage};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemoteConfig {
    /// Base URL up to and excluding `/chat/completions`, e.g. `https://api.openai.com/v1`.
    pub base_url: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

/// Chat-completions client for OpenAI-compatible endpoints.
///
/// The blocking HTTP client is built on first use so the backend can be constructed
/// inside an async runtime and called from worker threads.
pub struct RemoteBackend {
    config: RemoteConfig,
    client: OnceLock<Result<reqwest::blocking::Client, String>>,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<ChatUsage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct ChatUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Result<Self, BackendError> {
        if config.base_url.trim().is_empty() {
            return Err(BackendError::Config("empty base URL".into()));
        }
        Ok(RemoteBackend {
            config,
            client: OnceLock::new(),
        })
    }

    fn client(&self) -> Result<&reqwest::blocking::Client, BackendError> {
        self.client
            .get_or_init(|| {
                reqwest::blocking::Client::builder()
                    .timeout(self.config.timeout)
                    .build()
                    .map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(|e| BackendError::Config(e.clone()))
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }
}

impl LlmBackend for RemoteBackend {
    fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, BackendError> {
        let body = json!({
            "model": request.model.model_name,
            "messages": request.messages,
            "temperature": request.model.temperature,
            "max_tokens": request.model.max_tokens,
            "response_format": {"type": "json_object"},
        });
        let mut http = self.client()?.post(self.endpoint()).json(&body);
        if let Some(key) = &self.config.api_key {
            http = http.bearer_auth(key);
        }
        let resp = http.send().map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| BackendError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(BackendError::Status {
                status: status.as_u16(),
                body: text.chars().take(500).collect(),
            });
        }
        let parsed: ChatResponse = serde_json::from_str(&text).map_err(|e| BackendError::Protocol(e.to_string()))?;
        let raw = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| BackendError::Protocol("no message content in first choice".into()))?;
        let usage = match parsed.usage {
            Some(u) => Usage {
                prompt_tokens: u.prompt_tokens,
                completion_tokens: u.completion_tokens,
            },
            None => Usage {
                prompt_tokens: request.messages.iter().map(|m| estimate_tokens(&m.content)).sum(),
                completion_tokens: estimate_tokens(&raw),
            },
        };
        Ok(LlmResponse { raw, usage })
    }

    fn name(&self) -> &str {
        "remote"
    }
}

#[cfg(test)]
mod tests {
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::thread;

    use super::*;
    use crate::agents::backend::{Message, SchemaId};
    use crate::workspace::ModelConfig;

    /// Serves one canned HTTP response and hands back the request body it received.
    fn one_shot_server(status: &'static str, body: &'static str) -> (String, thread::JoinHandle<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1", listener.local_addr().unwrap());
        let handle = thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0usize;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
            String::from_utf8(buf).unwrap()
        });
        (url, handle)
    }

    fn request() -> LlmRequest {
        LlmRequest {
            schema: SchemaId::Generation,
            messages: vec![Message::system("sys"), Message::user("{}")],
            model: ModelConfig::default(),
        }
    }

    fn backend(url: String) -> RemoteBackend {
        RemoteBackend::new(RemoteConfig {
            base_url: url,
            api_key: Some("k".into()),
            timeout: Duration::from_secs(5),
        })
        .unwrap()
    }

    #[test]
    fn posts_chat_completion_and_reads_content() {
        let (url, server) = one_shot_server(
            "200 OK",
            r#"{"choices":[{"message":{"role":"assistant","content":"{\"components\":[]}"}}],"usage":{"prompt_tokens":7,"completion_tokens":3}}"#,
        );
        let resp = backend(url).complete(&request()).unwrap();
        assert_eq!(resp.raw, r#"{"components":[]}"#);
        assert_eq!(resp.usage, Usage { prompt_tokens: 7, completion_tokens: 3 });
        let sent: serde_json::Value = serde_json::from_str(&server.join().unwrap()).unwrap();
        assert_eq!(sent["model"], "gpt-4o-mini");
        assert_eq!(sent["messages"][0]["role"], "system");
        assert_eq!(sent["response_format"]["type"], "json_object");
    }

    #[test]
    fn http_errors_surface_as_status() {
        let (url, server) = one_shot_server("429 Too Many Requests", r#"{"error":"slow down"}"#);
        let err = backend(url).complete(&request()).unwrap_err();
        server.join().unwrap();
        assert!(matches!(err, BackendError::Status { status: 429, .. }));
    }

    #[test]
    fn unreachable_is_transport_error() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1", listener.local_addr().unwrap());
        drop(listener);
        let err = backend(url).complete(&request()).unwrap_err();
        assert!(matches!(err, BackendError::Transport(_)));
    }
}
