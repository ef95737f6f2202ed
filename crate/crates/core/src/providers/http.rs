//! OpenAI-compatible HTTP clients for chat completions and embeddings.

use std::time::Duration;

use reqwest::StatusCode;
use reqwest::blocking::Client;
use serde_json::{Value, json};

use crate::config::{ChatProviderConfig, EmbeddingProviderConfig};
use crate::error::{Error, ProviderError, Result};

use super::chat::{ChatProvider, ChatRequest};
use super::embed::{Embedder, Embedding};

fn api_key(var: &str) -> Option<String> {
    std::env::var(var).ok().filter(|k| !k.is_empty())
}

fn client(timeout_secs: u64) -> Result<Client> {
    Client::builder()
        .timeout(Duration::from_secs(timeout_secs))
        .build()
        .map_err(|e| Error::Config(format!("cannot build HTTP client: {e}")))
}

fn endpoint(base: &str, path: &str) -> Result<String> {
    if base.trim().is_empty() {
        return Err(Error::Config("http backend needs an endpoint".into()));
    }
    Ok(format!("{}/{}", base.trim_end_matches('/'), path))
}

fn post(client: &Client, url: &str, key: Option<&str>, body: &Value) -> Result<Value, ProviderError> {
    let mut req = client.post(url).json(body);
    if let Some(k) = key {
        req = req.bearer_auth(k);
    }
    let resp = req.send().map_err(|e| {
        if e.is_timeout() {
            ProviderError::Timeout
        } else {
            ProviderError::Transport(e.to_string())
        }
    })?;
    let status = resp.status();
    if status == StatusCode::TOO_MANY_REQUESTS {
        return Err(ProviderError::RateLimited);
    }
    if !status.is_success() {
        let text = resp.text().unwrap_or_default();
        return Err(ProviderError::Transport(format!("HTTP {status}: {}", text.chars().take(200).collect::<String>())));
    }
    resp.json().map_err(|e| ProviderError::Malformed(format!("response is not JSON: {e}")))
}

pub struct HttpChatProvider {
    client: Client,
    url: String,
    model: String,
    key: Option<String>,
    temperature: Option<f64>,
    max_tokens: Option<u32>,
}

impl HttpChatProvider {
    pub fn from_config(cfg: &ChatProviderConfig) -> Result<Self> {
        Ok(HttpChatProvider {
            client: client(cfg.timeout_secs)?,
            url: endpoint(&cfg.endpoint, "chat/completions")?,
            model: cfg.model.clone(),
            key: api_key(&cfg.api_key_env),
            temperature: cfg.temperature,
            max_tokens: cfg.max_tokens,
        })
    }
}

impl ChatProvider for HttpChatProvider {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let mut body = json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
        });
        if let Some(t) = self.temperature {
            body["temperature"] = json!(t);
        }
        if let Some(m) = self.max_tokens {
            body["max_tokens"] = json!(m);
        }
        let v = post(&self.client, &self.url, self.key.as_deref(), &body)?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| ProviderError::Malformed("no choices[0].message.content".into()))
    }
}

pub struct HttpEmbedder {
    client: Client,
    url: String,
    model: String,
    key: Option<String>,
    dimension: usize,
}

impl HttpEmbedder {
    pub fn from_config(cfg: &EmbeddingProviderConfig) -> Result<Self> {
        Ok(HttpEmbedder {
            client: client(cfg.timeout_secs)?,
            url: endpoint(&cfg.endpoint, "embeddings")?,
            model: cfg.model.clone(),
            key: api_key(&cfg.api_key_env),
            dimension: cfg.dimension,
        })
    }
}

impl Embedder for HttpEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>, ProviderError> {
        if texts.is_empty() {
            return Err(ProviderError::EmptyInput);
        }
        let body = json!({"model": self.model, "input": texts});
        let v = post(&self.client, &self.url, self.key.as_deref(), &body)?;
        let data = v
            .get("data")
            .and_then(Value::as_array)
            .ok_or_else(|| ProviderError::Malformed("no data array".into()))?;
        if data.len() != texts.len() {
            return Err(ProviderError::Malformed(format!(
                "expected {} embeddings, got {}",
                texts.len(),
                data.len()
            )));
        }
        let mut out = vec![Vec::new(); texts.len()];
        for (pos, item) in data.iter().enumerate() {
            let idx = item.get("index").and_then(Value::as_u64).map_or(pos, |i| i as usize);
            let vec: Embedding = item
                .get("embedding")
                .and_then(Value::as_array)
                .ok_or_else(|| ProviderError::Malformed("entry without embedding".into()))?
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| ProviderError::Malformed("non-numeric embedding".into())))
                .collect::<Result<_, _>>()?;
            *out.get_mut(idx)
                .ok_or_else(|| ProviderError::Malformed(format!("embedding index {idx} out of range")))? = vec;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ChatBackend;
    use indexmap::IndexMap;
    use std::io::{Read, Write};
    use std::net::TcpListener;

    /// Serves one canned HTTP response and returns the raw request it received.
    fn serve_once(status: &str, body: &str) -> (String, std::thread::JoinHandle<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let response = format!(
            "HTTP/1.1 {status}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
            body.len()
        );
        let handle = std::thread::spawn(move || {
            let (mut sock, _) = listener.accept().unwrap();
            let mut buf = Vec::new();
            let mut chunk = [0u8; 4096];
            loop {
                let n = sock.read(&mut chunk).unwrap();
                buf.extend_from_slice(&chunk[..n]);
                let text = String::from_utf8_lossy(&buf).to_string();
                if let Some(h) = text.find("\r\n\r\n") {
                    let len = text[..h]
                        .lines()
                        .find_map(|l| l.to_ascii_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse::<usize>().unwrap()))
                        .unwrap_or(0);
                    if buf.len() >= h + 4 + len {
                        break;
                    }
                }
                if n == 0 {
                    break;
                }
            }
            sock.write_all(response.as_bytes()).unwrap();
            String::from_utf8_lossy(&buf).to_string()
        });
        (format!("http://{addr}/v1"), handle)
    }

    fn chat_cfg(url: String) -> ChatProviderConfig {
        ChatProviderConfig {
            backend: ChatBackend::Http,
            endpoint: url,
            api_key_env: "TOOLFORGE_TEST_UNSET_KEY".into(),
            ..ChatProviderConfig::default()
        }
    }

    fn request() -> ChatRequest {
        ChatRequest {
            signature: "S".into(),
            system: "sys".into(),
            user: "usr".into(),
            inputs: IndexMap::new(),
        }
    }

    #[test]
    fn chat_round_trip() {
        let (url, h) = serve_once("200 OK", r#"{"choices":[{"message":{"content":"hello"}}]}"#);
        let p = HttpChatProvider::from_config(&chat_cfg(url)).unwrap();
        assert_eq!(p.complete(&request()).unwrap(), "hello");
        let raw = h.join().unwrap();
        assert!(raw.starts_with("POST /v1/chat/completions"));
        assert!(raw.contains("\"content\":\"usr\""));
        assert!(!raw.to_ascii_lowercase().contains("authorization"));
    }

    #[test]
    fn rate_limit_maps_to_retryable() {
        let (url, h) = serve_once("429 Too Many Requests", "{}");
        let p = HttpChatProvider::from_config(&chat_cfg(url)).unwrap();
        let err = p.complete(&request()).unwrap_err();
        assert_eq!(err, ProviderError::RateLimited);
        assert!(err.is_retryable());
        h.join().unwrap();
    }

    #[test]
    fn embeddings_reordered_by_index() {
        let (url, h) = serve_once(
            "200 OK",
            r#"{"data":[{"index":1,"embedding":[0.0,1.0]},{"index":0,"embedding":[1.0,0.0]}]}"#,
        );
        let cfg = EmbeddingProviderConfig {
            endpoint: url,
            dimension: 2,
            ..EmbeddingProviderConfig::default()
        };
        let e = HttpEmbedder::from_config(&cfg).unwrap();
        let v = e.embed(&["a".to_string(), "b".to_string()]).unwrap();
        assert_eq!(v, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        h.join().unwrap();
    }

    #[test]
    fn missing_endpoint_is_config_error() {
        let cfg = ChatProviderConfig {
            endpoint: String::new(),
            ..ChatProviderConfig::default()
        };
        assert!(matches!(HttpChatProvider::from_config(&cfg), Err(Error::Config(_))));
    }
}
