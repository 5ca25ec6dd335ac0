use std::time::Duration;

use serde_json::{json, Value};

use super::{BackendError, CompletionParams, LlmBackend, PromptDocument, Role};

pub const API_KEY_VAR: &str = "QUESTFORGE_API_KEY";
pub const API_BASE_VAR: &str = "QUESTFORGE_API_BASE";
pub const MODEL_VAR: &str = "QUESTFORGE_MODEL";

const DEFAULT_API_BASE: &str = "https://api.openai.com/v1";
const DEFAULT_MODEL: &str = "gpt-4";
const RETRY_DELAYS: [Duration; 2] = [Duration::from_secs(1), Duration::from_secs(2)];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemoteConfig {
    pub api_key: String,
    pub api_base: String,
    pub model: String,
}

impl RemoteConfig {
    pub fn from_env() -> Result<Self, BackendError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, BackendError> {
        let api_key = get(API_KEY_VAR)
            .filter(|k| !k.is_empty())
            .ok_or_else(|| BackendError::Config(format!("{API_KEY_VAR} is not set")))?;
        Ok(RemoteConfig {
            api_key,
            api_base: get(API_BASE_VAR).filter(|s| !s.is_empty()).unwrap_or_else(|| DEFAULT_API_BASE.to_string()),
            model: get(MODEL_VAR).filter(|s| !s.is_empty()).unwrap_or_else(|| DEFAULT_MODEL.to_string()),
        })
    }
}

/// Chat-completions client for an OpenAI-compatible endpoint.
pub struct RemoteBackend {
    config: RemoteConfig,
    client: reqwest::blocking::Client,
    sleep: Box<dyn FnMut(Duration) + Send>,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(RemoteBackend { config, client, sleep: Box::new(std::thread::sleep) })
    }

    /// Replaces the function used to wait between retries.
    pub fn with_sleep(mut self, sleep: impl FnMut(Duration) + Send + 'static) -> Self {
        self.sleep = Box::new(sleep);
        self
    }

    pub fn request_body(&self, doc: &PromptDocument, params: &CompletionParams) -> Value {
        let messages: Vec<Value> = doc
            .messages
            .iter()
            .map(|m| {
                let (role, content) = match m.role {
                    Role::System => ("system", m.text.clone()),
                    Role::Npc => ("assistant", m.text.clone()),
                    Role::Player => ("user", m.text.clone()),
                    Role::FunctionReturn => ("user", format!("Function_Returns: {}", m.text)),
                };
                json!({ "role": role, "content": content })
            })
            .collect();
        json!({
            "model": self.config.model,
            "messages": messages,
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        })
    }

    fn attempt(&self, body: &Value, params: &CompletionParams) -> Result<String, BackendError> {
        let url = format!("{}/chat/completions", self.config.api_base.trim_end_matches('/'));
        let response = self
            .client
            .post(url)
            .bearer_auth(&self.config.api_key)
            .timeout(params.timeout)
            .json(body)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    BackendError::Timeout
                } else {
                    BackendError::Transport(e.to_string())
                }
            })?;
        let status = response.status();
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(BackendError::Auth(format!("server answered {status}")));
        }
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(BackendError::Transport(format!("server answered {status}")));
        }
        if !status.is_success() {
            return Err(BackendError::Protocol(format!("server answered {status}")));
        }
        let value: Value = response.json().map_err(|e| {
            if e.is_timeout() {
                BackendError::Timeout
            } else {
                BackendError::Protocol(e.to_string())
            }
        })?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| BackendError::Protocol("response has no message content".to_string()))
    }
}

impl LlmBackend for RemoteBackend {
    fn complete(&mut self, doc: &PromptDocument, params: &CompletionParams) -> Result<String, BackendError> {
        let body = self.request_body(doc, params);
        let mut delays = RETRY_DELAYS.iter();
        loop {
            match self.attempt(&body, params) {
                Err(BackendError::Transport(msg)) => match delays.next() {
                    Some(&d) => (self.sleep)(d),
                    None => return Err(BackendError::Transport(msg)),
                },
                other => return other,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::{Arc, Mutex};
    use std::thread;

    use super::*;

    /// Serves the given canned responses, one per connection, and returns
    /// the bodies of the requests it saw.
    fn serve(responses: Vec<(u16, &'static str)>) -> (String, thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let handle = thread::spawn(move || {
            let mut bodies = Vec::new();
            for (status, body) in responses {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream);
                let mut len = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                }
                let mut buf = vec![0; len];
                reader.read_exact(&mut buf).unwrap();
                bodies.push(String::from_utf8(buf).unwrap());
                let reply = format!(
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
                reader.get_mut().write_all(reply.as_bytes()).unwrap();
            }
            bodies
        });
        (base, handle)
    }

    fn backend(base: String, delays: Arc<Mutex<Vec<Duration>>>) -> RemoteBackend {
        let config = RemoteConfig { api_key: "k".into(), api_base: base, model: "m".into() };
        RemoteBackend::new(config).unwrap().with_sleep(move |d| delays.lock().unwrap().push(d))
    }

    fn doc() -> PromptDocument {
        let mut d = PromptDocument::new("Elena");
        d.push(Role::System, "sys");
        d.push(Role::Player, "hi");
        d.push(Role::Npc, "hello");
        d.push(Role::FunctionReturn, "mined successfully");
        d
    }

    #[test]
    fn bad_key_is_an_auth_error_without_retry() {
        let (base, server) = serve(vec![(401, "{}")]);
        let delays = Arc::new(Mutex::new(Vec::new()));
        let mut b = backend(base, delays.clone());
        let r = b.complete(&doc(), &CompletionParams::default());
        assert!(matches!(r, Err(BackendError::Auth(_))), "{r:?}");
        assert_eq!(server.join().unwrap().len(), 1);
        assert!(delays.lock().unwrap().is_empty());
    }

    #[test]
    fn transport_errors_retry_twice_with_backoff() {
        let (base, server) = serve(vec![(503, "{}"), (503, "{}"), (503, "{}")]);
        let delays = Arc::new(Mutex::new(Vec::new()));
        let mut b = backend(base, delays.clone());
        let r = b.complete(&doc(), &CompletionParams::default());
        assert!(matches!(r, Err(BackendError::Transport(_))), "{r:?}");
        assert_eq!(server.join().unwrap().len(), 3);
        assert_eq!(*delays.lock().unwrap(), vec![Duration::from_secs(1), Duration::from_secs(2)]);
    }

    #[test]
    fn success_after_a_retry_maps_roles() {
        let ok = r#"{"choices":[{"message":{"role":"assistant","content":"Sure!"}}]}"#;
        let (base, server) = serve(vec![(500, "{}"), (200, ok)]);
        let delays = Arc::new(Mutex::new(Vec::new()));
        let mut b = backend(base, delays.clone());
        assert_eq!(b.complete(&doc(), &CompletionParams::default()).unwrap(), "Sure!");
        let bodies = server.join().unwrap();
        let sent: Value = serde_json::from_str(&bodies[1]).unwrap();
        let roles: Vec<_> = sent["messages"].as_array().unwrap().iter().map(|m| m["role"].as_str().unwrap()).collect();
        assert_eq!(roles, ["system", "user", "assistant", "user"]);
        assert_eq!(sent["messages"][3]["content"], "Function_Returns: mined successfully");
        assert_eq!(sent["max_tokens"], 512);
        assert_eq!(sent["model"], "m");
    }

    #[test]
    fn missing_key_is_a_config_error() {
        assert!(matches!(RemoteConfig::from_lookup(|_| None), Err(BackendError::Config(_))));
        let c = RemoteConfig::from_lookup(|k| (k == API_KEY_VAR).then(|| "x".to_string())).unwrap();
        assert_eq!(c.model, DEFAULT_MODEL);
    }
}
