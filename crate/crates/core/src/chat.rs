//! Blocking chat-completions client shared by the remote actor and critic.
//!
//! Speaks the common `POST <base>/chat/completions` protocol and reads the
//! first choice's message content. The bearer token is read from the
//! environment variable named in the config at request time; it never lives
//! in config files or manifests.

use std::time::Duration;

use serde::{Deserialize, Serialize};

fn default_temperature() -> f64 {
    0.7
}

fn default_timeout() -> f64 {
    60.0
}

fn default_in_flight() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    /// Name of the environment variable holding the bearer token.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        EndpointConfig {
            base_url: base_url.into(),
            model: model.into(),
            temperature: default_temperature(),
            timeout_secs: default_timeout(),
            api_key_env: None,
            max_in_flight: default_in_flight(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.temperature >= 0.0) {
            return Err(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if !(self.timeout_secs > 0.0) {
            return Err(format!("timeout_secs must be > 0, got {}", self.timeout_secs));
        }
        if self.max_in_flight == 0 {
            return Err("max_in_flight must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "user".into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_millis(250),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ChatError {
    #[error("request to {url} failed after {attempts} attempt(s): {last}")]
    Unreachable {
        url: String,
        attempts: u32,
        last: String,
    },
    #[error("response had no message content")]
    EmptyResponse,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Deserialize)]
struct ResponseMessage {
    content: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ChatClient {
    agent: ureq::Agent,
    config: EndpointConfig,
    retry: RetryPolicy,
}

impl ChatClient {
    pub fn new(config: EndpointConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .build()
            .into();
        ChatClient {
            agent,
            config,
            retry: RetryPolicy::default(),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    pub fn url(&self) -> String {
        format!(
            "{}/chat/completions",
            self.config.base_url.trim_end_matches('/')
        )
    }

    /// One completion with bounded retry and exponential backoff.
    pub fn complete(&self, messages: &[ChatMessage], temperature: f64) -> Result<String, ChatError> {
        let url = self.url();
        let body = ChatRequest {
            model: &self.config.model,
            messages,
            temperature,
        };
        let token = self
            .config
            .api_key_env
            .as_deref()
            .and_then(|var| std::env::var(var).ok());
        let attempts = self.retry.attempts.max(1);
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.retry.base_delay * 2u32.pow(attempt - 1));
            }
            let mut req = self.agent.post(&url);
            if let Some(token) = &token {
                req = req.header("Authorization", &format!("Bearer {token}"));
            }
            match req.send_json(&body) {
                Ok(mut resp) => match resp.body_mut().read_json::<ChatResponse>() {
                    Ok(parsed) => {
                        return parsed
                            .choices
                            .into_iter()
                            .next()
                            .and_then(|c| c.message.content)
                            .ok_or(ChatError::EmptyResponse)
                    }
                    Err(e) => last = format!("unreadable response: {e}"),
                },
                Err(e) => last = e.to_string(),
            }
        }
        Err(ChatError::Unreachable {
            url,
            attempts,
            last,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let mut c = EndpointConfig::new("http://localhost", "m");
        assert!(c.validate().is_ok());
        c.temperature = -0.1;
        assert!(c.validate().is_err());
        c.temperature = 0.0;
        c.timeout_secs = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn url_joins_base() {
        let c = ChatClient::new(EndpointConfig::new("http://h:1/v1/", "m"));
        assert_eq!(c.url(), "http://h:1/v1/chat/completions");
    }

    #[test]
    fn unreachable_after_retries() {
        // Port 9 on localhost is reliably closed in the sandbox.
        let c = ChatClient::new(EndpointConfig::new("http://127.0.0.1:9", "m")).with_retry(
            RetryPolicy {
                attempts: 3,
                base_delay: Duration::from_millis(1),
            },
        );
        match c.complete(&[ChatMessage::user("hi")], 0.0) {
            Err(ChatError::Unreachable { attempts, .. }) => assert_eq!(attempts, 3),
            other => panic!("expected unreachable, got {other:?}"),
        }
    }
}
