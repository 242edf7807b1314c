//! Chat-completion endpoint clients.

use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

/// Request body for an OpenAI-style chat-completions endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u64,
}

impl ChatRequest {
    /// The prompt as a single user message; no system message is sent.
    pub fn user_prompt(
        prompt: String,
        model: &str,
        temperature: f64,
        top_p: f64,
        max_tokens: u64,
    ) -> Self {
        Self {
            model: model.to_string(),
            messages: vec![ChatMessage {
                role: "user".into(),
                content: prompt,
            }],
            temperature,
            top_p,
            max_tokens,
        }
    }

    pub fn prompt(&self) -> &str {
        self.messages.first().map_or("", |m| m.content.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatResponse {
    pub content: String,
    pub finish_reason: String,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ClientError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("endpoint returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("invalid response: {0}")]
    InvalidResponse(String),
}

impl ClientError {
    pub fn is_retryable(&self) -> bool {
        match self {
            ClientError::Transport(_) | ClientError::InvalidResponse(_) => true,
            ClientError::Status { status, .. } => {
                matches!(status, 408 | 409 | 425 | 429) || *status >= 500
            }
        }
    }
}

#[async_trait]
pub trait ChatClient: Send + Sync {
    async fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ClientError>;
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct WireMessage {
    content: Option<String>,
}

/// Parses a chat-completions response body.
pub fn parse_response(body: &str) -> Result<ChatResponse, ClientError> {
    let wire: WireResponse =
        serde_json::from_str(body).map_err(|e| ClientError::InvalidResponse(e.to_string()))?;
    let choice = wire
        .choices
        .into_iter()
        .next()
        .ok_or_else(|| ClientError::InvalidResponse("response has no choices".into()))?;
    Ok(ChatResponse {
        content: choice.message.content.unwrap_or_default(),
        finish_reason: choice.finish_reason.unwrap_or_default(),
    })
}

/// HTTP client for a chat-completions endpoint. Only plain `http://` URLs are
/// supported; put a TLS-terminating proxy in front of remote endpoints.
#[derive(Debug, Clone)]
pub struct HttpChatClient {
    http: reqwest::Client,
    url: String,
    token: Option<String>,
}

impl HttpChatClient {
    /// `url` may be the full `.../chat/completions` URL or an API base such as `http://host/v1`.
    pub fn new(url: &str, token: Option<String>, timeout: Duration) -> Result<Self, ClientError> {
        let url = if url.trim_end_matches('/').ends_with("/chat/completions") {
            url.to_string()
        } else {
            format!("{}/chat/completions", url.trim_end_matches('/'))
        };
        let http = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        Ok(Self { http, url, token })
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

#[async_trait]
impl ChatClient for HttpChatClient {
    async fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ClientError> {
        let mut req = self.http.post(&self.url).json(request);
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let resp = req
            .send()
            .await
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = resp.status();
        let body = resp
            .text()
            .await
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(ClientError::Status {
                status: status.as_u16(),
                body,
            });
        }
        parse_response(&body)
    }
}

/// Deterministic offline stand-in for a generator model.
///
/// The completion is a single well-formed QA block derived from the prompt's
/// passages and a digest of the whole prompt, so identical prompts always get
/// identical completions.
#[derive(Debug, Clone, Default)]
pub struct MockChatClient;

fn first_sentence(passage: &str) -> String {
    let line = passage.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let sentence = line.split_inclusive(". ").next().unwrap_or(line).trim();
    let mut out: String = sentence.chars().take(160).collect();
    while out.ends_with('.') {
        out.pop();
    }
    out
}

fn passage_after<'a>(prompt: &'a str, marker: &str) -> Option<&'a str> {
    prompt.find(marker).map(|i| &prompt[i + marker.len()..])
}

impl MockChatClient {
    pub fn completion_for(prompt: &str) -> String {
        let digest = Sha256::digest(prompt.as_bytes());
        let tag: String = digest[..4].iter().map(|b| format!("{b:02x}")).collect();
        let subjects: Vec<String> = ["[Passage A]\n", "[Passage B]\n", "[Passage C]\n"]
            .iter()
            .filter_map(|m| passage_after(prompt, m))
            .map(first_sentence)
            .collect();
        let subjects = if subjects.is_empty() {
            vec![first_sentence(
                prompt.rsplit("\n\n").next().unwrap_or(prompt),
            )]
        } else {
            subjects
        };
        let premises = subjects
            .iter()
            .map(|s| format!("{s}."))
            .collect::<Vec<_>>()
            .join(" ");
        format!(
            "Question: Which chain of facts connects the subjects introduced as \"{first}\" and \"{last}\", and what single relationship follows from it (record {tag})?\n\
             Answer: Step one establishes the first premise. {premises} Step two observes that these subjects are tied by a direct reference, \
             so the facts about each can be combined into one chain of reasoning. \
             Therefore, the subjects are directly related through record {tag}.",
            first = subjects[0],
            last = subjects[subjects.len() - 1],
        )
    }
}

#[async_trait]
impl ChatClient for MockChatClient {
    async fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ClientError> {
        Ok(ChatResponse {
            content: Self::completion_for(request.prompt()),
            finish_reason: "stop".into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn retry_classification() {
        assert!(ClientError::Transport("reset".into()).is_retryable());
        for status in [429, 500, 503, 408] {
            assert!(ClientError::Status {
                status,
                body: String::new()
            }
            .is_retryable());
        }
        for status in [400, 401, 404, 413] {
            assert!(!ClientError::Status {
                status,
                body: String::new()
            }
            .is_retryable());
        }
    }

    #[test]
    fn parses_wire_response() {
        let body = r#"{"id":"x","choices":[{"index":0,"message":{"role":"assistant","content":"hi"},"finish_reason":"length"}]}"#;
        assert_eq!(
            parse_response(body).unwrap(),
            ChatResponse {
                content: "hi".into(),
                finish_reason: "length".into()
            }
        );
        assert!(parse_response(r#"{"choices":[]}"#).is_err());
        assert!(parse_response("not json").is_err());
    }

    #[test]
    fn request_wire_shape() {
        let req = ChatRequest::user_prompt("p".into(), "m", 0.7, 0.8, 32768);
        let v = serde_json::to_value(&req).unwrap();
        assert_eq!(
            v,
            serde_json::json!({
                "model": "m",
                "messages": [{"role": "user", "content": "p"}],
                "temperature": 0.7,
                "top_p": 0.8,
                "max_tokens": 32768
            })
        );
    }

    #[test]
    fn endpoint_url_forms() {
        let t = Duration::from_secs(1);
        assert_eq!(
            HttpChatClient::new("http://h/v1", None, t).unwrap().url(),
            "http://h/v1/chat/completions"
        );
        assert_eq!(
            HttpChatClient::new("http://h/v1/chat/completions", None, t)
                .unwrap()
                .url(),
            "http://h/v1/chat/completions"
        );
    }

    #[test]
    fn mock_is_deterministic_and_well_formed() {
        let prompt = "[Passage A]\nDune is a film. More.\n\n[Passage B]\nTenet is a film.\n\nTask:";
        let a = MockChatClient::completion_for(prompt);
        assert_eq!(a, MockChatClient::completion_for(prompt));
        assert!(a.starts_with("Question: "));
        assert!(a.contains("\nAnswer: "));
        assert!(a.contains("Therefore,"));
        assert!(a.contains("Dune is a film") && a.contains("Tenet is a film"));
        assert_ne!(a, MockChatClient::completion_for("other"));
    }
}
