//! OpenAI-compatible chat-completions endpoint over blocking HTTP.

use serde::Serialize;
use serde_json::Value;

use super::{ChatProvider, ExchangeSource, GatewayError, ProviderConfig, ProviderError, ProviderReply};
use crate::prompt::RenderedPrompt;

#[derive(Serialize)]
struct Message<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct Request<'a> {
    model: &'a str,
    temperature: f64,
    messages: Vec<Message<'a>>,
}

pub struct HttpProvider {
    agent: ureq::Agent,
    api_key: Option<String>,
}

impl HttpProvider {
    /// Reads the credential from `config.api_key_env`. A missing variable is
    /// not an error here; the endpoint decides whether it needs one.
    pub fn new(config: &ProviderConfig) -> Result<Self, GatewayError> {
        config.validate()?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.request_timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        Ok(HttpProvider { agent, api_key })
    }
}

pub(crate) fn request_body<'a>(prompt: &'a RenderedPrompt, config: &'a ProviderConfig) -> impl Serialize + 'a {
    let mut messages = Vec::with_capacity(2);
    if !prompt.system_text.is_empty() {
        messages.push(Message { role: "system", content: &prompt.system_text });
    }
    messages.push(Message { role: "user", content: &prompt.user_text });
    Request { model: &config.model_name, temperature: config.temperature, messages }
}

/// Pulls `choices[0].message.content` out of a response body.
pub(crate) fn reply_text(body: &str) -> Result<String, ProviderError> {
    let v: Value = serde_json::from_str(body).map_err(|e| ProviderError::Malformed(format!("not JSON: {e}")))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_owned)
        .ok_or_else(|| ProviderError::Malformed("missing choices[0].message.content".into()))
}

fn classify(status: u16, body: &str) -> ProviderError {
    let snippet: String = body.chars().take(200).collect();
    match status {
        401 | 403 => ProviderError::Auth(format!("HTTP {status}: {snippet}")),
        408 | 409 | 429 | 500..=599 => ProviderError::Transient(format!("HTTP {status}")),
        _ => ProviderError::Malformed(format!("HTTP {status}: {snippet}")),
    }
}

impl ChatProvider for HttpProvider {
    fn send(&self, prompt: &RenderedPrompt, config: &ProviderConfig) -> Result<ProviderReply, ProviderError> {
        let mut req = self.agent.post(&config.endpoint_url);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = match req.send_json(request_body(prompt, config)) {
            Ok(r) => r,
            Err(
                e @ (ureq::Error::Timeout(_)
                | ureq::Error::Io(_)
                | ureq::Error::ConnectionFailed
                | ureq::Error::HostNotFound),
            ) => return Err(ProviderError::Transient(e.to_string())),
            Err(e) => return Err(ProviderError::Malformed(e.to_string())),
        };
        let status = resp.status().as_u16();
        let body =
            resp.body_mut().read_to_string().map_err(|e| ProviderError::Transient(format!("reading body: {e}")))?;
        if !(200..300).contains(&status) {
            return Err(classify(status, &body));
        }
        Ok(ProviderReply { text: reply_text(&body)?, latency_secs: None })
    }

    fn source(&self) -> ExchangeSource {
        ExchangeSource::Live
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn body_shape() {
        let p = RenderedPrompt::new("sys", "user");
        let v = serde_json::to_value(request_body(&p, &ProviderConfig::default())).unwrap();
        assert_eq!(v["model"], "gpt-4-turbo");
        assert_eq!(v["temperature"], 0.0);
        assert_eq!(v["messages"][0]["role"], "system");
        assert_eq!(v["messages"][1]["content"], "user");
        let p = RenderedPrompt::new("", "user");
        let v = serde_json::to_value(request_body(&p, &ProviderConfig::default())).unwrap();
        assert_eq!(v["messages"].as_array().unwrap().len(), 1);
    }

    #[test]
    fn reply_extraction() {
        let ok = r#"{"choices":[{"message":{"role":"assistant","content":"<Answer>B</Answer>"}}]}"#;
        assert_eq!(reply_text(ok).unwrap(), "<Answer>B</Answer>");
        assert!(matches!(reply_text("{}"), Err(ProviderError::Malformed(_))));
        assert!(matches!(reply_text("<html>"), Err(ProviderError::Malformed(_))));
    }

    #[test]
    fn status_classes() {
        assert!(matches!(classify(401, ""), ProviderError::Auth(_)));
        assert!(matches!(classify(429, ""), ProviderError::Transient(_)));
        assert!(matches!(classify(503, ""), ProviderError::Transient(_)));
        assert!(matches!(classify(400, ""), ProviderError::Malformed(_)));
    }
}
