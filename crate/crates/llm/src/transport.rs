use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Where to send requests and which environment variable holds the bearer token.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
}

impl EndpointConfig {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            api_key_env: None,
        }
    }

    /// The bearer token, if an env var is named and set.
    pub fn bearer_token(&self) -> Option<String> {
        let var = self.api_key_env.as_deref()?;
        std::env::var(var).ok().filter(|v| !v.is_empty())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// A failure below HTTP: connection refused, timeout, broken body.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransportError(pub String);

impl std::fmt::Display for TransportError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// One JSON POST. Any status code is a successful transport round trip.
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &str) -> Result<HttpResponse, TransportError>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        Self {
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(120))
    }
}

impl Transport for UreqTransport {
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &str) -> Result<HttpResponse, TransportError> {
        let mut req = self.agent.post(url).set("Content-Type", "application/json");
        if let Some(token) = bearer {
            req = req.set("Authorization", &format!("Bearer {token}"));
        }
        let resp = match req.send_string(body) {
            Ok(r) => r,
            Err(ureq::Error::Status(_, r)) => r,
            Err(ureq::Error::Transport(t)) => return Err(TransportError(t.to_string())),
        };
        let status = resp.status();
        let body = resp
            .into_string()
            .map_err(|e| TransportError(format!("reading response body: {e}")))?;
        Ok(HttpResponse { status, body })
    }
}

/// Panics on use. Wire it into anything that must stay offline.
pub struct ForbiddenTransport;

impl Transport for ForbiddenTransport {
    fn post_json(&self, url: &str, _: Option<&str>, _: &str) -> Result<HttpResponse, TransportError> {
        panic!("network access attempted: POST {url}");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bearer_from_env() {
        let mut ep = EndpointConfig::new("http://x");
        assert_eq!(ep.bearer_token(), None);
        ep.api_key_env = Some("IGTMT_TEST_TOKEN_UNSET_VAR".into());
        assert_eq!(ep.bearer_token(), None);
        ep.api_key_env = Some("PATH".into());
        assert!(ep.bearer_token().is_some());
    }

    #[test]
    fn unreachable_host_is_transport_error() {
        let t = UreqTransport::new(Duration::from_secs(2));
        assert!(t.post_json("http://127.0.0.1:9/v1", None, "{}").is_err());
    }
}
