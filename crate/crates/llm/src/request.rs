use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use igtmt_core::prompt::PromptMessages;

pub const TRANSLATION_MAX_TOKENS: u32 = 512;
pub const GLOSSING_MAX_TOKENS: u32 = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model_id: String,
    pub messages: PromptMessages,
    pub temperature: f64,
    /// Ask for deterministic decoding. Sent as temperature 0 on the wire.
    pub greedy: bool,
    pub max_tokens: u32,
}

impl CompletionRequest {
    pub fn translation(model_id: impl Into<String>, messages: PromptMessages) -> Self {
        Self {
            model_id: model_id.into(),
            messages,
            temperature: 1.0,
            greedy: true,
            max_tokens: TRANSLATION_MAX_TOKENS,
        }
    }

    pub fn glossing(model_id: impl Into<String>, messages: PromptMessages) -> Self {
        Self {
            max_tokens: GLOSSING_MAX_TOKENS,
            ..Self::translation(model_id, messages)
        }
    }

    /// Temperature actually sent to the endpoint.
    pub fn wire_temperature(&self) -> f64 {
        if self.greedy {
            0.0
        } else {
            self.temperature
        }
    }

    /// Hex SHA-256 of the canonical serialization; names the cache file.
    pub fn cache_key(&self) -> String {
        let value = serde_json::to_value(self).expect("request serializes");
        hex::encode(Sha256::digest(canonical_json(&value).as_bytes()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Live,
    Replay,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub request: CompletionRequest,
    pub response_text: String,
    pub latency_ms: u64,
    pub backend: Backend,
}

/// Compact JSON with object keys sorted at every level.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_canonical(value, &mut out);
    out
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push(':');
                write_canonical(&map[k.as_str()], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(v, out);
            }
            out.push(']');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn req() -> CompletionRequest {
        CompletionRequest::translation(
            "m",
            PromptMessages {
                system: "sys".into(),
                user: "hello".into(),
            },
        )
    }

    #[test]
    fn canonical_sorts_nested_keys() {
        let v = json!({"b": 1, "a": {"z": [1, {"y": 2, "x": "é"}], "c": null}});
        assert_eq!(canonical_json(&v), r#"{"a":{"c":null,"z":[1,{"x":"é","y":2}]},"b":1}"#);
    }

    #[test]
    fn key_is_stable_and_field_sensitive() {
        let base = req();
        assert_eq!(base.cache_key(), req().cache_key());
        assert_eq!(base.cache_key().len(), 64);

        let mut variants = vec![base.clone(); 6];
        variants[0].model_id = "other".into();
        variants[1].messages.system = "x".into();
        variants[2].messages.user = "x".into();
        variants[3].temperature = 0.5;
        variants[4].greedy = false;
        variants[5].max_tokens = 7;
        for v in variants {
            assert_ne!(v.cache_key(), base.cache_key());
        }
    }

    #[test]
    fn greedy_goes_out_as_zero() {
        let mut r = req();
        assert_eq!(r.wire_temperature(), 0.0);
        r.greedy = false;
        assert_eq!(r.wire_temperature(), 1.0);
        assert_eq!(CompletionRequest::glossing("m", r.messages.clone()).max_tokens, 256);
    }
}
