use serde_json::{json, Value};

use igtmt_core::metrics::ScoreReport;

use crate::transport::{EndpointConfig, Transport};
use crate::LlmError;

/// Forward a corpus to an external scoring service and return its corpus
/// score unchanged.
pub fn external_score<S: AsRef<str>>(
    hypotheses: &[S],
    references: &[S],
    sources: &[S],
    endpoint: &EndpointConfig,
    transport: &dyn Transport,
) -> Result<ScoreReport, LlmError> {
    if hypotheses.is_empty() {
        return Err(LlmError::Scorer("empty corpus".into()));
    }
    if references.len() != hypotheses.len() || sources.len() != hypotheses.len() {
        return Err(LlmError::Scorer(format!(
            "length mismatch: {} hypotheses, {} references, {} sources",
            hypotheses.len(),
            references.len(),
            sources.len()
        )));
    }
    let strings = |v: &[S]| v.iter().map(|s| s.as_ref().to_string()).collect::<Vec<_>>();
    let body = json!({
        "sources": strings(sources),
        "hypotheses": strings(hypotheses),
        "references": strings(references),
    });
    let token = endpoint.bearer_token();
    let resp = transport
        .post_json(&endpoint.url, token.as_deref(), &body.to_string())
        .map_err(|e| LlmError::Scorer(format!("scorer unavailable: {e}")))?;
    if !(200..300).contains(&resp.status) {
        return Err(LlmError::Http {
            status: resp.status,
            body: resp.body,
        });
    }
    let v: Value = serde_json::from_str(&resp.body).map_err(|e| LlmError::Malformed(format!("invalid JSON: {e}")))?;
    let score = v["score"]
        .as_f64()
        .filter(|s| s.is_finite())
        .ok_or_else(|| LlmError::Malformed("missing numeric score".into()))?;
    Ok(ScoreReport::new(
        "external",
        score,
        hypotheses.len(),
        &format!("external|url:{}", endpoint.url),
    ))
}
