use std::sync::atomic::{AtomicUsize, Ordering};

use igtmt_core::igt::{parse_gloss_line, GlossLine, LangCode};
use igtmt_core::prompt::{build_glossing_prompt, Segmented};

use crate::client::LlmClient;
use crate::request::CompletionRequest;
use crate::LlmError;

#[derive(Clone, Debug, PartialEq)]
pub struct GlossPrediction {
    pub gloss: GlossLine,
    pub raw: String,
    pub warning: Option<String>,
    pub latency_ms: u64,
}

/// Client for an external gloss-generation model, sharing the chat wire and
/// cache machinery of [`LlmClient`].
pub struct GlossClient {
    client: LlmClient,
    model_id: String,
    calls: AtomicUsize,
}

impl GlossClient {
    pub fn new(client: LlmClient, model_id: impl Into<String>) -> Self {
        Self {
            client,
            model_id: model_id.into(),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn client(&self) -> &LlmClient {
        &self.client
    }

    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn request_for(&self, transcription: &str, language: &LangCode) -> Result<CompletionRequest, LlmError> {
        let messages = build_glossing_prompt(transcription, &language.display_name(), Segmented::No)
            .map_err(|e| LlmError::Prompt(e.to_string()))?;
        Ok(CompletionRequest::glossing(&self.model_id, messages))
    }

    pub fn predict_gloss(&self, transcription: &str, language: &LangCode) -> Result<GlossPrediction, LlmError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let request = self.request_for(transcription, language)?;
        let record = self.client.complete(&request)?;
        let latency_ms = record.latency_ms;
        let raw = record.response_text;
        // gloss models sometimes answer on several lines; the first non-empty one is the gloss
        let line = raw.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
        let gloss = parse_gloss_line(line);
        let warning = gloss
            .is_empty()
            .then(|| format!("gloss model returned no gloss for {transcription:?}"));
        if let Some(w) = &warning {
            log::warn!("{w}");
        }
        Ok(GlossPrediction {
            gloss,
            raw,
            warning,
            latency_ms,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cache::Cache;
    use crate::request::{Backend, CompletionRecord};
    use crate::transport::ForbiddenTransport;
    use std::sync::Arc;

    fn seeded(dir: &std::path::Path, reply: &str) -> GlossClient {
        let replay = LlmClient::replay(Cache::new(dir), Arc::new(ForbiddenTransport));
        let gc = GlossClient::new(replay, "glosser");
        let request = gc.request_for("alimwona", &LangCode::new("swa")).unwrap();
        gc.client()
            .cache()
            .put(&CompletionRecord {
                request,
                response_text: reply.into(),
                latency_ms: 0,
                backend: Backend::Live,
            })
            .unwrap();
        gc
    }

    #[test]
    fn cached_reply_is_parsed() {
        let dir = tempfile::tempdir().unwrap();
        let gc = seeded(dir.path(), "3SG -PST --see-FV 3SG");
        let p = gc.predict_gloss("alimwona", &LangCode::new("swa")).unwrap();
        assert_eq!(p.gloss, parse_gloss_line("3SG -PST --see-FV 3SG"));
        assert_eq!(p.warning, None);
        assert_eq!(gc.call_count(), 1);
    }

    #[test]
    fn empty_reply_warns() {
        let dir = tempfile::tempdir().unwrap();
        let gc = seeded(dir.path(), "  \n");
        let p = gc.predict_gloss("alimwona", &LangCode::new("swa")).unwrap();
        assert!(p.gloss.is_empty());
        assert!(p.warning.is_some());
    }

    #[test]
    fn miss_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let gc = seeded(dir.path(), "x");
        assert!(matches!(
            gc.predict_gloss("kitabu", &LangCode::new("swa")),
            Err(LlmError::ReplayMiss { .. })
        ));
    }

    #[test]
    fn request_uses_glossing_template() {
        let gc = GlossClient::new(
            LlmClient::replay(Cache::new("/nonexistent"), Arc::new(ForbiddenTransport)),
            "g",
        );
        let r = gc.request_for("alimwona", &LangCode::new("swa")).unwrap();
        assert_eq!(r.max_tokens, 256);
        assert!(r.messages.system.is_empty());
        assert!(r
            .messages
            .user
            .starts_with("Provide the glosses for the transcription in Swahili."));
    }
}
