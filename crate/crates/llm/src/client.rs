use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use crate::cache::Cache;
use crate::request::{Backend, CompletionRecord, CompletionRequest};
use crate::transport::{EndpointConfig, Transport};
use crate::LlmError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Total attempts, including the first.
    pub attempts: u32,
    /// Delay before the second attempt; doubles after each further failure.
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::from_secs(1),
        }
    }
}

impl RetryPolicy {
    pub fn immediate(attempts: u32) -> Self {
        Self {
            attempts,
            base_delay: Duration::ZERO,
        }
    }

    /// Delay after failed attempt number `attempt` (0-based).
    pub fn delay(&self, attempt: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(attempt)
    }
}

/// Counting semaphore bounding in-flight live requests.
#[derive(Debug)]
struct Limiter {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|p| p.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|p| p.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|p| p.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

enum Mode {
    Replay,
    Live {
        endpoint: EndpointConfig,
        retry: RetryPolicy,
    },
}

/// Chat-completion client. Shareable across threads.
pub struct LlmClient {
    mode: Mode,
    cache: Cache,
    transport: Arc<dyn Transport>,
    limiter: Limiter,
    requests: AtomicUsize,
    network_calls: AtomicUsize,
}

impl LlmClient {
    /// Serves cached records only. The transport is never touched.
    pub fn replay(cache: Cache, transport: Arc<dyn Transport>) -> Self {
        Self::build(Mode::Replay, cache, transport, 1)
    }

    /// Answers from the cache when possible, otherwise calls the endpoint and
    /// caches the result. At most `concurrency` calls are in flight.
    pub fn live(cache: Cache, endpoint: EndpointConfig, transport: Arc<dyn Transport>, concurrency: usize) -> Self {
        Self::build(
            Mode::Live {
                endpoint,
                retry: RetryPolicy::default(),
            },
            cache,
            transport,
            concurrency,
        )
    }

    fn build(mode: Mode, cache: Cache, transport: Arc<dyn Transport>, concurrency: usize) -> Self {
        Self {
            mode,
            cache,
            transport,
            limiter: Limiter::new(concurrency),
            requests: AtomicUsize::new(0),
            network_calls: AtomicUsize::new(0),
        }
    }

    pub fn with_retry(mut self, policy: RetryPolicy) -> Self {
        if let Mode::Live { retry, .. } = &mut self.mode {
            *retry = policy;
        }
        self
    }

    pub fn backend(&self) -> Backend {
        match self.mode {
            Mode::Replay => Backend::Replay,
            Mode::Live { .. } => Backend::Live,
        }
    }

    pub fn cache(&self) -> &Cache {
        &self.cache
    }

    /// Number of `complete` calls served, cached or not.
    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    /// Number of HTTP attempts made.
    pub fn network_calls(&self) -> usize {
        self.network_calls.load(Ordering::SeqCst)
    }

    pub fn complete(&self, request: &CompletionRequest) -> Result<CompletionRecord, LlmError> {
        self.requests.fetch_add(1, Ordering::SeqCst);
        let key = request.cache_key();
        let cached = self.cache.get(&key)?;
        match &self.mode {
            Mode::Replay => {
                let mut rec = cached.ok_or(LlmError::ReplayMiss { key })?;
                rec.backend = Backend::Replay;
                Ok(rec)
            }
            Mode::Live { endpoint, retry } => {
                if let Some(rec) = cached {
                    return Ok(rec);
                }
                let _permit = self.limiter.acquire();
                let started = Instant::now();
                let text = self.call_with_retry(endpoint, retry, request)?;
                let record = CompletionRecord {
                    request: request.clone(),
                    response_text: text,
                    latency_ms: started.elapsed().as_millis() as u64,
                    backend: Backend::Live,
                };
                self.cache.put(&record)?;
                Ok(record)
            }
        }
    }

    fn call_with_retry(
        &self,
        endpoint: &EndpointConfig,
        retry: &RetryPolicy,
        request: &CompletionRequest,
    ) -> Result<String, LlmError> {
        let body = wire_body(request).to_string();
        let token = endpoint.bearer_token();
        let attempts = retry.attempts.max(1);
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(retry.delay(attempt - 1));
            }
            self.network_calls.fetch_add(1, Ordering::SeqCst);
            match self.transport.post_json(&endpoint.url, token.as_deref(), &body) {
                Err(e) => last = e.0,
                Ok(resp) if resp.status == 429 || resp.status >= 500 => {
                    last = format!("HTTP {}: {}", resp.status, resp.body);
                }
                Ok(resp) if !(200..300).contains(&resp.status) => {
                    return Err(LlmError::Http {
                        status: resp.status,
                        body: resp.body,
                    });
                }
                Ok(resp) => return parse_completion(&resp.body),
            }
            log::warn!(
                "attempt {} of {} to {} failed: {last}",
                attempt + 1,
                attempts,
                endpoint.url
            );
        }
        Err(LlmError::Exhausted {
            attempts,
            last_error: last,
        })
    }
}

/// Chat-completions request body. An empty system message is omitted.
pub fn wire_body(request: &CompletionRequest) -> Value {
    let mut messages = Vec::new();
    if !request.messages.system.is_empty() {
        messages.push(json!({"role": "system", "content": request.messages.system}));
    }
    messages.push(json!({"role": "user", "content": request.messages.user}));
    json!({
        "model": request.model_id,
        "messages": messages,
        "temperature": request.wire_temperature(),
        "max_tokens": request.max_tokens,
    })
}

fn parse_completion(body: &str) -> Result<String, LlmError> {
    let v: Value = serde_json::from_str(body).map_err(|e| LlmError::Malformed(format!("invalid JSON: {e}")))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| LlmError::Malformed("missing choices[0].message.content".into()))
}
