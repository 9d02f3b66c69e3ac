//! A small local HTTP server speaking the chat-completions and scorer wire
//! formats, for tests, smoke runs and cache generation.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use serde_json::{json, Value};

#[derive(Clone, Debug)]
pub struct StubRequest {
    pub path: String,
    pub authorization: Option<String>,
    pub body: Value,
}

impl StubRequest {
    /// Content of the last user message in a chat request.
    pub fn last_user_message(&self) -> Option<&str> {
        self.body["messages"]
            .as_array()?
            .iter()
            .rev()
            .find(|m| m["role"] == "user")?["content"]
            .as_str()
    }
}

#[derive(Clone, Debug)]
pub struct StubReply {
    pub status: u16,
    pub body: String,
}

impl StubReply {
    pub fn chat(text: &str) -> Self {
        Self::json(json!({
            "choices": [{"index": 0, "message": {"role": "assistant", "content": text}}]
        }))
    }

    pub fn json(value: Value) -> Self {
        Self {
            status: 200,
            body: value.to_string(),
        }
    }

    pub fn status(status: u16, body: &str) -> Self {
        Self {
            status,
            body: body.to_string(),
        }
    }
}

type Responder = dyn Fn(&StubRequest) -> StubReply + Send + Sync;

pub struct StubServer {
    url: String,
    stop: Arc<AtomicBool>,
    hits: Arc<AtomicUsize>,
    seen: Arc<Mutex<Vec<StubRequest>>>,
    handle: Option<JoinHandle<()>>,
}

impl StubServer {
    pub fn start<F>(responder: F) -> std::io::Result<Self>
    where
        F: Fn(&StubRequest) -> StubReply + Send + Sync + 'static,
    {
        let server = tiny_http::Server::http("127.0.0.1:0").map_err(std::io::Error::other)?;
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| std::io::Error::other("stub bound to a non-IP address"))?;
        let stop = Arc::new(AtomicBool::new(false));
        let hits = Arc::new(AtomicUsize::new(0));
        let seen = Arc::new(Mutex::new(Vec::new()));
        let responder: Arc<Responder> = Arc::new(responder);
        let handle = {
            let (stop, hits, seen) = (stop.clone(), hits.clone(), seen.clone());
            std::thread::spawn(move || serve(server, responder, stop, hits, seen))
        };
        Ok(Self {
            url: format!("http://{addr}"),
            stop,
            hits,
            seen,
            handle: Some(handle),
        })
    }

    /// Chat stub that answers with the last non-empty line of the user message.
    pub fn echo() -> std::io::Result<Self> {
        Self::start(|req| {
            let line = req
                .last_user_message()
                .and_then(|m| m.lines().rev().find(|l| !l.trim().is_empty()))
                .unwrap_or("")
                .to_string();
            StubReply::chat(&line)
        })
    }

    /// Scorer stub returning a fixed corpus score.
    pub fn fixed_score(score: f64) -> std::io::Result<Self> {
        Self::start(move |_| StubReply::json(json!({ "score": score })))
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    pub fn requests(&self) -> Vec<StubRequest> {
        self.seen.lock().unwrap_or_else(|p| p.into_inner()).clone()
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve(
    server: tiny_http::Server,
    responder: Arc<Responder>,
    stop: Arc<AtomicBool>,
    hits: Arc<AtomicUsize>,
    seen: Arc<Mutex<Vec<StubRequest>>>,
) {
    while !stop.load(Ordering::SeqCst) {
        let mut request = match server.recv_timeout(Duration::from_millis(20)) {
            Ok(Some(r)) => r,
            Ok(None) => continue,
            Err(_) => break,
        };
        hits.fetch_add(1, Ordering::SeqCst);
        let mut raw = String::new();
        let _ = request.as_reader().read_to_string(&mut raw);
        let authorization = request
            .headers()
            .iter()
            .find(|h| h.field.equiv("Authorization"))
            .map(|h| h.value.to_string());
        let parsed = StubRequest {
            path: request.url().to_string(),
            authorization,
            body: serde_json::from_str(&raw).unwrap_or(Value::Null),
        };
        let reply = responder(&parsed);
        seen.lock().unwrap_or_else(|p| p.into_inner()).push(parsed);
        let header = tiny_http::Header::from_bytes("Content-Type", "application/json").expect("static header");
        let response = tiny_http::Response::from_string(reply.body)
            .with_status_code(reply.status)
            .with_header(header);
        let _ = request.respond(response);
    }
}
