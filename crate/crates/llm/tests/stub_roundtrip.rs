use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use igtmt_core::igt::{parse_gloss_line, LangCode};
use igtmt_core::prompt::PromptMessages;
use igtmt_llm::{
    external_score, Cache, CompletionRequest, EndpointConfig, ForbiddenTransport, GlossClient, LlmClient, LlmError,
    RetryPolicy, StubReply, StubServer, UreqTransport,
};
use proptest::prelude::*;

fn req(user: &str) -> CompletionRequest {
    CompletionRequest::translation(
        "stub-model",
        PromptMessages {
            system: "You are helpful.".into(),
            user: user.into(),
        },
    )
}

fn live_client(url: &str, dir: &std::path::Path, concurrency: usize) -> LlmClient {
    LlmClient::live(
        Cache::new(dir),
        EndpointConfig::new(format!("{url}/v1/chat/completions")),
        Arc::new(UreqTransport::default()),
        concurrency,
    )
    .with_retry(RetryPolicy::immediate(3))
}

#[test]
fn echo_stub_returns_last_user_line() {
    let stub = StubServer::echo().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let client = live_client(stub.url(), dir.path(), 1);
    let rec = client
        .complete(&req(
            "Swahili Sentence: Ninasoma.\nA translation for this Swahili sentence in English is:",
        ))
        .unwrap();
    assert_eq!(
        rec.response_text,
        "A translation for this Swahili sentence in English is:"
    );

    let seen = stub.requests();
    assert_eq!(seen.len(), 1);
    assert_eq!(seen[0].path, "/v1/chat/completions");
    assert_eq!(seen[0].body["model"], "stub-model");
    assert_eq!(seen[0].body["temperature"], 0.0);
    assert_eq!(seen[0].body["messages"][0]["role"], "system");
}

#[test]
fn bearer_token_is_sent() {
    std::env::set_var("IGTMT_STUB_TEST_KEY", "sekrit");
    let stub = StubServer::echo().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let client = LlmClient::live(
        Cache::new(dir.path()),
        EndpointConfig {
            url: stub.url().to_string(),
            api_key_env: Some("IGTMT_STUB_TEST_KEY".into()),
        },
        Arc::new(UreqTransport::default()),
        1,
    );
    client.complete(&req("x")).unwrap();
    assert_eq!(stub.requests()[0].authorization.as_deref(), Some("Bearer sekrit"));
}

#[test]
fn server_errors_are_retried_then_succeed() {
    let n = Arc::new(AtomicUsize::new(0));
    let counter = n.clone();
    let stub = StubServer::start(move |_| {
        if counter.fetch_add(1, Ordering::SeqCst) < 2 {
            StubReply::status(502, "bad gateway")
        } else {
            StubReply::chat("ok")
        }
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let client = live_client(stub.url(), dir.path(), 1);
    assert_eq!(client.complete(&req("x")).unwrap().response_text, "ok");
    assert_eq!(stub.hits(), 3);
}

#[test]
fn bad_request_is_terminal_with_body() {
    let stub = StubServer::start(|_| StubReply::status(400, "{\"error\":\"bad model\"}")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let client = live_client(stub.url(), dir.path(), 1);
    match client.complete(&req("x")) {
        Err(LlmError::Http { status: 400, body }) => assert!(body.contains("bad model")),
        other => panic!("{other:?}"),
    }
    assert_eq!(stub.hits(), 1);
}

#[test]
fn replay_never_touches_the_network_and_is_byte_stable() {
    let stub = StubServer::echo().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let live = live_client(stub.url(), dir.path(), 4);
    let prompts: Vec<String> = (0..5).map(|i| format!("line {i}\nanswer é{i}")).collect();
    for p in &prompts {
        live.complete(&req(p)).unwrap();
    }
    let hits = stub.hits();

    let replay = LlmClient::replay(Cache::new(dir.path()), Arc::new(ForbiddenTransport));
    for p in &prompts {
        let a = replay.complete(&req(p)).unwrap();
        let b = replay.complete(&req(p)).unwrap();
        assert_eq!(a.response_text.as_bytes(), b.response_text.as_bytes());
        assert_eq!(a.response_text, p.lines().last().unwrap());
    }
    assert_eq!(stub.hits(), hits);
}

#[test]
fn resumed_live_run_only_calls_for_missing_entries() {
    let stub = StubServer::echo().unwrap();
    let dir = tempfile::tempdir().unwrap();
    live_client(stub.url(), dir.path(), 1).complete(&req("first")).unwrap();
    let client = live_client(stub.url(), dir.path(), 1);
    for p in ["first", "second", "third"] {
        client.complete(&req(p)).unwrap();
    }
    assert_eq!(client.network_calls(), 2);
    assert_eq!(stub.hits(), 3);
}

#[test]
fn gloss_client_over_the_wire() {
    let stub = StubServer::start(|r| {
        assert!(r.last_user_message().unwrap().starts_with("Provide the glosses"));
        assert_eq!(r.body["messages"].as_array().unwrap().len(), 1);
        assert_eq!(r.body["max_tokens"], 256);
        StubReply::chat("3SG -PST --see-FV 3SG")
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let gc = GlossClient::new(live_client(stub.url(), dir.path(), 1), "glosser");
    let p = gc
        .predict_gloss("(yeye) alimwona (yeye).", &LangCode::new("swa"))
        .unwrap();
    assert_eq!(p.gloss, parse_gloss_line("3SG -PST --see-FV 3SG"));
}

#[test]
fn external_scorer_passthrough() {
    let stub = StubServer::fixed_score(50.0).unwrap();
    let ep = EndpointConfig::new(format!("{}/score", stub.url()));
    let t = UreqTransport::default();
    let r = external_score(&["a b"], &["a c"], &["x y"], &ep, &t).unwrap();
    assert_eq!(r.corpus_score, 50.0);
    assert_eq!(r.sentence_count, 1);
    let body = &stub.requests()[0].body;
    assert_eq!(body["hypotheses"][0], "a b");
    assert_eq!(body["references"][0], "a c");
    assert_eq!(body["sources"][0], "x y");

    let empty: [&str; 0] = [];
    let err = external_score(&empty, &empty, &empty, &ep, &t).unwrap_err();
    assert_eq!(err.to_string(), "empty corpus");
}

#[test]
fn external_scorer_down_is_an_error() {
    let ep = EndpointConfig::new("http://127.0.0.1:9/score");
    let t = UreqTransport::new(std::time::Duration::from_secs(2));
    assert!(external_score(&["a"], &["a"], &["a"], &ep, &t).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn replay_is_sound_for_any_prompt(user in "\\PC{0,60}", reply in "\\PC{0,60}") {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let r = req(&user);
        cache.put(&igtmt_llm::CompletionRecord {
            request: r.clone(),
            response_text: reply.clone(),
            latency_ms: 1,
            backend: igtmt_llm::Backend::Live,
        }).unwrap();
        let replay = LlmClient::replay(Cache::new(dir.path()), Arc::new(ForbiddenTransport));
        prop_assert_eq!(replay.complete(&r).unwrap().response_text, reply);
    }
}
