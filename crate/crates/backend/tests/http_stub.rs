//! Integration tests for the HTTP backend against a local stub server.
//!
//! The stub is a plain `TcpListener` that serves a scripted sequence of
//! responses and records every request it sees, so the tests can assert on
//! wire-level behaviour: request JSON shape, bearer auth, retry counts, and
//! the no-retry rule for auth failures.

use std::io::{Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;

use tgkit_backend::{Backend, BackendError, BackendKind, BackendSpec, GenParams, HttpBackend};

/// One recorded request: the request line, the auth header (if any), and the
/// JSON body.
struct Recorded {
    request_line: String,
    auth: Option<String>,
    body: serde_json::Value,
}

/// Serve `responses` in order on a fresh port, one connection per response,
/// and return the base URL plus a receiver of recorded requests.
fn stub_server(responses: Vec<(u16, String)>) -> (String, mpsc::Receiver<Recorded>) {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub listener");
    let url = format!("http://{}/v1/completions", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, body) in responses {
            let (mut stream, _) = match listener.accept() {
                Ok(pair) => pair,
                Err(_) => return,
            };
            let mut raw = Vec::new();
            let mut buf = [0u8; 4096];
            // Read headers, then exactly Content-Length body bytes.
            let header_end = loop {
                let n = stream.read(&mut buf).unwrap_or(0);
                if n == 0 {
                    break None;
                }
                raw.extend_from_slice(&buf[..n]);
                if let Some(pos) = find_subslice(&raw, b"\r\n\r\n") {
                    break Some(pos + 4);
                }
            };
            let Some(header_end) = header_end else { return };
            let head = String::from_utf8_lossy(&raw[..header_end]).to_string();
            let content_length: usize = head
                .lines()
                .find_map(|l| l.to_ascii_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse().unwrap()))
                .unwrap_or(0);
            while raw.len() < header_end + content_length {
                let n = stream.read(&mut buf).unwrap_or(0);
                if n == 0 {
                    break;
                }
                raw.extend_from_slice(&buf[..n]);
            }
            let record = Recorded {
                request_line: head.lines().next().unwrap_or("").to_string(),
                auth: head
                    .lines()
                    .find_map(|l| l.to_ascii_lowercase().starts_with("authorization:").then(|| l.splitn(2, ':').nth(1).unwrap().trim().to_string())),
                body: serde_json::from_slice(&raw[header_end..header_end + content_length])
                    .unwrap_or(serde_json::Value::Null),
            };
            let _ = tx.send(record);
            let reason = match status {
                200 => "OK",
                401 => "Unauthorized",
                429 => "Too Many Requests",
                500 => "Internal Server Error",
                _ => "Status",
            };
            let response = format!(
                "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len(),
            );
            let _ = stream.write_all(response.as_bytes());
        }
    });
    (url, rx)
}

fn find_subslice(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}

/// Spec pointing at the stub, with a per-test key env var so parallel tests
/// never race on process environment.
fn spec_for(url: &str, env_name: &str, max_retries: u32) -> BackendSpec {
    std::env::set_var(env_name, "stub-secret");
    BackendSpec {
        kind: BackendKind::Http,
        endpoint_url: Some(url.to_string()),
        model: "stub-model".to_string(),
        auth_env: env_name.to_string(),
        timeout_secs: 5,
        max_retries,
        max_inflight: 2,
        mock_seed: 0,
    }
}

fn completion_json(text: &str) -> String {
    serde_json::json!({ "choices": [{ "text": text }] }).to_string()
}

#[test]
fn generate_sends_completion_shape_and_bearer_auth() {
    let (url, rx) = stub_server(vec![(200, completion_json(" a quiet answer"))]);
    let backend = HttpBackend::from_spec(&spec_for(&url, "TGKIT_STUB_KEY_GEN", 0)).unwrap();
    let params = GenParams { max_tokens: 64, temperature: 0.25, seed: 7 };
    let text = backend.generate("Tell me about 1947.", &params).unwrap();
    assert_eq!(text, " a quiet answer");

    let recorded = rx.recv().unwrap();
    assert!(recorded.request_line.starts_with("POST /v1/completions"));
    assert_eq!(recorded.auth.as_deref(), Some("Bearer stub-secret"));
    assert_eq!(recorded.body["model"], "stub-model");
    assert_eq!(recorded.body["prompt"], "Tell me about 1947.");
    assert_eq!(recorded.body["max_tokens"], 64);
    assert_eq!(recorded.body["temperature"], 0.25);
    assert_eq!(recorded.body["seed"], 7);
}

#[test]
fn scoring_echoes_and_keeps_only_continuation_tokens() {
    let prompt = "The answer is ";
    let body = serde_json::json!({
        "choices": [{
            "text": format!("{prompt}True"),
            "logprobs": {
                "tokens": ["The", " answer", " is ", "True"],
                "token_logprobs": [null, -0.5, -0.25, -1.5],
                "text_offset": [0, 3, 10, 14],
            },
        }],
    })
    .to_string();
    let (url, rx) = stub_server(vec![(200, body)]);
    let backend = HttpBackend::from_spec(&spec_for(&url, "TGKIT_STUB_KEY_SCORE", 0)).unwrap();
    let scores = backend.score_continuation(prompt, "True").unwrap();
    assert_eq!(scores.len(), 1);
    assert_eq!(scores[0].token, "True");
    assert_eq!(scores[0].logprob, -1.5);

    let recorded = rx.recv().unwrap();
    assert_eq!(recorded.body["prompt"], "The answer is True");
    assert_eq!(recorded.body["max_tokens"], 0);
    assert_eq!(recorded.body["logprobs"], 0);
    assert_eq!(recorded.body["echo"], true);
}

#[test]
fn missing_logprob_block_reports_no_logprob_support() {
    let (url, _rx) = stub_server(vec![(200, completion_json("chat-only"))]);
    let backend = HttpBackend::from_spec(&spec_for(&url, "TGKIT_STUB_KEY_NOLP", 0)).unwrap();
    let err = backend.score_continuation("q", "a").unwrap_err();
    assert!(matches!(err, BackendError::NoLogprobSupport));
}

#[test]
fn auth_failure_does_not_retry() {
    let (url, rx) = stub_server(vec![
        (401, "{}".to_string()),
        (200, completion_json("should never be reached")),
    ]);
    let backend = HttpBackend::from_spec(&spec_for(&url, "TGKIT_STUB_KEY_401", 3)).unwrap();
    let err = backend.generate("hello", &GenParams::default()).unwrap_err();
    assert!(matches!(err, BackendError::AuthFailure { status: 401 }));

    // Exactly one request hit the wire despite a retry budget of 3.
    rx.recv().unwrap();
    assert!(rx.recv_timeout(std::time::Duration::from_millis(300)).is_err());
}

#[test]
fn transient_errors_retry_until_success() {
    let (url, rx) = stub_server(vec![
        (500, "{}".to_string()),
        (429, "{}".to_string()),
        (200, completion_json("third time lucky")),
    ]);
    let backend = HttpBackend::from_spec(&spec_for(&url, "TGKIT_STUB_KEY_RETRY", 3)).unwrap();
    let text = backend.generate("hello", &GenParams::default()).unwrap();
    assert_eq!(text, "third time lucky");
    let mut seen = 0;
    while rx.recv_timeout(std::time::Duration::from_millis(300)).is_ok() {
        seen += 1;
    }
    assert_eq!(seen, 3);
}
