use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;

use narrative_mobility::backend::{GenerationParams, Prompt, RemoteBackend, TextBackend};
use narrative_mobility::error::BackendError;
use serde_json::Value;

struct Seen {
    headers: Vec<String>,
    body: Value,
}

/// Serves one canned (status, body) pair per connection, in order, and
/// reports each request it saw.
fn stub(replies: Vec<(u16, String)>) -> (String, mpsc::Receiver<Seen>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, body) in replies {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut headers = Vec::new();
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end().to_string();
                if line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                headers.push(line);
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            let _ = tx.send(Seen { headers, body: serde_json::from_slice(&buf).unwrap_or(Value::Null) });
            let resp = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(resp.as_bytes()).unwrap();
        }
    });
    (url, rx)
}

fn ok_body(content: &str) -> String {
    serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
}

fn prompt() -> Prompt {
    Prompt { template: "narrative".into(), system: "sys text".into(), user: "user text".into() }
}

fn fast() -> GenerationParams {
    GenerationParams { backoff_base_s: 0.01, timeout_s: 5.0, ..GenerationParams::default() }
}

#[test]
fn sends_chat_request_and_reads_content() {
    let (url, rx) = stub(vec![(200, ok_body("a diary"))]);
    let b = RemoteBackend::new(url, "local-model", Some("k-123".into()), 4).unwrap();
    assert_eq!(b.complete(&prompt(), &fast().with_temperature(0.0)).unwrap(), "a diary");
    let seen = rx.recv().unwrap();
    assert!(seen.headers.iter().any(|h| h.eq_ignore_ascii_case("authorization: Bearer k-123")));
    assert_eq!(seen.body["model"], "local-model");
    assert_eq!(seen.body["temperature"], 0.0);
    assert_eq!(seen.body["messages"][0]["role"], "system");
    assert_eq!(seen.body["messages"][0]["content"], "sys text");
    assert_eq!(seen.body["messages"][1]["content"], "user text");
}

#[test]
fn no_key_means_no_authorization_header() {
    let (url, rx) = stub(vec![(200, ok_body("x"))]);
    RemoteBackend::new(url, "m", None, 1).unwrap().complete(&prompt(), &fast()).unwrap();
    assert!(!rx.recv().unwrap().headers.iter().any(|h| h.to_ascii_lowercase().starts_with("authorization")));
}

#[test]
fn retries_server_errors_then_succeeds() {
    let (url, rx) = stub(vec![(503, "{}".into()), (429, "{}".into()), (200, ok_body("third time"))]);
    let b = RemoteBackend::new(url, "m", None, 1).unwrap();
    assert_eq!(b.complete(&prompt(), &fast()).unwrap(), "third time");
    assert_eq!(rx.try_iter().count(), 3);
}

#[test]
fn gives_up_after_the_retry_budget() {
    let (url, rx) = stub(vec![(500, "{}".into()); 3]);
    let b = RemoteBackend::new(url, "m", None, 1).unwrap();
    match b.complete(&prompt(), &fast()) {
        Err(BackendError::Unavailable { attempts, .. }) => assert_eq!(attempts, 3),
        other => panic!("{other:?}"),
    }
    assert_eq!(rx.try_iter().count(), 3);
}

#[test]
fn client_errors_and_bad_payloads_are_not_retried() {
    let (url, rx) = stub(vec![(400, r#"{"error":"bad"}"#.into())]);
    let b = RemoteBackend::new(url, "m", None, 1).unwrap();
    match b.complete(&prompt(), &fast()) {
        Err(BackendError::Protocol { body, .. }) => assert!(body.contains("bad")),
        other => panic!("{other:?}"),
    }
    assert_eq!(rx.try_iter().count(), 1);

    let (url, _rx) = stub(vec![(200, r#"{"choices":[]}"#.into())]);
    let b = RemoteBackend::new(url, "m", None, 1).unwrap();
    assert!(matches!(b.complete(&prompt(), &fast()), Err(BackendError::Protocol { .. })));
}

#[test]
fn unreachable_endpoint_is_unavailable() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let b = RemoteBackend::new(format!("http://127.0.0.1:{port}/v1/chat/completions"), "m", None, 1).unwrap();
    let params = GenerationParams { max_retries: 1, ..fast() };
    assert!(matches!(b.complete(&prompt(), &params), Err(BackendError::Unavailable { attempts: 2, .. })));
}
