//! `RemoteProvider` against a scripted HTTP server on a loopback socket.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use riskscan::embed::{EmbeddingProvider, ManualClock, RemoteConfig, RemoteProvider};
use serde_json::{json, Value};

#[derive(Debug, Clone)]
struct Seen {
    authorization: Option<String>,
    body: Value,
}

type Reply = Box<dyn Fn(&Value) -> (u16, String) + Send>;

/// Serves one scripted reply per connection, then keeps repeating the last.
fn serve(replies: Vec<Reply>) -> (String, Arc<Mutex<Vec<Seen>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    thread::spawn(move || {
        for (i, stream) in listener.incoming().enumerate() {
            let Ok(mut stream) = stream else { break };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0;
            let mut authorization = None;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap() == 0 || line == "\r\n" {
                    break;
                }
                let (name, value) = line.split_once(':').unwrap_or((&line, ""));
                match name.to_ascii_lowercase().as_str() {
                    "content-length" => length = value.trim().parse().unwrap(),
                    "authorization" => authorization = Some(value.trim().to_string()),
                    _ => {}
                }
            }
            let mut body = vec![0; length];
            reader.read_exact(&mut body).unwrap();
            let body: Value = serde_json::from_slice(&body).unwrap();
            let (status, text) = replies[i.min(replies.len() - 1)](&body);
            log.lock().unwrap().push(Seen { authorization, body });
            let head = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                text.len()
            );
            stream.write_all(head.as_bytes()).unwrap();
            stream.write_all(text.as_bytes()).unwrap();
        }
    });
    (format!("http://{addr}/v1/embeddings"), seen)
}

/// Embedding of input `i` is `[i, len(text)]`; items come back in reverse order.
fn reversed_ok() -> Reply {
    Box::new(|body: &Value| {
        let inputs = body["input"].as_array().unwrap();
        let data: Vec<Value> = inputs
            .iter()
            .enumerate()
            .rev()
            .map(|(i, t)| json!({"index": i, "embedding": [i as f32, t.as_str().unwrap().len() as f32]}))
            .collect();
        (200, json!({ "data": data }).to_string())
    })
}

fn status(code: u16) -> Reply {
    Box::new(move |_| (code, format!("{{\"error\": \"status {code}\"}}")))
}

fn config(endpoint: &str) -> RemoteConfig {
    let mut cfg = RemoteConfig::new(endpoint, "test-model", 2);
    cfg.api_key = Some("sk-test".into());
    cfg.requests_per_minute = 1000;
    cfg.max_retries = 3;
    cfg.backoff_base = Duration::from_millis(100);
    cfg.backoff_max = Duration::from_secs(1);
    cfg.timeout = Duration::from_secs(10);
    cfg
}

fn texts(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn aligns_vectors_by_index_and_sends_credentials() {
    let (url, seen) = serve(vec![reversed_ok()]);
    let clock = Arc::new(ManualClock::default());
    let p = RemoteProvider::with_clock(config(&url), clock.clone());
    let out = p.embed(&texts(&["a", "bbb", "cc"])).unwrap();
    assert_eq!(out, vec![vec![0.0, 1.0], vec![1.0, 3.0], vec![2.0, 2.0]]);
    assert_eq!(p.attempts(), 1);
    assert!(clock.sleeps().is_empty());

    let seen = seen.lock().unwrap();
    assert_eq!(seen[0].authorization.as_deref(), Some("Bearer sk-test"));
    assert_eq!(seen[0].body["model"], "test-model");
    assert_eq!(seen[0].body["input"], json!(["a", "bbb", "cc"]));
}

#[test]
fn empty_input_makes_no_request() {
    let (url, seen) = serve(vec![reversed_ok()]);
    let p = RemoteProvider::with_clock(config(&url), Arc::new(ManualClock::default()));
    assert!(p.embed(&[]).unwrap().is_empty());
    assert_eq!(p.attempts(), 0);
    assert!(seen.lock().unwrap().is_empty());
}

#[test]
fn retries_throttling_and_server_errors_with_backoff() {
    let (url, _) = serve(vec![status(429), status(503), reversed_ok()]);
    let clock = Arc::new(ManualClock::default());
    let p = RemoteProvider::with_clock(config(&url), clock.clone());
    let out = p.embed(&texts(&["x"])).unwrap();
    assert_eq!(out, vec![vec![0.0, 1.0]]);
    assert_eq!(p.attempts(), 3);
    assert_eq!(clock.sleeps(), vec![Duration::from_millis(100), Duration::from_millis(200)]);
}

#[test]
fn gives_up_after_max_retries_with_capped_backoff() {
    let (url, seen) = serve(vec![status(500)]);
    let clock = Arc::new(ManualClock::default());
    let mut cfg = config(&url);
    cfg.max_retries = 4;
    cfg.backoff_base = Duration::from_millis(300);
    let p = RemoteProvider::with_clock(cfg, clock.clone());
    let err = p.embed(&texts(&["x"])).unwrap_err();
    assert!(err.0.contains("gave up after 5 attempts"), "{}", err.0);
    assert_eq!(p.attempts(), 5);
    assert_eq!(seen.lock().unwrap().len(), 5);
    let ms: Vec<u128> = clock.sleeps().iter().map(Duration::as_millis).collect();
    assert_eq!(ms, vec![300, 600, 1000, 1000]);
}

#[test]
fn client_errors_are_not_retried() {
    let (url, _) = serve(vec![status(400), reversed_ok()]);
    let clock = Arc::new(ManualClock::default());
    let p = RemoteProvider::with_clock(config(&url), clock.clone());
    let err = p.embed(&texts(&["x"])).unwrap_err();
    assert!(err.0.contains("HTTP 400"), "{}", err.0);
    assert_eq!(p.attempts(), 1);
    assert!(clock.sleeps().is_empty());
}

#[test]
fn malformed_responses_are_fatal() {
    let cases: Vec<Reply> = vec![
        Box::new(|_| (200, "not json".into())),
        Box::new(|_| (200, json!({"data": [{"index": 0, "embedding": [1.0, 2.0, 3.0]}]}).to_string())),
        Box::new(|_| (200, json!({"data": [{"index": 0, "embedding": [1.0, 2.0]}]}).to_string())),
        Box::new(|_| {
            let item = json!({"index": 0, "embedding": [1.0, 2.0]});
            (200, json!({ "data": [item.clone(), item] }).to_string())
        }),
        Box::new(|_| (200, json!({"data": [{"index": 7, "embedding": [1.0, 2.0]}]}).to_string())),
    ];
    let expect = ["bad response JSON", "expected 2", "missing index 1", "repeated index 0", "bad or repeated index 7"];
    for (reply, want) in cases.into_iter().zip(expect) {
        let (url, _) = serve(vec![reply]);
        let p = RemoteProvider::with_clock(config(&url), Arc::new(ManualClock::default()));
        let err = p.embed(&texts(&["a", "b"])).unwrap_err();
        assert!(err.0.contains(want), "{} lacks {want}", err.0);
        assert_eq!(p.attempts(), 1);
    }
}

#[test]
fn unreachable_endpoint_is_retried_then_reported() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let clock = Arc::new(ManualClock::default());
    let mut cfg = config(&format!("http://127.0.0.1:{port}/"));
    cfg.max_retries = 1;
    let p = RemoteProvider::with_clock(cfg, clock.clone());
    let err = p.embed(&texts(&["x"])).unwrap_err();
    assert!(err.0.contains("transport"), "{}", err.0);
    assert_eq!(p.attempts(), 2);
    assert_eq!(clock.sleeps(), vec![Duration::from_millis(100)]);
}

#[test]
fn rate_limit_spaces_requests_on_the_clock() {
    let (url, seen) = serve(vec![reversed_ok()]);
    let clock = Arc::new(ManualClock::default());
    let mut cfg = config(&url);
    cfg.requests_per_minute = 2;
    let p = RemoteProvider::with_clock(cfg, clock.clone());
    for _ in 0..5 {
        p.embed(&texts(&["x"])).unwrap();
    }
    assert_eq!(seen.lock().unwrap().len(), 5);
    // Requests 3 and 5 each wait for a full window to free a slot.
    assert_eq!(clock.sleeps(), vec![Duration::from_secs(60), Duration::from_secs(60)]);
}
