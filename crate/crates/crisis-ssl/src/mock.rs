//! In-process chat-completion server for exercising the remote client offline.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use tiny_http::{Header, Response, Server};

type Responder = dyn Fn(&str) -> String + Send + Sync;

/// How the mock answers. The responder sees the last line of the user message,
/// which is where the default prompt template puts the post text.
#[derive(Clone)]
pub struct MockBehavior {
    responder: Arc<Responder>,
    /// Answer this many requests with `fail_status` before behaving normally.
    pub fail_first: usize,
    pub fail_status: u16,
    /// When set, requests without `Authorization: Bearer <token>` get 401.
    pub required_token: Option<String>,
}

impl MockBehavior {
    pub fn fixed(response: impl Into<String>) -> Self {
        let response = response.into();
        Self::from_fn(move |_| response.clone())
    }

    pub fn from_fn(f: impl Fn(&str) -> String + Send + Sync + 'static) -> Self {
        Self { responder: Arc::new(f), fail_first: 0, fail_status: 503, required_token: None }
    }

    pub fn failing_first(mut self, n: usize, status: u16) -> Self {
        self.fail_first = n;
        self.fail_status = status;
        self
    }

    pub fn requiring_token(mut self, token: impl Into<String>) -> Self {
        self.required_token = Some(token.into());
        self
    }
}

#[derive(Debug, Clone)]
pub struct RecordedRequest {
    pub at: Instant,
    pub status: u16,
    /// Last line of the user message.
    pub text: String,
    pub model: String,
}

/// Serves until dropped.
pub struct MockServer {
    addr: SocketAddr,
    requests: Arc<Mutex<Vec<RecordedRequest>>>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    pub fn start(behavior: MockBehavior) -> std::io::Result<Self> {
        let server = Server::http("127.0.0.1:0").map_err(std::io::Error::other)?;
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| std::io::Error::other("mock server is not bound to an IP address"))?;
        let requests = Arc::new(Mutex::new(Vec::new()));
        let stop = Arc::new(AtomicBool::new(false));
        let handle = {
            let (requests, stop) = (requests.clone(), stop.clone());
            thread::spawn(move || serve(server, behavior, requests, stop))
        };
        Ok(Self { addr, requests, stop, handle: Some(handle) })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn requests(&self) -> Vec<RecordedRequest> {
        self.requests.lock().expect("mock request log poisoned").clone()
    }

    pub fn request_count(&self) -> usize {
        self.requests.lock().expect("mock request log poisoned").len()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn serve(server: Server, behavior: MockBehavior, requests: Arc<Mutex<Vec<RecordedRequest>>>, stop: Arc<AtomicBool>) {
    let mut served = 0usize;
    while !stop.load(Ordering::SeqCst) {
        let mut request = match server.recv_timeout(Duration::from_millis(20)) {
            Ok(Some(r)) => r,
            Ok(None) => continue,
            Err(_) => break,
        };
        let at = Instant::now();
        let mut body = String::new();
        let _ = request.as_reader().read_to_string(&mut body);
        let parsed: Value = serde_json::from_str(&body).unwrap_or(Value::Null);
        let content = parsed.pointer("/messages/0/content").and_then(Value::as_str).unwrap_or("");
        let text = content.lines().last().unwrap_or("").trim_start_matches("Tweet: ").to_string();
        let model = parsed.get("model").and_then(Value::as_str).unwrap_or("").to_string();
        let authorized = match &behavior.required_token {
            None => true,
            Some(token) => request.headers().iter().any(|h| {
                h.field.equiv("Authorization") && h.value.as_str() == format!("Bearer {token}")
            }),
        };
        let (status, payload) = if !authorized {
            (401, json!({"error": {"message": "invalid token"}}))
        } else if served < behavior.fail_first {
            (behavior.fail_status, json!({"error": {"message": "injected failure"}}))
        } else {
            let answer = (behavior.responder)(&text);
            (200, json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": answer}}]}))
        };
        served += 1;
        requests.lock().expect("mock request log poisoned").push(RecordedRequest { at, status, text, model });
        let header = Header::from_bytes("Content-Type", "application/json").expect("static header is valid");
        let _ = request.respond(Response::from_string(payload.to_string()).with_status_code(status).with_header(header));
    }
}
