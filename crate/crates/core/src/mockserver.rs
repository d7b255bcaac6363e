//! Minimal scripted chat-completions endpoint for tests and offline runs.
//!
//! Speaks just enough HTTP/1.1 over a local TCP listener to serve the
//! chat-completions shape the eval client sends. Responses are scripted per
//! question (keyed on the user-message content), with optional injected
//! failures, and every request body is logged for capture-fixture
//! assertions.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

#[derive(Debug, Clone, Default)]
pub struct MockBehavior {
    /// Completion texts indexed by the per-question call counter (the last
    /// one repeats once exhausted). An empty list yields a malformed payload.
    pub responses: Vec<String>,
    /// Respond HTTP 500 to this many calls before succeeding.
    pub fail_first: usize,
    /// Always answer with this HTTP status (e.g. 401) instead of content.
    pub status_forever: Option<u16>,
}

impl MockBehavior {
    pub fn reply(text: impl Into<String>) -> Self {
        MockBehavior { responses: vec![text.into()], ..Default::default() }
    }

    pub fn replies(texts: &[&str]) -> Self {
        MockBehavior {
            responses: texts.iter().map(|t| t.to_string()).collect(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct MockScript {
    pub default: MockBehavior,
    pub by_question: HashMap<String, MockBehavior>,
}

struct MockState {
    script: MockScript,
    request_bodies: Vec<serde_json::Value>,
    calls: HashMap<String, usize>,
}

pub struct MockServer {
    addr: std::net::SocketAddr,
    state: Arc<Mutex<MockState>>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    pub fn start(script: MockScript) -> std::io::Result<MockServer> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let state = Arc::new(Mutex::new(MockState {
            script,
            request_bodies: Vec::new(),
            calls: HashMap::new(),
        }));
        let stop = Arc::new(AtomicBool::new(false));

        let thread_state = Arc::clone(&state);
        let thread_stop = Arc::clone(&stop);
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if thread_stop.load(Ordering::Relaxed) {
                    break;
                }
                if let Ok(stream) = stream {
                    let _ = handle_connection(stream, &thread_state);
                }
            }
        });

        Ok(MockServer { addr, state, stop, handle: Some(handle) })
    }

    /// Base URL in the shape the eval client expects (`{base}/chat/completions`).
    pub fn base_url(&self) -> String {
        format!("http://{}/v1", self.addr)
    }

    /// Every request body received so far, in arrival order.
    pub fn request_bodies(&self) -> Vec<serde_json::Value> {
        self.state.lock().unwrap().request_bodies.clone()
    }

    pub fn request_count(&self) -> usize {
        self.state.lock().unwrap().request_bodies.len()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        // unblock the accept loop
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn handle_connection(stream: TcpStream, state: &Mutex<MockState>) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Ok(()); // shutdown poke or client hangup
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
            content_length = v.trim().parse().unwrap_or(0);
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;

    let (status, payload) = {
        let mut guard = state.lock().unwrap();
        match serde_json::from_slice::<serde_json::Value>(&body) {
            Ok(json) => {
                guard.request_bodies.push(json.clone());
                let question = json["messages"][0]["content"].as_str().unwrap_or("").to_string();
                respond_for(&mut guard, &question)
            }
            Err(_) => (400, serde_json::json!({"error": "bad json"}).to_string()),
        }
    };

    let reason = match status {
        200 => "OK",
        400 => "Bad Request",
        401 => "Unauthorized",
        403 => "Forbidden",
        500 => "Internal Server Error",
        _ => "Error",
    };
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    )?;
    stream.flush()
}

fn respond_for(state: &mut MockState, question: &str) -> (u16, String) {
    let behavior = state
        .script
        .by_question
        .get(question)
        .cloned()
        .unwrap_or_else(|| state.script.default.clone());

    let call = state.calls.entry(question.to_string()).or_insert(0);
    let this_call = *call;
    *call += 1;

    if let Some(status) = behavior.status_forever {
        return (status, serde_json::json!({"error": format!("scripted {status}")}).to_string());
    }
    if this_call < behavior.fail_first {
        return (500, serde_json::json!({"error": "scripted transient failure"}).to_string());
    }
    if behavior.responses.is_empty() {
        return (200, serde_json::json!({"unexpected": "shape"}).to_string());
    }
    let idx = (this_call - behavior.fail_first).min(behavior.responses.len() - 1);
    let content = &behavior.responses[idx];
    let payload = serde_json::json!({
        "id": "mock-completion",
        "object": "chat.completion",
        "model": "mock",
        "choices": [{
            "index": 0,
            "message": {"role": "assistant", "content": content},
            "finish_reason": "stop",
        }],
        "usage": {
            "prompt_tokens": question.chars().count() as u64 / 4,
            "completion_tokens": content.chars().count() as u64 / 4 + 1,
            "total_tokens": 0,
        },
    });
    (200, payload.to_string())
}
