//! Minimal chat-completion stub over std TCP.

#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

pub enum Reply {
    Content(String),
    Status(u16),
}

pub struct StubServer {
    pub url: String,
    pub requests: Arc<AtomicUsize>,
}

/// Serves until the process exits. `respond` gets the parsed request body.
pub fn spawn<F>(respond: F) -> StubServer
where
    F: Fn(&serde_json::Value) -> Reply + Send + Sync + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub");
    let addr = listener.local_addr().unwrap();
    let requests = Arc::new(AtomicUsize::new(0));
    let counter = requests.clone();
    let respond = Arc::new(respond);
    std::thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            let respond = respond.clone();
            let counter = counter.clone();
            std::thread::spawn(move || {
                let _ = handle(stream, &*respond, &counter);
            });
        }
    });
    StubServer {
        url: format!("http://{addr}/v1/chat/completions"),
        requests,
    }
}

fn handle(
    stream: TcpStream,
    respond: &dyn Fn(&serde_json::Value) -> Reply,
    counter: &AtomicUsize,
) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut content_length = 0usize;
    let mut line = String::new();
    reader.read_line(&mut line)?;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 || line == "\r\n" {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                content_length = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;
    counter.fetch_add(1, Ordering::SeqCst);
    let request: serde_json::Value = serde_json::from_slice(&body).unwrap_or_default();
    let (status, payload) = match respond(&request) {
        Reply::Content(text) => (
            200,
            serde_json::json!({"choices": [{"message": {"role": "assistant", "content": text}}]})
                .to_string(),
        ),
        Reply::Status(code) => (code, String::from("{\"error\":\"stub\"}")),
    };
    let mut out = stream;
    write!(
        out,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    )?;
    out.flush()
}

/// The user-message content of a chat request.
pub fn user_content(request: &serde_json::Value) -> String {
    request["messages"]
        .as_array()
        .and_then(|m| m.iter().find(|x| x["role"] == "user"))
        .and_then(|m| m["content"].as_str())
        .unwrap_or_default()
        .to_string()
}

/// A loopback URL with nothing listening.
pub fn dead_url() -> String {
    let l = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = l.local_addr().unwrap();
    drop(l);
    format!("http://{addr}/v1/chat/completions")
}
