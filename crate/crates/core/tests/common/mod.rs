#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::thread;

use prego_core::alphabet::{SymbolAlphabet, SymbolMode};
use prego_core::anticipation::{render_prompt, ContextPolicy, ContextSet, PromptSpec, PromptStyle};
use prego_core::{ActionId, ActionVocabulary};
use serde_json::Value;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub const STYLES: [PromptStyle; 3] = [
    PromptStyle::ReferencedContext,
    PromptStyle::UnreferencedContext,
    PromptStyle::Elaborate,
];

/// The scenario behind the prompt golden files.
pub fn golden_prompt(style: PromptStyle, mode: SymbolMode) -> String {
    let vocab = ActionVocabulary::build(&[
        "unpack tent",
        "spread tent",
        "insert pole",
        "place stake",
        "tie guyline",
    ])
    .unwrap();
    let alphabet = SymbolAlphabet::build(&vocab, mode, 7).unwrap();
    let context = ContextSet::new(
        vec![
            ("t1".into(), ActionId::seq(&[0, 1, 2, 3, 4])),
            ("t2".into(), ActionId::seq(&[0, 1, 3, 2, 4])),
        ],
        ContextPolicy::SameTask,
    );
    render_prompt(&PromptSpec {
        style,
        alphabet: &alphabet,
        context: &context,
        history: &ActionId::seq(&[0, 1, 3]),
    })
    .unwrap()
}

pub fn golden_path(style: PromptStyle, mode: SymbolMode) -> PathBuf {
    golden_dir().join(format!("{}__{}.txt", style.as_str(), mode.as_str()))
}

/// What the stub answers to one request.
#[derive(Clone, Debug)]
pub enum Reply {
    Text(String),
    Status(u16),
}

/// Minimal HTTP server answering from a script; the last reply repeats.
pub struct StubServer {
    pub url: String,
    pub requests: Arc<Mutex<Vec<Value>>>,
}

impl StubServer {
    pub fn start(script: Vec<Reply>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/complete", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&requests);
        thread::spawn(move || {
            for (n, stream) in listener.incoming().enumerate() {
                let Ok(stream) = stream else { continue };
                let reply = script
                    .get(n)
                    .or(script.last())
                    .cloned()
                    .unwrap_or(Reply::Status(500));
                let _ = serve(stream, reply, &log);
            }
        });
        StubServer { url, requests }
    }

    pub fn count(&self) -> usize {
        self.requests.lock().unwrap().len()
    }

    pub fn bodies(&self) -> Vec<Value> {
        self.requests.lock().unwrap().clone()
    }
}

fn serve(mut stream: TcpStream, reply: Reply, log: &Mutex<Vec<Value>>) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut length = 0usize;
    let mut chunked = false;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Ok(());
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            match k.trim().to_ascii_lowercase().as_str() {
                "content-length" => length = v.trim().parse().unwrap_or(0),
                "transfer-encoding" => chunked = v.trim().eq_ignore_ascii_case("chunked"),
                _ => {}
            }
        }
    }
    let mut body = Vec::new();
    if chunked {
        loop {
            let mut size = String::new();
            reader.read_line(&mut size)?;
            let n = usize::from_str_radix(size.trim(), 16).unwrap_or(0);
            let mut chunk = vec![0; n + 2];
            reader.read_exact(&mut chunk)?;
            if n == 0 {
                break;
            }
            body.extend_from_slice(&chunk[..n]);
        }
    } else {
        body.resize(length, 0);
        reader.read_exact(&mut body)?;
    }
    log.lock()
        .unwrap()
        .push(serde_json::from_slice(&body).unwrap_or(Value::Null));
    let (status, payload) = match reply {
        Reply::Text(t) => (200, serde_json::json!({ "text": t }).to_string()),
        Reply::Status(s) => (s, "{\"error\":\"stub\"}".to_string()),
    };
    write!(
        stream,
        "HTTP/1.1 {status} Stub\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    )?;
    stream.flush()
}
