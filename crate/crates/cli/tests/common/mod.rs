#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_policybench"))
}

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

pub fn golden_prefix(taxonomy: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../core/tests/golden/{taxonomy}.prefix.txt"));
    std::fs::read_to_string(path).unwrap()
}

pub fn run(cmd: &mut Command) -> Output {
    let out = cmd.env_remove("RUST_LOG").output().expect("spawn policybench");
    if !out.status.success() {
        eprintln!("stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

pub fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

/// Runs the full offline pipeline on the bundled fixture.
pub fn run_fixture(html: &Path, gold: &Path, cache: &Path, out: &Path) -> Output {
    run(bin()
        .arg("--offline")
        .arg("--cache-dir")
        .arg(cache)
        .args(["run", "--taxonomy", "opp-115", "--backend", "mock", "--html"])
        .arg(html)
        .arg("--gold")
        .arg(gold)
        .arg("--out")
        .arg(out))
}

/// Minimal HTTP/1.1 server answering every request with one canned response
/// and counting how many requests arrived.
pub struct CannedServer {
    pub url: String,
    hits: Arc<AtomicUsize>,
}

impl CannedServer {
    pub fn start(status: u16, body: &'static str) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = hits.clone();
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut content_length = 0usize;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        content_length = v.trim().parse().unwrap_or(0);
                    }
                }
                let mut body_in = vec![0u8; content_length];
                let _ = reader.read_exact(&mut body_in);
                counter.fetch_add(1, Ordering::SeqCst);
                let reply = format!(
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
                let _ = stream.write_all(reply.as_bytes());
            }
        });
        CannedServer { url, hits }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

/// Config file with one OpenAI-style profile named `local` pointing at `url`.
pub fn live_profile_config(dir: &Path, url: &str) -> PathBuf {
    let path = dir.join("policybench.toml");
    std::fs::write(
        &path,
        format!(
            "[profiles.local]\nprovider = \"openai\"\nbase_url = \"{url}\"\nmodel_id = \"gpt-4-0314\"\nmax_retries = 0\nbackoff_ms = 1\ntimeout_secs = 5\n"
        ),
    )
    .unwrap();
    path
}
