use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use anyhow::{Context, Result};
use serde_json::Value;
use tungstenite::{Message, WebSocket};

use questforge::session::{write_log, EndReason, Session, SessionConfig};

use crate::backend::BackendSpec;
use crate::wire::{self, ClientMessage};

pub struct ServeOptions {
    pub port: u16,
    pub seed: u64,
    pub backend: BackendSpec,
    pub debug: bool,
    pub log_dir: PathBuf,
}

/// Accepts connections forever, one thread and one world per connection.
/// Connection `n` (from 0) plays seed `seed + n`.
pub fn serve(options: ServeOptions) -> Result<()> {
    let listener = TcpListener::bind(("127.0.0.1", options.port))
        .with_context(|| format!("cannot listen on port {}", options.port))?;
    std::fs::create_dir_all(&options.log_dir)
        .with_context(|| format!("cannot create {}", options.log_dir.display()))?;
    println!("listening on ws://{}", listener.local_addr()?);
    let options = Arc::new(options);
    let counter = Arc::new(AtomicU64::new(0));
    for stream in listener.incoming() {
        let Ok(stream) = stream else { continue };
        let options = Arc::clone(&options);
        let n = counter.fetch_add(1, Ordering::SeqCst);
        std::thread::spawn(move || {
            if let Err(e) = connection(stream, &options, n) {
                eprintln!("connection {n}: {e:#}");
            }
        });
    }
    Ok(())
}

fn send(ws: &mut WebSocket<TcpStream>, value: &Value) -> Result<()> {
    ws.send(Message::text(value.to_string()))?;
    Ok(())
}

fn connection(stream: TcpStream, options: &ServeOptions, n: u64) -> Result<()> {
    let mut ws = tungstenite::accept(stream).context("websocket handshake")?;
    let seed = options.seed + n;
    let config = SessionConfig { session_id: Some(format!("serve-{seed}-{n}")), ..SessionConfig::with_seed(seed) };
    let mut session = Session::new(config, options.backend.build()?)?;
    let result = session_loop(&mut ws, &mut session, options.debug);
    session.finish(EndReason::Disconnected);
    let path = options.log_dir.join(format!("{}.jsonl", session.id()));
    write_log(&path, session.records()).with_context(|| format!("writing {}", path.display()))?;
    eprintln!("session {} saved to {}", session.id(), path.display());
    result
}

fn session_loop(ws: &mut WebSocket<TcpStream>, session: &mut Session, debug: bool) -> Result<()> {
    loop {
        let text = match ws.read() {
            Ok(Message::Text(t)) => t.to_string(),
            Ok(Message::Close(_)) | Err(tungstenite::Error::ConnectionClosed) => return Ok(()),
            Ok(_) => continue,
            Err(e) => return Err(e.into()),
        };
        match wire::parse_client(&text) {
            Ok(ClientMessage::Hello) => send(ws, &wire::snapshot(session))?,
            Ok(ClientMessage::Command(command)) => {
                let before = session.records().len();
                match session.handle(&command) {
                    Ok(_) => {
                        let records = session.records()[before..].to_vec();
                        for message in wire::messages(session, &records, debug) {
                            send(ws, &message)?;
                        }
                    }
                    Err(e) => send(ws, &wire::error(&e.to_string()))?,
                }
            }
            Err(message) => send(ws, &wire::error(&message))?,
        }
    }
}
