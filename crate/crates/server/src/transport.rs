// SPDX-License-Identifier: Apache-2.0

//! WebSocket transport. One thread owns the session and applies requests in
//! arrival order; each connection has its own thread that forwards requests
//! and writes responses and broadcast events.

use std::collections::BTreeMap;
use std::io::ErrorKind;
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use serde_json::json;
use thiserror::Error;
use tungstenite::{Message, WebSocket};

use crate::protocol::{reason, Envelope};
use crate::session::{Action, Session};

pub const DEFAULT_PORT: u16 = 8888;
pub const PORT_ENV: &str = "HGDB_PORT";

const POLL: Duration = Duration::from_millis(5);

/// Port from `HGDB_PORT`, else the default.
pub fn default_port() -> u16 {
    std::env::var(PORT_ENV)
        .ok()
        .and_then(|p| p.trim().parse().ok())
        .unwrap_or(DEFAULT_PORT)
}

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
}

type Clients = Arc<Mutex<BTreeMap<u64, Sender<String>>>>;

struct Job {
    client: u64,
    request: Envelope,
}

struct Shared {
    stop: AtomicBool,
    /// Set while the session runs a resume command.
    running: AtomicBool,
    clients: Clients,
    interrupt: Arc<AtomicBool>,
}

impl Shared {
    fn send_to(&self, client: u64, msg: &Envelope) {
        if let Some(tx) = self.clients.lock().unwrap().get(&client) {
            let _ = tx.send(msg.to_text());
        }
    }

    fn broadcast(&self, msg: &Envelope) {
        let text = msg.to_text();
        for tx in self.clients.lock().unwrap().values() {
            let _ = tx.send(text.clone());
        }
    }
}

pub struct ServerHandle {
    addr: SocketAddr,
    shared: Arc<Shared>,
    threads: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("ws://{}", self.addr)
    }

    /// Stop accepting, close connections and drop the session.
    pub fn shutdown(mut self) {
        self.shared.stop.store(true, Ordering::SeqCst);
        self.shared.interrupt.store(true, Ordering::SeqCst);
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }

    /// Block until the server stops.
    pub fn wait(mut self) {
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

/// Serve `session` on `addr` (port 0 picks a free port).
pub fn serve(session: Session, addr: impl ToSocketAddrs + std::fmt::Display) -> Result<ServerHandle, ServerError> {
    let listener = TcpListener::bind(&addr).map_err(|source| ServerError::Bind {
        addr: addr.to_string(),
        source,
    })?;
    let local = listener.local_addr().map_err(|source| ServerError::Bind {
        addr: addr.to_string(),
        source,
    })?;
    listener.set_nonblocking(true).map_err(|source| ServerError::Bind {
        addr: addr.to_string(),
        source,
    })?;
    let shared = Arc::new(Shared {
        stop: AtomicBool::new(false),
        running: AtomicBool::new(false),
        clients: Arc::new(Mutex::new(BTreeMap::new())),
        interrupt: session.interrupt_handle(),
    });
    let (jobs_tx, jobs_rx) = channel();
    let core = {
        let shared = shared.clone();
        std::thread::spawn(move || core_loop(session, jobs_rx, shared))
    };
    let accept = {
        let shared = shared.clone();
        std::thread::spawn(move || accept_loop(listener, jobs_tx, shared))
    };
    log::info!("listening on ws://{local}");
    Ok(ServerHandle {
        addr: local,
        shared,
        threads: vec![core, accept],
    })
}

fn core_loop(mut session: Session, jobs: Receiver<Job>, shared: Arc<Shared>) {
    while !shared.stop.load(Ordering::SeqCst) {
        let job = match jobs.recv_timeout(Duration::from_millis(50)) {
            Ok(j) => j,
            Err(RecvTimeoutError::Timeout) => continue,
            Err(RecvTimeoutError::Disconnected) => break,
        };
        match session.handle(&job.request) {
            Action::Reply(r) => shared.send_to(job.client, &r),
            Action::Run { response, command } => {
                shared.send_to(job.client, &response);
                shared.broadcast(&session.resumed(&job.request.command));
                shared.interrupt.store(false, Ordering::SeqCst);
                shared.running.store(true, Ordering::SeqCst);
                let event = session.run(command);
                shared.running.store(false, Ordering::SeqCst);
                shared.broadcast(&event);
            }
        }
    }
}

fn accept_loop(listener: TcpListener, jobs: Sender<Job>, shared: Arc<Shared>) {
    let next_id = AtomicU64::new(1);
    let mut conns = Vec::new();
    while !shared.stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, peer)) => {
                let id = next_id.fetch_add(1, Ordering::SeqCst);
                let (jobs, shared) = (jobs.clone(), shared.clone());
                conns.push(std::thread::spawn(move || {
                    if let Err(e) = connection(stream, id, jobs, shared.clone()) {
                        log::debug!("client {id} ({peer}): {e}");
                    }
                    shared.clients.lock().unwrap().remove(&id);
                }));
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => std::thread::sleep(POLL),
            Err(e) => log::warn!("accept failed: {e}"),
        }
    }
    for c in conns {
        let _ = c.join();
    }
}

fn would_block(e: &tungstenite::Error) -> bool {
    matches!(e, tungstenite::Error::Io(io) if matches!(io.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut))
}

fn connection(stream: TcpStream, id: u64, jobs: Sender<Job>, shared: Arc<Shared>) -> Result<(), tungstenite::Error> {
    stream.set_nonblocking(false)?;
    stream.set_nodelay(true)?;
    // Registered before the handshake completes so no broadcast sent after
    // the client sees the upgrade is missed.
    let (tx, rx) = channel::<String>();
    shared.clients.lock().unwrap().insert(id, tx);
    let mut ws: WebSocket<TcpStream> = tungstenite::accept(stream).map_err(|e| match e {
        tungstenite::HandshakeError::Failure(e) => e,
        tungstenite::HandshakeError::Interrupted(_) => tungstenite::Error::ConnectionClosed,
    })?;
    ws.get_mut().set_read_timeout(Some(POLL))?;
    loop {
        if shared.stop.load(Ordering::SeqCst) {
            let _ = ws.close(None);
            let _ = ws.flush();
            return Ok(());
        }
        while let Ok(text) = rx.try_recv() {
            ws.send(Message::text(text))?;
        }
        let msg = match ws.read() {
            Ok(m) => m,
            Err(e) if would_block(&e) => continue,
            Err(tungstenite::Error::ConnectionClosed) => return Ok(()),
            Err(e) => return Err(e),
        };
        let text = match msg {
            Message::Text(t) => t.to_string(),
            Message::Binary(b) => String::from_utf8_lossy(&b).into_owned(),
            Message::Close(_) => return Ok(()),
            _ => continue,
        };
        let request: Envelope = match serde_json::from_str(&text) {
            Ok(r) => r,
            Err(e) => {
                let token = serde_json::from_str::<serde_json::Value>(&text)
                    .ok()
                    .and_then(|v| v.get("token").and_then(|t| t.as_str()).map(str::to_string));
                let err = Envelope::error(token, "", reason::PARSE, format!("malformed message: {e}"));
                ws.send(Message::text(err.to_text()))?;
                continue;
            }
        };
        if request.command == "pause" && shared.running.load(Ordering::SeqCst) {
            shared.interrupt.store(true, Ordering::SeqCst);
            let r = Envelope::success(request.token.clone(), "pause", json!({ "interrupted": true }));
            ws.send(Message::text(r.to_text()))?;
            continue;
        }
        if jobs.send(Job { client: id, request }).is_err() {
            return Ok(());
        }
    }
}
