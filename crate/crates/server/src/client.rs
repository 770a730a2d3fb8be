// SPDX-License-Identifier: Apache-2.0

//! Blocking client used by the line debugger and the tests.

use std::collections::VecDeque;
use std::net::TcpStream;
use std::time::{Duration, Instant};

use serde_json::Value as Json;
use thiserror::Error;
use tungstenite::stream::MaybeTlsStream;
use tungstenite::{Message, WebSocket};

use crate::protocol::{Envelope, Kind};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("websocket: {0}")]
    Ws(#[from] tungstenite::Error),
    #[error("malformed message from server: {0}")]
    Json(#[from] serde_json::Error),
    #[error("timed out waiting for {0}")]
    Timeout(String),
    #[error("server closed the connection")]
    Closed,
}

pub struct Client {
    ws: WebSocket<MaybeTlsStream<TcpStream>>,
    next: u64,
    events: VecDeque<Envelope>,
    timeout: Duration,
}

impl Client {
    /// Connect to `ws://host:port` (the scheme may be omitted).
    pub fn connect(addr: &str) -> Result<Self, ClientError> {
        let url = if addr.starts_with("ws://") {
            addr.to_string()
        } else {
            format!("ws://{addr}")
        };
        let (ws, _) = tungstenite::connect(url)?;
        if let MaybeTlsStream::Plain(s) = ws.get_ref() {
            s.set_nodelay(true).ok();
            s.set_read_timeout(Some(Duration::from_millis(20))).ok();
        }
        Ok(Client {
            ws,
            next: 1,
            events: VecDeque::new(),
            timeout: Duration::from_secs(30),
        })
    }

    pub fn set_timeout(&mut self, timeout: Duration) {
        self.timeout = timeout;
    }

    /// Send raw text, for exercising the server's error handling.
    pub fn send_raw(&mut self, text: &str) -> Result<(), ClientError> {
        self.ws.send(Message::text(text))?;
        Ok(())
    }

    /// Next message of any kind, or `None` once the deadline passes.
    fn recv(&mut self, deadline: Instant) -> Result<Option<Envelope>, ClientError> {
        loop {
            match self.ws.read() {
                Ok(Message::Text(t)) => return Ok(Some(serde_json::from_str(t.as_str())?)),
                Ok(Message::Close(_)) => return Err(ClientError::Closed),
                Ok(_) => {}
                Err(tungstenite::Error::Io(e))
                    if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) =>
                {
                    if Instant::now() >= deadline {
                        return Ok(None);
                    }
                }
                Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => {
                    return Err(ClientError::Closed)
                }
                Err(e) => return Err(e.into()),
            }
        }
    }

    /// Next non-event message; events that arrive first are queued.
    pub fn next_response(&mut self) -> Result<Envelope, ClientError> {
        let deadline = Instant::now() + self.timeout;
        loop {
            match self.recv(deadline)? {
                Some(m) if m.kind == Kind::Event => self.events.push_back(m),
                Some(m) => return Ok(m),
                None => return Err(ClientError::Timeout("a response".into())),
            }
        }
    }

    /// Send a request and wait for the response carrying its token.
    pub fn request(&mut self, command: &str, payload: Json) -> Result<Envelope, ClientError> {
        let token = self.next.to_string();
        self.next += 1;
        self.ws.send(Message::text(Envelope::request(&token, command, payload).to_text()))?;
        loop {
            let m = self.next_response()?;
            if m.token.as_deref() == Some(token.as_str()) {
                return Ok(m);
            }
            log::debug!("dropping response for token {:?}", m.token);
        }
    }

    /// Wait for an event named `command`; earlier events are discarded.
    pub fn wait_event(&mut self, command: &str) -> Result<Envelope, ClientError> {
        let deadline = Instant::now() + self.timeout;
        loop {
            while let Some(e) = self.events.pop_front() {
                if e.command == command {
                    return Ok(e);
                }
            }
            match self.recv(deadline)? {
                Some(m) if m.kind == Kind::Event => self.events.push_back(m),
                Some(m) => log::debug!("unexpected response {:?}", m.token),
                None => return Err(ClientError::Timeout(format!("event `{command}`"))),
            }
        }
    }

    /// Wait for whichever of `stopped`, `ended` or `error` comes next.
    pub fn wait_outcome(&mut self) -> Result<Envelope, ClientError> {
        let deadline = Instant::now() + self.timeout;
        loop {
            while let Some(e) = self.events.pop_front() {
                if matches!(e.command.as_str(), "stopped" | "ended" | "error") {
                    return Ok(e);
                }
            }
            match self.recv(deadline)? {
                Some(m) if m.kind == Kind::Event => self.events.push_back(m),
                Some(m) => log::debug!("unexpected response {:?}", m.token),
                None => return Err(ClientError::Timeout("a stop".into())),
            }
        }
    }

    /// Queued events plus whatever arrives within `wait`.
    pub fn drain_events(&mut self, wait: Duration) -> Result<Vec<Envelope>, ClientError> {
        let deadline = Instant::now() + wait;
        while let Some(m) = self.recv(deadline)? {
            if m.kind == Kind::Event {
                self.events.push_back(m);
            }
        }
        Ok(self.events.drain(..).collect())
    }

    pub fn close(mut self) {
        let _ = self.ws.close(None);
        let _ = self.ws.flush();
    }
}
