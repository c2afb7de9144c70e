//! Line transports: raw TCP (newline-delimited) and WebSocket (one message
//! per text frame). Both support a receive timeout so a session can tick.

use std::io::{self, ErrorKind, Read, Write};
use std::net::TcpStream;
use std::time::Duration;

use tungstenite::{Message as WsMessage, WebSocket};

use super::protocol::MAX_LINE_BYTES;

#[derive(Debug)]
pub(crate) enum Recv {
    Line(String),
    /// A line exceeded [`MAX_LINE_BYTES`] and was discarded.
    Oversized,
    Timeout,
    Closed,
}

pub(crate) trait Transport {
    fn recv(&mut self, timeout: Option<Duration>) -> io::Result<Recv>;
    fn send(&mut self, line: &str) -> io::Result<()>;
}

fn is_timeout(e: &io::Error) -> bool {
    matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut)
}

/// Zero durations mean "no timeout" to the socket API.
fn socket_timeout(t: Option<Duration>) -> Option<Duration> {
    t.map(|d| d.max(Duration::from_millis(1)))
}

pub(crate) struct TcpLines {
    stream: TcpStream,
    pending: Vec<u8>,
    discarding: bool,
}

impl TcpLines {
    pub(crate) fn new(stream: TcpStream) -> Self {
        Self {
            stream,
            pending: Vec::new(),
            discarding: false,
        }
    }

    fn take_line(&mut self) -> Option<Recv> {
        loop {
            let pos = self.pending.iter().position(|&b| b == b'\n')?;
            let raw: Vec<u8> = self.pending.drain(..=pos).collect();
            if self.discarding || pos > MAX_LINE_BYTES {
                self.discarding = false;
                return Some(Recv::Oversized);
            }
            let line = String::from_utf8_lossy(&raw[..pos]);
            let line = line.trim_end_matches('\r').trim();
            if !line.is_empty() {
                return Some(Recv::Line(line.to_string()));
            }
        }
    }
}

impl Transport for TcpLines {
    fn recv(&mut self, timeout: Option<Duration>) -> io::Result<Recv> {
        if let Some(r) = self.take_line() {
            return Ok(r);
        }
        self.stream.set_read_timeout(socket_timeout(timeout))?;
        let mut buf = [0u8; 8192];
        loop {
            match self.stream.read(&mut buf) {
                Ok(0) => return Ok(Recv::Closed),
                Ok(n) => {
                    self.pending.extend_from_slice(&buf[..n]);
                    if let Some(r) = self.take_line() {
                        return Ok(r);
                    }
                    if self.pending.len() > MAX_LINE_BYTES {
                        self.pending.clear();
                        self.discarding = true;
                    }
                }
                Err(e) if is_timeout(&e) => return Ok(Recv::Timeout),
                Err(e) if e.kind() == ErrorKind::Interrupted => {}
                Err(e) if matches!(e.kind(), ErrorKind::ConnectionReset | ErrorKind::ConnectionAborted) => {
                    return Ok(Recv::Closed)
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn send(&mut self, line: &str) -> io::Result<()> {
        let mut out = Vec::with_capacity(line.len() + 1);
        out.extend_from_slice(line.as_bytes());
        out.push(b'\n');
        self.stream.write_all(&out)?;
        self.stream.flush()
    }
}

pub(crate) struct WsLines {
    ws: WebSocket<TcpStream>,
    queued: std::collections::VecDeque<String>,
}

impl WsLines {
    pub(crate) fn accept(stream: TcpStream) -> io::Result<Self> {
        let ws = tungstenite::accept(stream).map_err(|e| io::Error::other(format!("websocket handshake: {e}")))?;
        Ok(Self {
            ws,
            queued: Default::default(),
        })
    }
}

impl Transport for WsLines {
    fn recv(&mut self, timeout: Option<Duration>) -> io::Result<Recv> {
        if let Some(l) = self.queued.pop_front() {
            return Ok(Recv::Line(l));
        }
        self.ws.get_mut().set_read_timeout(socket_timeout(timeout))?;
        loop {
            match self.ws.read() {
                Ok(msg @ (WsMessage::Text(_) | WsMessage::Binary(_))) => {
                    let data = msg.into_data();
                    if data.len() > MAX_LINE_BYTES {
                        return Ok(Recv::Oversized);
                    }
                    self.queued.extend(
                        String::from_utf8_lossy(&data)
                            .lines()
                            .map(str::trim)
                            .filter(|l| !l.is_empty())
                            .map(str::to_string),
                    );
                    if let Some(l) = self.queued.pop_front() {
                        return Ok(Recv::Line(l));
                    }
                }
                Ok(WsMessage::Close(_)) => return Ok(Recv::Closed),
                Ok(_) => {}
                Err(tungstenite::Error::Io(e)) if is_timeout(&e) => return Ok(Recv::Timeout),
                Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => {
                    return Ok(Recv::Closed)
                }
                Err(tungstenite::Error::Io(e)) => return Err(e),
                Err(tungstenite::Error::Protocol(_)) => return Ok(Recv::Closed),
                Err(e) => return Err(io::Error::other(e.to_string())),
            }
        }
    }

    fn send(&mut self, line: &str) -> io::Result<()> {
        match self.ws.send(WsMessage::text(line)) {
            Ok(()) => Ok(()),
            Err(tungstenite::Error::Io(e)) => Err(e),
            Err(e) => Err(io::Error::other(e.to_string())),
        }
    }
}

/// Waits for the first bytes of a connection and reports whether it opens
/// with an HTTP `GET` (a WebSocket upgrade).
pub(crate) fn looks_like_http(stream: &TcpStream) -> io::Result<bool> {
    stream.set_read_timeout(Some(Duration::from_secs(30)))?;
    let mut buf = [0u8; 4];
    loop {
        let n = match stream.peek(&mut buf) {
            Ok(n) => n,
            Err(e) if e.kind() == ErrorKind::Interrupted => continue,
            Err(e) if is_timeout(&e) => return Ok(false),
            Err(e) => return Err(e),
        };
        if n == 0 {
            return Ok(false);
        }
        if !b"GET ".starts_with(&buf[..n]) {
            return Ok(false);
        }
        if n == 4 {
            return Ok(true);
        }
        std::thread::sleep(Duration::from_millis(2));
    }
}
