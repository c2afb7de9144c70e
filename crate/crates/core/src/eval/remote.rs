//! A policy served by another process over the wire protocol.
//!
//! The evaluator connects, sends `hello`, then for each episode a `reset`
//! describing the task and one `obs` per step carrying the full 4-frame stack.
//! The peer answers `hello` with `hello`, `reset` with any message, and every
//! `obs` with `{"type":"step","action":k}`.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use crate::env::{Policy, PolicyInput};
use crate::error::{Error, Result};
use crate::render::ViewKind;
use crate::sim::Action;
use crate::tasks::{TaskId, VariantKind};
use crate::wire::protocol::{encode_frame, parse_message, Hello, Message, Mode, Obs, Reset, PROTOCOL_VERSION};

pub struct RemotePolicy {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    variant: VariantKind,
    seed: u64,
    view: ViewKind,
}

impl std::fmt::Debug for RemotePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemotePolicy")
            .field("peer", &self.writer.peer_addr().ok())
            .finish()
    }
}

impl RemotePolicy {
    /// Connects and performs the `hello` handshake.
    pub fn connect(addr: impl ToSocketAddrs, timeout: Duration) -> Result<Self> {
        let addr = addr
            .to_socket_addrs()?
            .next()
            .ok_or_else(|| Error::InvalidParameter("address resolves to nothing".into()))?;
        let stream = TcpStream::connect_timeout(&addr, timeout)?;
        stream.set_read_timeout(Some(timeout))?;
        stream.set_nodelay(true)?;
        let mut p = RemotePolicy {
            reader: BufReader::new(stream.try_clone()?),
            writer: stream,
            variant: VariantKind::Demo,
            seed: 0,
            view: ViewKind::Egocentric,
        };
        match p.request(&Message::Hello(Hello {
            protocol_version: Some(PROTOCOL_VERSION),
            name: Some("magbench-eval".into()),
            tasks: Vec::new(),
        }))? {
            Message::Hello(_) => Ok(p),
            other => Err(Error::Protocol(format!("expected hello, got {}", other.type_name()))),
        }
    }

    /// Tells the peer which variant and seed the next episode uses.
    pub fn set_episode(&mut self, variant: VariantKind, seed: u64) {
        self.variant = variant;
        self.seed = seed;
    }

    fn request(&mut self, msg: &Message) -> Result<Message> {
        let mut line = msg.to_line();
        line.push('\n');
        self.writer.write_all(line.as_bytes())?;
        self.writer.flush()?;
        let mut reply = String::new();
        if self.reader.read_line(&mut reply)? == 0 {
            return Err(Error::Protocol("peer closed the connection".into()));
        }
        match parse_message(reply.trim()) {
            Ok(Message::Error(e)) => Err(Error::Protocol(format!("peer error {:?}: {}", e.code, e.message))),
            Ok(m) => Ok(m),
            Err(e) => Err(Error::Protocol(format!("unparseable reply: {}", e.message))),
        }
    }
}

impl Policy for RemotePolicy {
    fn begin_episode(&mut self, task: TaskId, horizon: u32, view: ViewKind) -> Result<()> {
        self.view = view;
        self.request(&Message::Reset(Reset {
            task: task.name().to_string(),
            variant: self.variant.name().to_string(),
            seed: self.seed,
            view: view.short_name().to_string(),
            mode: Mode::Agent,
            all_views: false,
            horizon: Some(horizon),
        }))?;
        Ok(())
    }

    fn act(&mut self, input: &PolicyInput<'_>) -> Result<Action> {
        let obs = input
            .observation
            .ok_or_else(|| Error::Policy("remote policies need pixel observations".into()))?;
        let msg = Message::Obs(Obs {
            t: input.t,
            horizon: input.horizon,
            done: false,
            score: None,
            view: self.view.short_name().to_string(),
            frame: encode_frame(obs.newest()),
            frames: None,
            stack: Some(obs.frames.iter().map(encode_frame).collect()),
            action: None,
        });
        match self.request(&msg)? {
            Message::Step(s) => u8::try_from(s.action)
                .ok()
                .and_then(|i| Action::new(i).ok())
                .ok_or(Error::InvalidAction(s.action)),
            other => Err(Error::Protocol(format!("expected step, got {}", other.type_name()))),
        }
    }
}
