//! The environment server: one thread and one environment per connection.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::{self, ErrorKind, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use super::keys_to_action;
use super::protocol::*;
use super::transport::{looks_like_http, Recv, TcpLines, Transport, WsLines};
use crate::env::{encode_trajectory, make_env, trajectory_path, Environment, SaveOptions, StepResult, Trajectory};
use crate::error::{Error, Result};
use crate::render::{render_frame, Observation, ViewKind};
use crate::sim::Action;
use crate::tasks::{TaskId, VariantKind};

/// Teleop control period (8 Hz).
pub const TICK: Duration = Duration::from_millis(125);

/// Serializes trajectory file creation under one root directory.
#[derive(Debug)]
pub struct DataDir {
    root: PathBuf,
    lock: Mutex<()>,
}

impl DataDir {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|source| Error::PathIo {
            path: root.clone(),
            source,
        })?;
        Ok(Self {
            root,
            lock: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes to `<task>/<variant>/<seed>.traj`, or `<seed>.<n>.traj` for the
    /// smallest free `n` if that exists. Returns the path relative to the root.
    pub fn store(&self, traj: &Trajectory) -> Result<PathBuf> {
        let bytes = encode_trajectory(traj, SaveOptions::default())?;
        let _guard = self.lock.lock().unwrap_or_else(|p| p.into_inner());
        let base = trajectory_path(&self.root, traj.spec.task, traj.spec.variant, traj.spec.seed);
        let dir = base.parent().expect("trajectory path has a parent");
        std::fs::create_dir_all(dir).map_err(|source| Error::PathIo {
            path: dir.to_path_buf(),
            source,
        })?;
        let seed = traj.spec.seed;
        for n in 0u32.. {
            let path = if n == 0 {
                base.clone()
            } else {
                dir.join(format!("{seed}.{n}.traj"))
            };
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(mut f) => {
                    f.write_all(&bytes)
                        .and_then(|_| f.sync_all())
                        .map_err(|source| Error::PathIo {
                            path: path.clone(),
                            source,
                        })?;
                    return Ok(path.strip_prefix(&self.root).expect("under root").to_path_buf());
                }
                Err(e) if e.kind() == ErrorKind::AlreadyExists => continue,
                Err(source) => return Err(Error::PathIo { path, source }),
            }
        }
        unreachable!("u32 range exhausted")
    }
}

struct Episode {
    env: Environment,
    mode: super::protocol::Mode,
    all_views: bool,
    next_tick: Option<Instant>,
}

/// Protocol state for one connection.
pub struct Session {
    data: Arc<DataDir>,
    episode: Option<Episode>,
    held: Vec<String>,
    recording: bool,
}

impl Session {
    pub fn new(data: Arc<DataDir>) -> Self {
        Self {
            data,
            episode: None,
            held: Vec::new(),
            recording: false,
        }
    }

    /// Time until the next teleop tick is due, if ticking.
    pub fn tick_due_in(&self, now: Instant) -> Option<Duration> {
        self.episode
            .as_ref()
            .and_then(|e| e.next_tick)
            .map(|t| t.saturating_duration_since(now))
    }

    /// Handles one raw line and returns the reply.
    pub fn handle_line(&mut self, line: &str) -> Message {
        match parse_message(line) {
            Ok(m) => self.handle(m),
            Err(e) => Message::Error(e),
        }
    }

    pub fn handle(&mut self, msg: Message) -> Message {
        match msg {
            Message::Hello(_) => Message::Hello(Hello {
                protocol_version: Some(PROTOCOL_VERSION),
                name: Some(format!("magbench {}", env!("CARGO_PKG_VERSION"))),
                tasks: TaskInfo::catalogue(),
            }),
            Message::Reset(r) => self.reset(r),
            Message::Step(s) => self.step(s.action),
            Message::Keys(k) => self.keys(k),
            Message::State(_) => self.state(),
            Message::RecordStart(_) => self.record_start(),
            Message::RecordStop(_) => self.record_stop(),
            other => Message::error(
                ErrorCode::UnknownType,
                format!("'{}' is a server-to-client message", other.type_name()),
            ),
        }
    }

    fn reset(&mut self, r: Reset) -> Message {
        let parsed = (|| -> Result<(TaskId, VariantKind, ViewKind)> {
            Ok((r.task.parse()?, r.variant.parse()?, r.view.parse()?))
        })();
        let (task, variant, view) = match parsed {
            Ok(v) => v,
            Err(e) => return Message::error(ErrorCode::InvalidParameter, e.to_string()),
        };
        let mut env = match make_env(task, variant, r.seed, view) {
            Ok(env) => env,
            Err(e) => return error_reply(&e),
        };
        let obs = env.reset();
        self.recording = false;
        self.held.clear();
        let next_tick = (r.mode == super::protocol::Mode::Teleop).then(|| Instant::now() + TICK);
        let ep = Episode {
            env,
            mode: r.mode,
            all_views: r.all_views,
            next_tick,
        };
        let msg = obs_message(&ep, &obs, None, None);
        self.episode = Some(ep);
        msg
    }

    fn step(&mut self, action: i64) -> Message {
        let Some(ep) = self.episode.as_mut() else {
            return Message::error(ErrorCode::NotReset, "send reset first");
        };
        if ep.mode != super::protocol::Mode::Agent {
            return Message::error(ErrorCode::WrongMode, "step is only accepted in agent mode");
        }
        match ep.env.step_index(action) {
            Ok(r) => step_message(ep, &r, None),
            Err(e) => error_reply(&e),
        }
    }

    fn keys(&mut self, k: Keys) -> Message {
        let Some(ep) = self.episode.as_ref() else {
            return Message::error(ErrorCode::NotReset, "send reset first");
        };
        if ep.mode != super::protocol::Mode::Teleop {
            return Message::error(ErrorCode::WrongMode, "keys are only accepted in teleop mode");
        }
        self.held = k.held;
        Message::Keys(Keys {
            held: self.held.clone(),
            action: Some(keys_to_action(&self.held).index()),
        })
    }

    fn state(&self) -> Message {
        let Some(ep) = self.episode.as_ref() else {
            return Message::error(ErrorCode::NotReset, "send reset first");
        };
        if ep.mode == super::protocol::Mode::Agent {
            return Message::error(ErrorCode::WrongMode, "agents observe pixels only");
        }
        Message::State(StateMsg {
            state: ep.env.state().cloned(),
        })
    }

    fn record_start(&mut self) -> Message {
        let Some(ep) = self.episode.as_ref() else {
            return Message::error(ErrorCode::NotReset, "send reset first");
        };
        if ep.env.is_done() {
            return Message::error(ErrorCode::EpisodeFinished, "reset before recording");
        }
        self.recording = true;
        Message::RecordStart(RecordStart { t: Some(ep.env.t()) })
    }

    fn record_stop(&mut self) -> Message {
        if !self.recording {
            return Message::error(ErrorCode::NotRecording, "no recording in progress");
        }
        let ep = self.episode.as_ref().expect("recording implies an episode");
        if !ep.env.is_done() {
            return Message::error(
                ErrorCode::IncompleteEpisode,
                format!("episode at t = {} of {}", ep.env.t(), ep.env.horizon()),
            );
        }
        let stored = ep.env.trajectory().and_then(|traj| {
            let path = self.data.store(&traj)?;
            Ok((path, traj))
        });
        match stored {
            Ok((path, traj)) => {
                self.recording = false;
                Message::Recorded(Recorded {
                    path: path.to_string_lossy().replace('\\', "/"),
                    score: traj.score.map_or(0.0, |s| s.value()),
                    horizon: traj.spec.horizon,
                })
            }
            Err(e) => error_reply(&e),
        }
    }

    /// Advances a teleop episode by one control step if a tick is due.
    pub fn tick(&mut self, now: Instant) -> Option<Message> {
        let ep = self.episode.as_mut()?;
        let due = ep.next_tick?;
        if now < due {
            return None;
        }
        let action = keys_to_action(&self.held);
        let reply = match ep.env.step(action) {
            Ok(r) => step_message(ep, &r, Some(action)),
            Err(e) => error_reply(&e),
        };
        ep.next_tick = if ep.env.is_done() { None } else { Some(due + TICK) };
        Some(reply)
    }
}

fn error_reply(e: &Error) -> Message {
    let code = match e {
        Error::InvalidAction(_) => ErrorCode::InvalidAction,
        Error::UnsupportedVariant { .. } => ErrorCode::UnsupportedVariant,
        Error::EpisodeFinished => ErrorCode::EpisodeFinished,
        Error::NotReset => ErrorCode::NotReset,
        Error::IncompleteEpisode { .. } => ErrorCode::IncompleteEpisode,
        Error::InvalidParameter(_) => ErrorCode::InvalidParameter,
        Error::Io(_) | Error::PathIo { .. } => ErrorCode::Io,
        _ => ErrorCode::Internal,
    };
    Message::error(code, e.to_string())
}

fn step_message(ep: &Episode, r: &StepResult, action: Option<Action>) -> Message {
    obs_message(ep, &r.observation, r.score.map(|s| s.value()), action)
}

fn obs_message(ep: &Episode, obs: &Observation, score: Option<f64>, action: Option<Action>) -> Message {
    let view = ep.env.view();
    let frame = encode_frame(obs.newest());
    let frames = ep.all_views.then(|| {
        let state = ep.env.state().expect("reset");
        [ViewKind::Egocentric, ViewKind::Allocentric]
            .into_iter()
            .map(|v| {
                let b64 = if v == view {
                    frame.clone()
                } else {
                    encode_frame(&render_frame(state, v))
                };
                (v.short_name().to_string(), b64)
            })
            .collect::<BTreeMap<_, _>>()
    });
    Message::Obs(Obs {
        t: ep.env.t(),
        horizon: ep.env.horizon(),
        done: ep.env.is_done(),
        score,
        view: view.short_name().to_string(),
        frame,
        frames,
        stack: None,
        action: action.map(Action::index),
    })
}

/// Drives one session over a transport until the peer disconnects or `stop` is set.
fn run_session(transport: &mut dyn Transport, data: Arc<DataDir>, stop: &AtomicBool) -> io::Result<()> {
    let mut session = Session::new(data);
    // Poll at least this often so shutdown is noticed.
    let idle = Duration::from_millis(250);
    while !stop.load(Ordering::Relaxed) {
        let now = Instant::now();
        if let Some(msg) = session.tick(now) {
            transport.send(&msg.to_line())?;
            continue;
        }
        let wait = session.tick_due_in(now).map_or(idle, |d| d.min(idle));
        match transport.recv(Some(wait))? {
            Recv::Line(line) => transport.send(&session.handle_line(&line).to_line())?,
            Recv::Oversized => transport.send(
                &Message::error(ErrorCode::LineTooLong, format!("lines are limited to {MAX_LINE_BYTES} bytes")).to_line(),
            )?,
            Recv::Timeout => {}
            Recv::Closed => break,
        }
    }
    Ok(())
}

fn handle_connection(stream: TcpStream, data: Arc<DataDir>, stop: Arc<AtomicBool>) {
    let _ = stream.set_nodelay(true);
    let result = match looks_like_http(&stream) {
        Ok(true) => WsLines::accept(stream).and_then(|mut t| run_session(&mut t, data, &stop)),
        Ok(false) => run_session(&mut TcpLines::new(stream), data, &stop),
        Err(e) => Err(e),
    };
    if let Err(e) = result {
        if !matches!(e.kind(), ErrorKind::BrokenPipe | ErrorKind::ConnectionReset) {
            eprintln!("magbench: session ended with error: {e}");
        }
    }
}

/// A bound, not yet running server.
pub struct Server {
    listener: TcpListener,
    data: Arc<DataDir>,
    stop: Arc<AtomicBool>,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, data_dir: impl Into<PathBuf>) -> Result<Self> {
        let listener = TcpListener::bind(addr)?;
        Ok(Self {
            listener,
            data: Arc::new(DataDir::new(data_dir)?),
            stop: Arc::new(AtomicBool::new(false)),
        })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    pub fn data_dir(&self) -> &Path {
        self.data.root()
    }

    /// Accepts connections until stopped, one thread per session.
    pub fn run(self) -> Result<()> {
        for conn in self.listener.incoming() {
            if self.stop.load(Ordering::Relaxed) {
                break;
            }
            match conn {
                Ok(stream) => {
                    let data = Arc::clone(&self.data);
                    let stop = Arc::clone(&self.stop);
                    std::thread::spawn(move || handle_connection(stream, data, stop));
                }
                Err(e) => eprintln!("magbench: accept failed: {e}"),
            }
        }
        Ok(())
    }

    /// Runs the accept loop on a background thread.
    pub fn spawn(self) -> Result<ServerHandle> {
        let addr = self.local_addr()?;
        let stop = Arc::clone(&self.stop);
        let thread = std::thread::spawn(move || {
            let _ = self.run();
        });
        Ok(ServerHandle {
            addr,
            stop,
            thread: Some(thread),
        })
    }
}

/// Binds `addr` and serves `data_dir` on a background thread.
pub fn serve(addr: impl ToSocketAddrs, data_dir: impl Into<PathBuf>) -> Result<ServerHandle> {
    Server::bind(addr, data_dir)?.spawn()
}

pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting connections and asks open sessions to end.
    pub fn shutdown(mut self) {
        self.stop_inner();
    }

    fn stop_inner(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        // Unblock the accept loop.
        let _ = TcpStream::connect_timeout(&self.addr, Duration::from_secs(1));
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop_inner();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session() -> (Session, tempfile::TempDir) {
        let dir = tempfile::tempdir().unwrap();
        (Session::new(Arc::new(DataDir::new(dir.path()).unwrap())), dir)
    }

    fn obs(m: Message) -> Obs {
        match m {
            Message::Obs(o) => o,
            other => panic!("expected obs, got {other:?}"),
        }
    }

    fn err_code(m: Message) -> ErrorCode {
        match m {
            Message::Error(e) => e.code,
            other => panic!("expected error, got {other:?}"),
        }
    }

    #[test]
    fn agent_episode() {
        let (mut s, _dir) = session();
        assert_eq!(err_code(s.handle_line(r#"{"type":"step","action":0}"#)), ErrorCode::NotReset);
        let o = obs(s.handle_line(r#"{"type":"reset","task":"MTR"}"#));
        assert_eq!((o.t, o.horizon, o.done), (0, 40, false));
        assert_eq!(decode_frame(&o.frame).unwrap().as_bytes().len(), 27_648);
        let o = obs(s.handle_line(r#"{"type":"step","action":0}"#));
        assert_eq!((o.t, o.done, o.score), (1, false, None));
        assert_eq!(err_code(s.handle_line(r#"{"type":"step","action":18}"#)), ErrorCode::InvalidAction);
        for _ in 1..39 {
            s.handle_line(r#"{"type":"step","action":0}"#);
        }
        let o = obs(s.handle_line(r#"{"type":"step","action":0}"#));
        assert_eq!((o.t, o.done, o.score), (40, true, Some(0.0)));
        assert_eq!(
            err_code(s.handle_line(r#"{"type":"step","action":0}"#)),
            ErrorCode::EpisodeFinished
        );
        assert_eq!(err_code(s.handle_line(r#"{"type":"state"}"#)), ErrorCode::WrongMode);
    }

    #[test]
    fn bad_requests_keep_session_usable() {
        let (mut s, _dir) = session();
        assert_eq!(err_code(s.handle_line("{")), ErrorCode::Malformed);
        assert_eq!(err_code(s.handle_line(r#"{"type":"fly"}"#)), ErrorCode::UnknownType);
        assert_eq!(
            err_code(s.handle_line(r#"{"type":"reset","task":"MTC","variant":"Layout"}"#)),
            ErrorCode::UnsupportedVariant
        );
        assert_eq!(
            err_code(s.handle_line(r#"{"type":"reset","task":"nope"}"#)),
            ErrorCode::InvalidParameter
        );
        assert!(matches!(s.handle_line(r#"{"type":"hello"}"#), Message::Hello(h) if h.tasks.len() == 8));
    }

    #[test]
    fn teleop_ticks_and_recording() {
        let (mut s, dir) = session();
        obs(s.handle_line(r#"{"type":"reset","task":"MTR","mode":"teleop","all_views":true}"#));
        assert!(matches!(s.handle_line(r#"{"type":"record_start"}"#), Message::RecordStart(_)));
        let m = s.handle_line(r#"{"type":"keys","held":["Up","Space"]}"#);
        assert!(matches!(m, Message::Keys(Keys { action: Some(12), .. })));
        assert_eq!(err_code(s.handle_line(r#"{"type":"step","action":0}"#)), ErrorCode::WrongMode);
        assert_eq!(err_code(s.handle_line(r#"{"type":"record_stop"}"#)), ErrorCode::IncompleteEpisode);
        // Drive the clock by hand.
        let mut now = Instant::now();
        let mut last = None;
        for _ in 0..40 {
            now += TICK;
            last = Some(obs(s.tick(now).expect("tick due")));
        }
        let last = last.unwrap();
        assert!(last.done && last.score.is_some());
        assert_eq!(last.frames.as_ref().unwrap().len(), 2);
        assert!(s.tick(now + TICK).is_none());
        let Message::Recorded(r) = s.handle_line(r#"{"type":"record_stop"}"#) else {
            panic!()
        };
        assert_eq!(r.path, "MoveToRegion/Demo/0.traj");
        let traj = crate::env::load_trajectory(&dir.path().join(&r.path)).unwrap();
        assert!(traj.actions.iter().all(|a| a.index() == 12));
        // A second recording of the same seed gets a fresh name.
        s.handle_line(r#"{"type":"reset","task":"MTR","mode":"teleop"}"#);
        s.handle_line(r#"{"type":"record_start"}"#);
        for _ in 0..40 {
            now += TICK;
            s.tick(now);
        }
        let Message::Recorded(r2) = s.handle_line(r#"{"type":"record_stop"}"#) else {
            panic!()
        };
        assert_eq!(r2.path, "MoveToRegion/Demo/0.1.traj");
    }
}
