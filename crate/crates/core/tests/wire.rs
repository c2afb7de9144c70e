use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::time::{Duration, Instant};

use magbench::env::load_trajectory;
use magbench::eval::{evaluate, PolicySpec};
use magbench::render::{ViewKind, FRAME_BYTES};
use magbench::scoring::score_trajectory;
use magbench::tasks::{TaskId, VariantKind};
use magbench::wire::protocol::{decode_frame, parse_message, ErrorCode, Message, Step, MAX_LINE_BYTES};
use magbench::wire::{serve, ServerHandle};

struct Client {
    w: TcpStream,
    r: BufReader<TcpStream>,
}

impl Client {
    fn connect(server: &ServerHandle) -> Client {
        let w = TcpStream::connect(server.local_addr()).unwrap();
        w.set_read_timeout(Some(Duration::from_secs(20))).unwrap();
        Client {
            r: BufReader::new(w.try_clone().unwrap()),
            w,
        }
    }

    fn send(&mut self, line: &str) {
        self.w.write_all(line.as_bytes()).unwrap();
        self.w.write_all(b"\n").unwrap();
    }

    fn recv(&mut self) -> Message {
        let mut line = String::new();
        assert!(self.r.read_line(&mut line).unwrap() > 0, "server closed");
        parse_message(line.trim()).unwrap()
    }

    fn ask(&mut self, line: &str) -> Message {
        self.send(line);
        self.recv()
    }
}

fn error_code(m: &Message) -> ErrorCode {
    match m {
        Message::Error(e) => e.code,
        other => panic!("expected error, got {}", other.to_line()),
    }
}

#[test]
fn hello_lists_every_task() {
    let dir = tempfile::tempdir().unwrap();
    let server = serve("127.0.0.1:0", dir.path()).unwrap();
    let mut c = Client::connect(&server);
    let Message::Hello(h) = c.ask(r#"{"type":"hello","protocol_version":1}"#) else { panic!() };
    assert_eq!(h.protocol_version, Some(1));
    assert_eq!(h.tasks.len(), 8);
    let mtr = h.tasks.iter().find(|t| t.code == "MTR").unwrap();
    assert_eq!(mtr.horizon, 40);
    assert!(!mtr.variants.contains(&"Shape".to_string()));
}

#[test]
fn agent_episode_over_tcp() {
    let dir = tempfile::tempdir().unwrap();
    let server = serve("127.0.0.1:0", dir.path()).unwrap();
    let mut c = Client::connect(&server);
    let Message::Obs(first) = c.ask(r#"{"type":"reset","task":"MoveToRegion","variant":"Jitter","seed":4}"#) else {
        panic!()
    };
    assert_eq!((first.t, first.horizon, first.done), (0, 40, false));
    assert_eq!(decode_frame(&first.frame).unwrap().as_bytes().len(), FRAME_BYTES);
    assert_eq!(error_code(&c.ask(r#"{"type":"state"}"#)), ErrorCode::WrongMode);
    assert_eq!(error_code(&c.ask(r#"{"type":"step","action":18}"#)), ErrorCode::InvalidAction);
    assert_eq!(error_code(&c.ask(r#"{"type":"keys","held":["Up"]}"#)), ErrorCode::WrongMode);

    assert!(matches!(c.ask(r#"{"type":"record_start"}"#), Message::RecordStart(_)));
    for t in 1..=40 {
        let Message::Obs(o) = c.ask(r#"{"type":"step","action":3}"#) else { panic!() };
        assert_eq!(o.t, t);
        assert_eq!(o.done, t == 40);
        assert_eq!(o.score.is_some(), t == 40);
    }
    assert_eq!(error_code(&c.ask(r#"{"type":"step","action":3}"#)), ErrorCode::EpisodeFinished);
    let Message::Recorded(rec) = c.ask(r#"{"type":"record_stop"}"#) else { panic!() };
    assert_eq!(rec.path, "MoveToRegion/Jitter/4.traj");
    let traj = load_trajectory(&dir.path().join(&rec.path)).unwrap();
    assert!(traj.actions.iter().all(|a| a.index() == 3));
    assert_eq!(score_trajectory(TaskId::MoveToRegion, &traj).unwrap().value(), rec.score);
}

#[test]
fn malformed_input_keeps_the_session() {
    let dir = tempfile::tempdir().unwrap();
    let server = serve("127.0.0.1:0", dir.path()).unwrap();
    let mut c = Client::connect(&server);
    assert_eq!(error_code(&c.ask("not json")), ErrorCode::Malformed);
    assert_eq!(error_code(&c.ask(r#"{"type":"fly"}"#)), ErrorCode::UnknownType);
    assert_eq!(error_code(&c.ask(r#"{"type":"step","action":0}"#)), ErrorCode::NotReset);
    assert_eq!(error_code(&c.ask(r#"{"type":"record_stop"}"#)), ErrorCode::NotRecording);
    assert_eq!(
        error_code(&c.ask(r#"{"type":"reset","task":"MTR","variant":"Shape"}"#)),
        ErrorCode::UnsupportedVariant
    );
    assert_eq!(error_code(&c.ask(r#"{"type":"reset","task":"Juggle"}"#)), ErrorCode::InvalidParameter);
    let long = format!(r#"{{"type":"hello","name":"{}"}}"#, "x".repeat(MAX_LINE_BYTES + 10));
    assert_eq!(error_code(&c.ask(&long)), ErrorCode::LineTooLong);
    assert!(matches!(c.ask(r#"{"type":"hello"}"#), Message::Hello(_)));
}

#[test]
fn sessions_are_isolated() {
    let dir = tempfile::tempdir().unwrap();
    let server = serve("127.0.0.1:0", dir.path()).unwrap();
    let mut a = Client::connect(&server);
    let mut b = Client::connect(&server);
    a.ask(r#"{"type":"reset","task":"FD","variant":"Layout","seed":1}"#);
    assert_eq!(error_code(&b.ask(r#"{"type":"step","action":0}"#)), ErrorCode::NotReset);
    let Message::Obs(o) = a.ask(r#"{"type":"step","action":0}"#) else { panic!() };
    assert_eq!(o.t, 1);
}

#[test]
fn duplicate_recordings_get_fresh_names() {
    let dir = tempfile::tempdir().unwrap();
    let server = serve("127.0.0.1:0", dir.path()).unwrap();
    let mut c = Client::connect(&server);
    let mut paths = Vec::new();
    for _ in 0..2 {
        c.ask(r#"{"type":"reset","task":"MTR","seed":9}"#);
        c.ask(r#"{"type":"record_start"}"#);
        for _ in 0..40 {
            c.ask(r#"{"type":"step","action":0}"#);
        }
        let Message::Recorded(r) = c.ask(r#"{"type":"record_stop"}"#) else { panic!() };
        paths.push(r.path);
    }
    assert_eq!(paths, ["MoveToRegion/Demo/9.traj", "MoveToRegion/Demo/9.1.traj"]);
}

#[test]
fn teleop_runs_at_eight_hertz() {
    let dir = tempfile::tempdir().unwrap();
    let server = serve("127.0.0.1:0", dir.path()).unwrap();
    let mut c = Client::connect(&server);
    c.ask(r#"{"type":"reset","task":"MTR","mode":"teleop","all_views":true}"#);
    let start = Instant::now();
    assert_eq!(error_code(&c.ask(r#"{"type":"step","action":3}"#)), ErrorCode::WrongMode);
    c.send(r#"{"type":"record_start"}"#);
    c.send(r#"{"type":"keys","held":["Up","Left"]}"#);
    let mut acks = 0;
    let mut last = None;
    while last.is_none() {
        match c.recv() {
            Message::Obs(o) => {
                let frames = o.frames.as_ref().unwrap();
                assert_eq!(frames.len(), 2);
                assert!(o.action.is_some());
                if o.done {
                    last = Some(o);
                }
            }
            Message::Keys(k) => {
                assert_eq!(k.action, Some(4));
                acks += 1;
            }
            Message::RecordStart(_) => acks += 1,
            other => panic!("{}", other.to_line()),
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert_eq!(acks, 2);
    let o = last.unwrap();
    assert_eq!(o.t, 40);
    assert!((elapsed - 5.0).abs() <= 0.25, "40 ticks took {elapsed:.3} s");

    let Message::Recorded(rec) = c.ask(r#"{"type":"record_stop"}"#) else { panic!() };
    let traj = load_trajectory(&dir.path().join(rec.path)).unwrap();
    assert_eq!(traj.actions.len(), 40);
    assert!(traj.actions[1..].iter().all(|a| a.index() == 4));
    assert_eq!(Some(rec.score), o.score);
}

#[test]
fn websocket_clients_share_the_port() {
    let dir = tempfile::tempdir().unwrap();
    let server = serve("127.0.0.1:0", dir.path()).unwrap();
    let url = format!("ws://{}/", server.local_addr());
    let (mut ws, _) = tungstenite::connect(url).unwrap();
    let mut ask = |line: &str| {
        ws.send(tungstenite::Message::text(line)).unwrap();
        loop {
            match ws.read().unwrap() {
                tungstenite::Message::Text(t) => return parse_message(t.as_str()).unwrap(),
                tungstenite::Message::Ping(_) | tungstenite::Message::Pong(_) => continue,
                other => panic!("{other:?}"),
            }
        }
    };
    assert!(matches!(ask(r#"{"type":"hello"}"#), Message::Hello(_)));
    let Message::Obs(o) = ask(r#"{"type":"reset","task":"CC","variant":"All","seed":2,"view":"allo"}"#) else {
        panic!()
    };
    assert_eq!((o.view.as_str(), o.horizon), ("allo", 320));
    let Message::Obs(o) = ask(r#"{"type":"step","action":12}"#) else { panic!() };
    assert_eq!((o.t, o.done), (1, false));
    assert_eq!(error_code(&ask("{")), ErrorCode::Malformed);
}

/// Answers every observation with a fixed action and counts what it saw.
fn fixed_policy(listener: TcpListener, action: i64, episodes: usize) -> std::thread::JoinHandle<Vec<usize>> {
    std::thread::spawn(move || {
        let mut steps = Vec::new();
        for stream in listener.incoming().take(episodes) {
            let stream = stream.unwrap();
            let mut w = stream.try_clone().unwrap();
            let mut n = 0;
            for line in BufReader::new(stream).lines() {
                let reply = match parse_message(&line.unwrap()).unwrap() {
                    Message::Obs(o) => {
                        assert_eq!(o.stack.as_ref().map(Vec::len), Some(4));
                        n += 1;
                        Message::Step(Step { action })
                    }
                    Message::Reset(r) => {
                        assert_eq!(r.task, "MoveToRegion");
                        Message::Hello(Default::default())
                    }
                    _ => Message::Hello(Default::default()),
                };
                writeln!(w, "{}", reply.to_line()).unwrap();
            }
            steps.push(n);
        }
        steps
    })
}

#[test]
fn remote_policy_is_evaluated_like_a_local_one() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let seen = fixed_policy(listener, 0, 3);
    let policy: PolicySpec = format!("remote:{addr}").parse().unwrap();
    let remote = evaluate(&policy, TaskId::MoveToRegion, VariantKind::Layout, &[0], 3, ViewKind::Egocentric).unwrap();
    let noop = evaluate(&PolicySpec::Noop, TaskId::MoveToRegion, VariantKind::Layout, &[0], 3, ViewKind::Egocentric).unwrap();
    assert_eq!(remote.per_run_means, noop.per_run_means);
    assert_eq!(seen.join().unwrap(), [40, 40, 40]);
}

#[test]
fn remote_policy_errors_surface() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let _seen = fixed_policy(listener, 99, 1);
    let policy: PolicySpec = format!("remote:{addr}").parse().unwrap();
    let r = evaluate(&policy, TaskId::MoveToRegion, VariantKind::Demo, &[0], 1, ViewKind::Egocentric);
    match r {
        Err(magbench::Error::Policy(msg)) => assert!(msg.contains("invalid action index 99"), "{msg}"),
        other => panic!("{other:?}"),
    }
}
