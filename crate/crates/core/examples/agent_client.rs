//! Starts a server in-process and plays one agent-mode episode over TCP.
//!
//! Pass `HOST:PORT` to talk to an already running `magbench serve` instead.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;

use magbench::wire::protocol::{decode_frame, parse_message, Message};
use magbench::wire::serve;

fn send(w: &mut TcpStream, r: &mut impl BufRead, line: &str) -> Message {
    writeln!(w, "{line}").expect("write");
    let mut reply = String::new();
    r.read_line(&mut reply).expect("read");
    parse_message(reply.trim()).expect("server speaks the protocol")
}

fn main() -> magbench::Result<()> {
    let mut local = None;
    let addr = match std::env::args().nth(1) {
        Some(a) => a,
        None => {
            let h = serve("127.0.0.1:0", std::env::temp_dir().join("magbench-agent-client"))?;
            let a = h.local_addr().to_string();
            local = Some(h);
            a
        }
    };
    let mut w = TcpStream::connect(&addr)?;
    let mut r = BufReader::new(w.try_clone()?);

    if let Message::Hello(h) = send(&mut w, &mut r, r#"{"type":"hello","protocol_version":1}"#) {
        println!("server {:?}, protocol {:?}, {} tasks", h.name, h.protocol_version, h.tasks.len());
    }
    let mut msg = send(&mut w, &mut r, r#"{"type":"reset","task":"MTR","variant":"Layout","seed":5}"#);
    // Forward-left forever; the score arrives with the final observation.
    loop {
        match msg {
            Message::Obs(o) if o.done => {
                println!("done at t={} score={:?}", o.t, o.score);
                break;
            }
            Message::Obs(o) => {
                let frame = decode_frame(&o.frame)?;
                if o.t % 10 == 0 {
                    println!("t={:>2} centre pixel {:?}", o.t, frame.pixel(48, 48));
                }
            }
            other => panic!("unexpected reply {other:?}"),
        }
        msg = send(&mut w, &mut r, r#"{"type":"step","action":4}"#);
    }
    let err = send(&mut w, &mut r, r#"{"type":"step","action":4}"#);
    println!("stepping past the horizon: {}", err.to_line());
    drop(local);
    Ok(())
}
