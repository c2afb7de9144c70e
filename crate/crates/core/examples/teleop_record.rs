//! Drives a teleop session with scripted key presses and records the episode.
//!
//! The server ticks at 8 Hz, so this takes the full 5 s of a MoveToRegion episode.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;

use magbench::env::load_trajectory;
use magbench::wire::protocol::{parse_message, Message};
use magbench::wire::serve;

fn main() -> magbench::Result<()> {
    let data = std::env::temp_dir().join("magbench-teleop");
    let server = serve("127.0.0.1:0", &data)?;
    let mut w = TcpStream::connect(server.local_addr())?;
    let mut r = BufReader::new(w.try_clone()?);
    let mut recv = || -> Message {
        let mut line = String::new();
        r.read_line(&mut line).expect("read");
        parse_message(line.trim()).expect("valid message")
    };

    writeln!(w, r#"{{"type":"reset","task":"MTR","mode":"teleop","all_views":true}}"#)?;
    recv();
    writeln!(w, r#"{{"type":"record_start"}}"#)?;
    recv();
    writeln!(w, r#"{{"type":"keys","held":["Up","Left"]}}"#)?;
    loop {
        match recv() {
            Message::Obs(o) => {
                print!("\rt={:>2}/{} action={:?}   ", o.t, o.horizon, o.action);
                std::io::stdout().flush()?;
                // Turn towards the goal, drive, then let go of everything.
                match o.t {
                    4 => writeln!(w, r#"{{"type":"keys","held":["Up"]}}"#)?,
                    21 => writeln!(w, r#"{{"type":"keys","held":[]}}"#)?,
                    _ => {}
                }
                if o.done {
                    println!("\nscore {:?}", o.score);
                    break;
                }
            }
            Message::Keys(k) => println!("\nkeys {:?} -> action {:?}", k.held, k.action),
            other => println!("\n{}", other.to_line()),
        }
    }
    writeln!(w, r#"{{"type":"record_stop"}}"#)?;
    if let Message::Recorded(rec) = recv() {
        let traj = load_trajectory(&data.join(&rec.path))?;
        println!("saved {} ({} actions, score {:.3})", rec.path, traj.actions.len(), rec.score);
    }
    Ok(())
}
