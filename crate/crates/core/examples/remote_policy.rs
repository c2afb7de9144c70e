//! Serves a policy over the wire protocol and evaluates it with the harness.
//!
//! The policy here only looks at pixels: it turns until the goal colour is in
//! the middle of the egocentric frame, then drives towards it
//! and stops once the region surrounds the robot.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;

use magbench::eval::{evaluate, PolicySpec};
use magbench::render::{palette, ViewKind};
use magbench::tasks::{TaskId, VariantKind};
use magbench::wire::protocol::{decode_frame, parse_message, Hello, Message, Step};

fn choose(frame: &magbench::render::Frame) -> i64 {
    // Goal regions are drawn as the entity colour blended 2:3 with white.
    let tints = [palette::RED, palette::GREEN, palette::BLUE, palette::YELLOW]
        .map(|c| c.map(|v| ((2 * u32::from(v) + 3 * 255) / 5) as u8));
    // The robot sits at (48, 72); goal colour just ahead and behind means we are inside.
    if tints.contains(&frame.pixel(48, 64)) && tints.contains(&frame.pixel(48, 81)) {
        return 0;
    }
    let (mut left, mut right) = (0usize, 0usize);
    for y in 0..72 {
        for x in 0..96 {
            if tints.contains(&frame.pixel(x, y)) {
                if x < 44 {
                    left += 1;
                } else if x > 52 {
                    right += 1;
                }
            }
        }
    }
    match (left, right) {
        (0, 0) => 1,                  // nothing ahead: spin left
        (l, r) if l > 2 * r => 4,     // forward-left
        (l, r) if r > 2 * l => 5,     // forward-right
        _ => 3,                       // forward
    }
}

fn serve_policy(listener: TcpListener) {
    for stream in listener.incoming().flatten() {
        let mut w = stream.try_clone().expect("clone");
        let r = BufReader::new(stream);
        for line in r.lines() {
            let Ok(line) = line else { break };
            let reply = match parse_message(&line) {
                Ok(Message::Hello(_)) => Message::Hello(Hello::default()),
                Ok(Message::Obs(o)) => {
                    let frame = decode_frame(&o.frame).expect("frame");
                    Message::Step(Step { action: choose(&frame) })
                }
                Ok(_) => Message::Hello(Hello::default()),
                Err(e) => Message::Error(e),
            };
            if writeln!(w, "{}", reply.to_line()).is_err() {
                break;
            }
        }
    }
}

fn main() -> magbench::Result<()> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    std::thread::spawn(move || serve_policy(listener));

    let policy: PolicySpec = format!("remote:{addr}").parse()?;
    for variant in [VariantKind::Demo, VariantKind::Layout] {
        let s = evaluate(&policy, TaskId::MoveToRegion, variant, &[0, 1], 5, ViewKind::Egocentric)?;
        println!("{} {}: {}", policy.name(), variant, s.cell());
    }
    Ok(())
}
