use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Command, Stdio};

use magbench::eval::CSV_HEADER;
use magbench::wire::protocol::{parse_message, Message};

fn magbench() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_magbench"));
    c.env_remove("MAGBENCH_DATA");
    c
}

fn eval(args: &[&str]) -> std::process::Output {
    magbench().arg("eval").args(args).output().unwrap()
}

#[test]
fn eval_csv_to_stdout() {
    let out = eval(&["--task", "MTR", "--variant", "all", "--policy", "mtr-expert", "--rollouts", "4", "--seeds", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6, "{text}");
    assert_eq!(rows[0], "MoveToRegion,Demo,mtr-expert,1.0000,0.0000,2,4");
    for r in &rows {
        assert_eq!(r.split(',').count(), 7);
    }
}

#[test]
fn eval_writes_out_file_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = eval(&[
            "--task", "FD", "--variant", "Layout", "--policy", "random", "--rollouts", "3", "--seeds", "2",
            "--format", "markdown", "--out", path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
        std::fs::read_to_string(path).unwrap()
    };
    let a = run("a.md");
    assert!(a.starts_with("| policy | task | Layout |"), "{a}");
    assert!(a.contains("| random | FindDupe |"));
    assert_eq!(a, run("b.md"));
}

#[test]
fn configuration_errors_exit_2() {
    let cases: [&[&str]; 7] = [
        &["--policy", "bogus"],
        &["--policy", "noop", "--task", "Juggle"],
        &["--policy", "noop", "--task", "MTR", "--variant", "Shape"],
        &["--policy", "noop", "--view", "sideways"],
        &["--policy", "noop", "--format", "html"],
        &["--policy", "noop", "--rollouts", "0"],
        &["--policy", "mtr-expert", "--task", "all"],
    ];
    for args in cases {
        let out = eval(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty());
    }
    // Usage errors from the argument parser share the code.
    assert_eq!(magbench().args(["eval", "--rollouts", "x"]).output().unwrap().status.code(), Some(2));
}

#[test]
fn serve_prefers_magbench_data() {
    let flag_dir = tempfile::tempdir().unwrap();
    let env_dir = tempfile::tempdir().unwrap();
    let mut child = magbench()
        .args(["serve", "--bind", "127.0.0.1:0", "--data"])
        .arg(flag_dir.path())
        .env("MAGBENCH_DATA", env_dir.path())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut banner = String::new();
    BufReader::new(child.stderr.take().unwrap()).read_line(&mut banner).unwrap();
    let addr = banner
        .split_whitespace()
        .find(|w| w.starts_with("127.0.0.1:"))
        .map(|w| w.trim_end_matches(','))
        .unwrap_or_else(|| panic!("no address in {banner:?}"))
        .to_string();

    let mut w = TcpStream::connect(&addr).unwrap();
    let mut r = BufReader::new(w.try_clone().unwrap());
    let mut ask = |line: &str| {
        writeln!(w, "{line}").unwrap();
        let mut reply = String::new();
        r.read_line(&mut reply).unwrap();
        parse_message(reply.trim()).unwrap()
    };
    ask(r#"{"type":"reset","task":"MTR","seed":3}"#);
    ask(r#"{"type":"record_start"}"#);
    for _ in 0..40 {
        ask(r#"{"type":"step","action":0}"#);
    }
    let reply = ask(r#"{"type":"record_stop"}"#);
    child.kill().unwrap();
    child.wait().unwrap();

    let Message::Recorded(rec) = reply else { panic!("{}", reply.to_line()) };
    assert!(env_dir.path().join(&rec.path).is_file());
    assert!(!flag_dir.path().join(&rec.path).exists());
}
