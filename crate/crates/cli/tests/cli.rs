use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_questforge"))
}

fn code(cmd: &mut Command) -> i32 {
    cmd.stdout(Stdio::null()).stderr(Stdio::null()).status().unwrap().code().unwrap()
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/funnel")
}

#[test]
fn run_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("walk.jsonl");
    let out = bin().args(["run", "--log"]).arg(&log).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("steps completed: abcdefg"));
    assert_eq!(code(bin().args(["replay", "--verify"]).arg(&log)), 0);

    // Any edit to the log breaks verification.
    let text = std::fs::read_to_string(&log).unwrap().replace("\"health\":18", "\"health\":17");
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, text).unwrap();
    assert_eq!(code(bin().args(["replay", "--verify"]).arg(&bad)), 1);
}

#[test]
fn run_with_a_player_script_and_rules() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("player.jsonl");
    let rules = dir.path().join("rules.jsonl");
    std::fs::write(&script, "{\"verb\":\"say\",\"text\":\"Hi\"}\n{\"verb\":\"wait\",\"ticks\":3}\n").unwrap();
    std::fs::write(&rules, "{\"match\":\"always\",\"response\":\"Greetings.\"}\n").unwrap();
    let log = dir.path().join("out.jsonl");
    let backend = format!("scripted:{}", rules.display());
    let out = bin()
        .args(["run", "--seed", "7", "--backend", &backend, "--script"])
        .arg(&script)
        .arg("--log")
        .arg(&log)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read_to_string(&log).unwrap().contains("Greetings."));
    assert_eq!(code(bin().args(["replay", "--verify"]).arg(&log)), 0);
}

#[test]
fn funnel_over_the_corpus() {
    let out = bin().arg("funnel").arg(fixtures()).output().unwrap();
    assert!(out.status.success());
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("success rate: 25.0% (7/28)"), "{table}");

    let out = bin().args(["funnel", "--json"]).arg(fixtures()).output().unwrap();
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["success_rate"], 0.25);
    assert_eq!(report["total"], 28);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&mut bin()), 2);
    assert_eq!(code(bin().args(["run", "--backend", "gpt5"])), 2);
    assert_eq!(code(bin().args(["play", "--k", "0"])), 2);
    assert_eq!(code(bin().arg("funnel")), 2);
    assert_eq!(code(bin().args(["frobnicate"])), 2);
}

#[test]
fn runtime_errors_exit_1() {
    assert_eq!(code(bin().args(["replay", "/nonexistent/log.jsonl", "--verify"])), 1);
    assert_eq!(code(bin().args(["funnel", "/nonexistent"])), 1);
    assert_eq!(code(bin().args(["run", "--script", "/nonexistent.jsonl"])), 1);
    let remote = bin().args(["run", "--backend", "remote"]).env_remove("QUESTFORGE_API_KEY").stderr(Stdio::null()).status().unwrap();
    assert_eq!(remote.code(), Some(1));
}

#[test]
fn play_reads_commands_from_stdin() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("play.jsonl");
    let mut child = bin()
        .args(["play", "--seed", "7", "--backend", "scripted", "--log"])
        .arg(&log)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"say Hello there! Who are you?\nmove sideways\nopen\nquit\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("Elena: Welcome, traveler!"), "{text}");
    assert!(text.contains("cannot understand") || text.contains("unknown"), "{text}");
    assert!(text.contains("quest step (b)"), "{text}");
    assert_eq!(code(bin().args(["replay", "--verify"]).arg(&log)), 0);
}

struct Server {
    child: Child,
    addr: String,
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn start_server(log_dir: &Path, extra: &[&str]) -> Server {
    let mut child = bin()
        .args(["serve", "--port", "0", "--seed", "100", "--log-dir"])
        .arg(log_dir)
        .args(extra)
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").expect("banner").to_string();
    Server { child, addr }
}

type Socket = tungstenite::WebSocket<tungstenite::stream::MaybeTlsStream<std::net::TcpStream>>;

fn connect(server: &Server) -> Socket {
    tungstenite::connect(&server.addr).unwrap().0
}

fn send(ws: &mut Socket, msg: &str) {
    ws.send(tungstenite::Message::text(msg)).unwrap();
}

fn recv(ws: &mut Socket) -> Value {
    loop {
        if let tungstenite::Message::Text(t) = ws.read().unwrap() {
            return serde_json::from_str(&t).unwrap();
        }
    }
}

/// Reads messages up to and including the next `world_delta`.
fn until_delta(ws: &mut Socket) -> Vec<Value> {
    let mut out = Vec::new();
    loop {
        let m = recv(ws);
        let done = m["type"] == "world_delta";
        out.push(m);
        if done {
            return out;
        }
    }
}

fn wait_for(path: &Path) -> String {
    let start = Instant::now();
    while start.elapsed() < Duration::from_secs(10) {
        if let Ok(text) = std::fs::read_to_string(path) {
            if text.contains("\"session_end\"") {
                return text;
            }
        }
        std::thread::sleep(Duration::from_millis(50));
    }
    panic!("{} never appeared", path.display());
}

#[test]
fn serve_speaks_the_wire_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let server = start_server(dir.path(), &["--debug"]);

    let mut a = connect(&server);
    send(&mut a, r#"{"verb":"hello"}"#);
    let snap = recv(&mut a);
    assert_eq!(snap["type"], "world_delta");
    assert_eq!(snap["snapshot"]["seed"], 100);
    assert_eq!(snap["tick"], 0);

    let mut b = connect(&server);
    send(&mut b, r#"{"verb":"hello"}"#);
    assert_eq!(recv(&mut b)["snapshot"]["seed"], 101);

    send(&mut a, r#"{"verb":"say","text":"Hello there! Who are you?"}"#);
    let msgs = until_delta(&mut a);
    assert!(msgs.iter().any(|m| m["type"] == "utterance" && m["speaker"] == "elena"));
    let progress = recv(&mut a);
    assert_eq!(progress["type"], "quest_progress");
    assert_eq!(progress["letter"], "a");

    // b's world did not move when a talked.
    send(&mut b, r#"{"verb":"wait","ticks":2}"#);
    let delta = until_delta(&mut b);
    assert_eq!(delta.last().unwrap()["tick"], 2);

    send(&mut a, "not json");
    assert_eq!(recv(&mut a)["type"], "error");
    send(&mut a, r#"{"verb":"fly"}"#);
    assert_eq!(recv(&mut a)["type"], "error");

    a.close(None).unwrap();
    let _ = a.read();
    let log = wait_for(&dir.path().join("serve-100-0.jsonl"));
    assert!(log.contains("\"reason\":\"disconnected\""));
    let path = dir.path().join("serve-100-0.jsonl");
    assert_eq!(code(bin().args(["replay", "--verify"]).arg(&path)), 0);

    drop(b);
    wait_for(&dir.path().join("serve-101-1.jsonl"));
}

#[test]
fn serve_hides_sub_goals_without_debug() {
    let dir = tempfile::tempdir().unwrap();
    let server = start_server(dir.path(), &[]);
    let mut ws = connect(&server);
    let mut notices = 0;
    for _ in 0..6 {
        send(&mut ws, r#"{"verb":"say","text":"Tell me more."}"#);
        let msgs = until_delta(&mut ws);
        notices += msgs.iter().filter(|m| m["type"] == "subgoal_notice").count();
    }
    assert_eq!(notices, 0);
    drop(ws);
    let log = wait_for(&dir.path().join("serve-100-0.jsonl"));
    assert!(log.contains("\"kind\":\"subgoal\""));
}

#[test]
fn serve_reports_a_busy_port() {
    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let dir = tempfile::tempdir().unwrap();
    let status = bin().args(["serve", "--port", &port, "--log-dir"]).arg(dir.path()).stderr(Stdio::null()).status().unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn recorded_tape_replays_the_same_session() {
    let dir = tempfile::tempdir().unwrap();
    let tape = dir.path().join("tape.jsonl");
    let first = dir.path().join("first.jsonl");
    let second = dir.path().join("second.jsonl");
    assert_eq!(code(bin().args(["run", "--record"]).arg(&tape).arg("--log").arg(&first)), 0);
    let backend = format!("replay:{}", tape.display());
    assert_eq!(code(bin().args(["run", "--backend", &backend, "--log"]).arg(&second)), 0);
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());

    // A different utterance changes the prompt, so the tape no longer fits.
    let script = dir.path().join("other.jsonl");
    std::fs::write(&script, "{\"verb\":\"say\",\"text\":\"Something else\"}\n").unwrap();
    let third = dir.path().join("third.jsonl");
    assert_eq!(code(bin().args(["run", "--backend", &backend, "--script"]).arg(&script).arg("--log").arg(&third)), 0);
    let log = std::fs::read_to_string(&third).unwrap();
    assert!(log.contains("digest mismatch at turn 1"), "{log}");
    assert!(log.contains("\"degraded\":true"));
}
