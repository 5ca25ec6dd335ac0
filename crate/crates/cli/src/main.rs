mod backend;
mod serve;
mod wire;

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use questforge::llm::{LlmBackend, RecordingBackend};
use questforge::quest::funnel;
use questforge::session::{
    read_log, render_log, replay, run_session, walkthrough_commands, write_log, Command, EndReason, LogRecord,
    RecordKind, Session, SessionConfig, COMMAND_HELP,
};

use backend::BackendSpec;

#[derive(Parser)]
#[command(name = "questforge", version, about = "Persona-driven NPCs in a small quest world")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Play in the terminal.
    Play {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// remote, scripted[:<rules.jsonl>] or replay:<tape.jsonl>
        #[arg(long, default_value = "remote")]
        backend: BackendSpec,
        /// Exchanges between sub-goal updates.
        #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..))]
        k: u32,
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Run a scripted player to the end and write the session log.
    Run {
        /// Player commands as JSON Lines; defaults to the bundled walkthrough.
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value = "scripted")]
        backend: BackendSpec,
        #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..))]
        k: u32,
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        session_id: Option<String>,
        /// Also write every model reply to this tape, for `--backend replay:<tape>`.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Quest funnel over session logs (files or directories).
    Funnel {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Re-run a session log from its seed, commands and recorded replies.
    Replay {
        log: PathBuf,
        /// Exit 0 only if the replay reproduces the log byte for byte.
        #[arg(long)]
        verify: bool,
    },
    /// Serve sessions to websocket clients.
    Serve {
        #[arg(long, default_value_t = 8787)]
        port: u16,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value = "scripted")]
        backend: BackendSpec,
        /// Also send sub-goals and warnings to clients.
        #[arg(long)]
        debug: bool,
        #[arg(long, default_value = "logs")]
        log_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Cmd) -> Result<ExitCode> {
    match command {
        Cmd::Play { seed, backend, k, log } => play(SessionConfig { k, ..SessionConfig::with_seed(seed) }, &backend, log),
        Cmd::Run { script, seed, backend, k, log, session_id, record } => {
            let commands = match script {
                Some(path) => Command::load_script(&path)?,
                None => walkthrough_commands(),
            };
            let config = SessionConfig { k, session_id, ..SessionConfig::with_seed(seed) };
            let out = run_session(config, recording(backend.build()?, record.as_deref())?, commands)?;
            let letters: String = out.progress.completed_steps().iter().map(|s| s.letter()).collect();
            let end = out.records.last().expect("finished sessions have records");
            println!(
                "{}: {} after {} turns, {} ticks; steps completed: {}",
                end.session,
                serde_json::to_value(out.reason)?.as_str().unwrap_or_default(),
                end.payload["turns"],
                end.tick,
                if letters.is_empty() { "none".to_string() } else { letters }
            );
            if let Some(path) = log {
                write_log(&path, &out.records).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Funnel { logs, json } => {
            let mut files = Vec::new();
            for path in &logs {
                collect_logs(path, &mut files)?;
            }
            let texts = files
                .iter()
                .map(|p| Ok((p.display().to_string(), std::fs::read_to_string(p).with_context(|| p.display().to_string())?)))
                .collect::<Result<Vec<_>>>()?;
            let report = funnel(texts.iter().map(|(n, t)| (n.as_str(), t.as_str())));
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            if json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.render_table());
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Replay { log, verify } => {
            let text = std::fs::read_to_string(&log).with_context(|| format!("reading {}", log.display()))?;
            let records = read_log(&log)?;
            match replay(&records, &SessionConfig::default()) {
                Ok(outcome) => {
                    if verify && render_log(&outcome.records) != text {
                        eprintln!("replay matches record by record but not byte for byte");
                        return Ok(ExitCode::from(1));
                    }
                    let letters: String = outcome.progress.completed_steps().iter().map(|s| s.letter()).collect();
                    println!("replayed {} records; steps: {letters}; world {}", records.len(), outcome.world.digest());
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) if verify => {
                    eprintln!("verification failed: {e}");
                    Ok(ExitCode::from(1))
                }
                Err(e) => Err(e.into()),
            }
        }
        Cmd::Serve { port, seed, backend, debug, log_dir } => {
            backend.build().context("checking backend")?;
            serve::serve(serve::ServeOptions { port, seed, backend, debug, log_dir })?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn recording(backend: Box<dyn LlmBackend + Send>, tape: Option<&Path>) -> Result<Box<dyn LlmBackend + Send>> {
    let Some(path) = tape else { return Ok(backend) };
    std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(Box::new(RecordingBackend::with_file(backend, path)?))
}

fn collect_logs(path: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(path)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
        entries.sort();
        out.extend(entries.into_iter().filter(|p| p.extension().is_some_and(|e| e == "jsonl")));
    } else if path.exists() {
        out.push(path.to_path_buf());
    } else {
        bail!("{} does not exist", path.display());
    }
    Ok(())
}

fn show(records: &[LogRecord]) {
    for r in records {
        let text = r.payload.get("text").and_then(|t| t.as_str()).unwrap_or_default();
        match r.kind {
            RecordKind::Utterance if r.actor != "player" => println!("{}: {text}", display_name(&r.actor)),
            RecordKind::Command if r.payload.get("ok").is_some() => println!("  ({text})"),
            RecordKind::Warning => println!("  [{}]", r.payload["message"].as_str().unwrap_or_default()),
            RecordKind::QuestStep => {
                println!("** quest step ({}) {}: {}", r.payload["letter"].as_str().unwrap_or("?"), r.payload["step"].as_str().unwrap_or("?"), r.payload["status"].as_str().unwrap_or("?"))
            }
            RecordKind::SessionEnd => println!("** session over: {}", r.payload["reason"].as_str().unwrap_or("?")),
            _ => {}
        }
    }
}

fn display_name(id: &str) -> String {
    let mut chars = id.chars();
    chars.next().map_or_else(String::new, |c| c.to_uppercase().chain(chars).collect())
}

fn play(config: SessionConfig, backend: &BackendSpec, log: Option<PathBuf>) -> Result<ExitCode> {
    let mut session = Session::new(config, backend.build()?)?;
    println!("Type `help` for commands, `quit` to leave.");
    let stdin = std::io::stdin();
    let mut lines = stdin.lock().lines();
    while session.ended().is_none() {
        let p = session.world().player();
        print!("[t{} hp {} @ {},{},{}] > ", session.world().tick, p.health, p.position.x, p.position.y, p.position.z);
        std::io::stdout().flush()?;
        let Some(line) = lines.next() else { break };
        let line = line?;
        match line.trim() {
            "" => continue,
            "quit" | "exit" => break,
            "help" => {
                println!("{COMMAND_HELP}");
                continue;
            }
            "inventory" | "inv" => {
                println!("{}", session.world().player().inventory.describe());
                continue;
            }
            _ => {}
        }
        match Command::parse_line(&line) {
            Ok(command) => {
                let records = session.handle(&command)?.to_vec();
                show(&records);
            }
            Err(e) => println!("{e}"),
        }
    }
    let before = session.records().len();
    session.finish(EndReason::InputExhausted);
    show(&session.records()[before..]);
    if let Some(path) = log {
        write_log(&path, session.records()).with_context(|| format!("writing {}", path.display()))?;
        println!("log written to {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}
