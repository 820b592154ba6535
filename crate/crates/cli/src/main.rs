use std::io::{BufRead, IsTerminal, Write};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use stratum::session::{Output, Session};
use stratum::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Transcript,
    Json,
}

/// Interpreter for rewriting modules with strategies.
#[derive(Parser, Debug)]
#[command(name = "stratum", version)]
struct Args {
    /// Files to load before running commands.
    files: Vec<String>,
    /// Run the commands in this file and exit instead of reading stdin.
    #[arg(long)]
    batch: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Transcript)]
    format: Format,
    /// Equational steps allowed per reduction.
    #[arg(long)]
    limit_eq: Option<u64>,
    /// States allowed per rewriting command.
    #[arg(long)]
    limit_states: Option<u64>,
    /// Report duplicate strategy solutions.
    #[arg(long)]
    no_dedup: bool,
}

struct Printer {
    format: Format,
    diagnostics: usize,
}

impl Printer {
    fn report(&mut self, results: Vec<Result<Output>>) {
        let mut stdout = std::io::stdout().lock();
        for r in results {
            match (r, self.format) {
                (Ok(o), Format::Transcript) => {
                    let text = o.transcript();
                    if !text.is_empty() {
                        let _ = writeln!(stdout, "{text}");
                    }
                }
                (Ok(o), Format::Json) => {
                    let _ = writeln!(stdout, "{}", serde_json::to_string(&o).unwrap_or_default());
                }
                (Err(e), Format::Transcript) => {
                    self.diagnostics += 1;
                    eprintln!("Warning: {e}");
                }
                (Err(e), Format::Json) => {
                    self.diagnostics += 1;
                    let msg = serde_json::json!({ "kind": "error", "message": e.to_string() });
                    let _ = writeln!(stdout, "{msg}");
                }
            }
        }
        let _ = stdout.flush();
    }
}

/// Whether `buf` holds only complete modules and commands.
fn complete(buf: &str) -> bool {
    let toks: Vec<&str> = buf.split_whitespace().collect();
    let Some(last) = toks.last() else {
        return false;
    };
    let opened = toks.iter().filter(|t| matches!(**t, "fmod" | "mod" | "smod")).count();
    let closed = toks.iter().filter(|t| matches!(**t, "endfm" | "endm" | "endsm")).count();
    if opened > closed {
        return false;
    }
    last.ends_with('.') || matches!(*last, "endfm" | "endm" | "endsm")
}

fn repl(session: &mut Session, printer: &mut Printer) {
    let stdin = std::io::stdin();
    let interactive = stdin.is_terminal();
    let mut buf = String::new();
    let prompt = |buf: &str| {
        if interactive {
            print!("{}", if buf.is_empty() { "stratum> " } else { "> " });
            let _ = std::io::stdout().flush();
        }
    };
    prompt(&buf);
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        if buf.is_empty() && matches!(line.trim(), "q" | "quit" | "q ." | "quit .") {
            return;
        }
        buf.push_str(&line);
        buf.push('\n');
        if complete(&buf) {
            let text = std::mem::take(&mut buf);
            printer.report(session.run_text(&text));
        }
        prompt(&buf);
    }
    if !buf.trim().is_empty() {
        printer.report(session.run_text(&buf));
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut session = Session::new();
    session.config.eq_steps = args.limit_eq;
    session.config.states = args.limit_states;
    session.config.dedup = !args.no_dedup;
    let mut printer = Printer { format: args.format, diagnostics: 0 };
    for f in &args.files {
        printer.report(session.load_file(f));
    }
    match &args.batch {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => printer.report(session.run_text(&text)),
            Err(e) => {
                eprintln!("Error: {path}: {e}");
                return ExitCode::from(2);
            }
        },
        None => repl(&mut session, &mut printer),
    }
    if printer.diagnostics > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
