use std::io::Write;
use std::process::{Command, Stdio};

const CORPUS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/corpus");

fn stratum(args: &[&str], stdin: &str) -> (i32, String, String) {
    let mut child = Command::new(env!("CARGO_BIN_EXE_stratum"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into(), String::from_utf8_lossy(&out.stderr).into())
}

fn puzzle() -> String {
    format!("{CORPUS}/15puzzle.maude")
}

#[test]
fn transcript_from_stdin() {
    let input = "srewrite in 15PUZZLE : 1 b 2 using idle .\nsrew in 15PUZZLE : 1 b 2\n  using fail .\n";
    let (code, out, err) = stratum(&[&puzzle()], input);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("Solution 1\nrewrites: 0\nresult Row: 1 b 2\n\nNo more solutions."), "{out}");
    assert!(out.contains("No solution."), "{out}");
}

#[test]
fn reduce_and_search() {
    let input = "select 15PUZZLE .\nreduce size(1 b 2 3) .\nsearch 1 b 2 3 =>* 1 2 R .\n";
    let (code, out, _) = stratum(&[&puzzle()], input);
    assert_eq!(code, 0);
    assert!(out.contains("result NzNat: 4"), "{out}");
    assert!(out.contains("R:Row --> b 3"), "{out}");
    assert!(out.contains("R:Row --> 3 b"), "{out}");
}

#[test]
fn continue_and_json() {
    let queens = format!("{CORPUS}/queens.maude");
    let input = "srew [1] nil using solve .\ncontinue 1 .\n";
    let (code, out, _) = stratum(&[&queens, "--format", "json"], input);
    assert_eq!(code, 0);
    let lines: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let strat: Vec<&serde_json::Value> = lines.iter().filter(|v| v["kind"] == "strategy").collect();
    assert_eq!(strat.len(), 2);
    assert_eq!(strat[1]["solutions"][0]["term"], "1 6 8 3 7 4 2 5");
    assert_eq!(strat[1]["solutions"][0]["index"], 2);
}

#[test]
fn diagnostics_set_exit_code() {
    let (code, _, err) = stratum(&[&puzzle()], "continue 1 .\n");
    assert_eq!(code, 1);
    assert!(err.contains("no open command"), "{err}");
    let (code, _, err) = stratum(&["--batch", "/nonexistent/file"], "");
    assert_eq!(code, 2, "{err}");
}

#[test]
fn batch_with_limits() {
    let dir = std::env::temp_dir().join(format!("stratum-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let batch = dir.join("cmds.maude");
    std::fs::write(
        &batch,
        format!("load {CORPUS}/15puzzle.maude .\nload {CORPUS}/fairness.maude .\ndsrew [1] b 1 using loopforever(0) | right .\n"),
    )
    .unwrap();
    let (code, _, err) = stratum(&["--batch", batch.to_str().unwrap(), "--limit-states", "500"], "");
    assert_eq!(code, 1);
    assert!(err.contains("state limit of 500 exceeded"), "{err}");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn module_typed_at_the_prompt() {
    let input = "mod TOY is\n  sort S .\n  ops a c : -> S .\n  rl [r] : a => c .\nendm\nsrew a using r .\n";
    let (code, out, err) = stratum(&[], input);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("result S: c"), "{out}");
}
