//! Fixture files with expected command results, and a runner that diffs
//! them against a fresh session.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::session::{Output, Session};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Solutions compared as sets.
    Set,
    /// Solutions compared in order.
    Sequence,
    /// Only the number of solutions is compared.
    Count,
    /// The command must fail with a message containing `expected[0]`.
    Error,
}

/// Where an expected value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// Copied from a published session transcript.
    Transcript,
    /// Follows from the definition of the construct.
    Definition,
    /// Computed by an independent oracle, named in `oracle`.
    Derived,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Expectation {
    pub command: String,
    pub mode: Mode,
    #[serde(default)]
    pub expected: Vec<String>,
    #[serde(default)]
    pub count: Option<usize>,
    pub origin: Origin,
    #[serde(default)]
    pub oracle: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Fixture {
    pub name: String,
    /// Source files, relative to the fixture file.
    pub files: Vec<String>,
    #[serde(default)]
    pub states: Option<u64>,
    pub commands: Vec<Expectation>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Entry {
    pub command: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub fixture: String,
    pub entries: Vec<Entry>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }
}

fn normalize(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn load_fixture(path: &Path) -> Result<Fixture> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let fx: Fixture = serde_json::from_str(&text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    for c in &fx.commands {
        if c.origin == Origin::Derived && c.oracle.is_none() {
            return Err(Error::Io(format!("{}: derived expectation without oracle: {}", path.display(), c.command)));
        }
    }
    Ok(fx)
}

/// The fixture files of a directory, sorted by name.
pub fn fixtures_in(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut out: Vec<PathBuf> =
        rd.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|x| x == "json")).collect();
    out.sort();
    Ok(out)
}

fn check(exp: &Expectation, got: Result<Output>) -> (bool, String) {
    let out = match (exp.mode, got) {
        (Mode::Error, Err(e)) => {
            let want = exp.expected.first().map(String::as_str).unwrap_or("");
            let msg = e.to_string();
            return (msg.contains(want), msg);
        }
        (Mode::Error, Ok(o)) => return (false, format!("expected an error, got {:?}", o.terms())),
        (_, Err(e)) => return (false, e.to_string()),
        (_, Ok(o)) => o,
    };
    let got: Vec<String> = out.terms().iter().map(|t| normalize(t)).collect();
    let want: Vec<String> = exp.expected.iter().map(|t| normalize(t)).collect();
    let ok = match exp.mode {
        Mode::Sequence => got == want,
        Mode::Set => {
            let (mut a, mut b) = (got.clone(), want.clone());
            a.sort();
            a.dedup();
            b.sort();
            b.dedup();
            a == b
        }
        Mode::Count => Some(got.len()) == exp.count,
        Mode::Error => unreachable!(),
    };
    (ok, format!("got {got:?}"))
}

/// Runs every command of `fx` in a fresh session.
pub fn run_fixture(base: &Path, fx: &Fixture) -> Report {
    let mut session = Session::new();
    session.config.states = fx.states;
    let mut entries = Vec::new();
    for f in &fx.files {
        let path = base.join(f);
        for r in session.load_file(&path.to_string_lossy()) {
            if let Err(e) = r {
                entries.push(Entry { command: format!("load {f}"), passed: false, detail: e.to_string() });
            }
        }
    }
    for exp in &fx.commands {
        let (passed, detail) = check(exp, session.execute(&exp.command));
        entries.push(Entry { command: exp.command.clone(), passed, detail });
    }
    Report { fixture: fx.name.clone(), entries }
}

pub fn run_file(path: &Path) -> Result<Report> {
    let fx = load_fixture(path)?;
    Ok(run_fixture(path.parent().unwrap_or(Path::new(".")), &fx))
}
