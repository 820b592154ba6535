//! An interpreter session: loaded modules, the current module and the
//! solution stream left open by the last strategy command.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::elab::Library;
use crate::eqeng::{Engine, SearchArrow};
use crate::error::{Error, Result};
use crate::lexer::{tokenize, Token};
use crate::module::{Limits, Module};
use crate::strategy::StratRef;
use crate::stratparse::{parse_condition, parse_strategy, split_top, StratContext};
use crate::syntax::{parse_items, Item, Stmt};
use crate::term::Term;
use crate::termparse::{text_of, TermParser};
use crate::vm::{Schedule, Vm};

#[derive(Clone, Copy, Debug)]
pub struct Config {
    /// Overrides applied to every module when it is used.
    pub eq_steps: Option<u64>,
    pub states: Option<u64>,
    pub dedup: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config { eq_steps: None, states: None, dedup: true }
    }
}

struct Stream {
    vm: Vm,
    module: Arc<Module>,
    header: String,
    exhausted: bool,
}

pub struct Session {
    lib: Library,
    current: Option<String>,
    stream: Option<Stream>,
    pub config: Config,
}

/// One solution of a strategy command.
#[derive(Clone, Debug, Serialize)]
pub struct Solution {
    pub index: usize,
    pub sort: String,
    #[serde(serialize_with = "as_text")]
    pub term: Term,
}

/// One match of a search command.
#[derive(Clone, Debug, Serialize)]
pub struct SearchHit {
    pub index: usize,
    pub state: usize,
    /// `(variable, sort, value)` in variable order.
    pub bindings: Vec<(String, String, String)>,
}

fn as_text<S: serde::Serializer>(t: &Term, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&t.to_string())
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Output {
    Module {
        name: String,
    },
    Selected {
        name: String,
    },
    Reduce {
        header: String,
        sort: String,
        #[serde(serialize_with = "as_text")]
        term: Term,
        rewrites: u64,
    },
    Search {
        header: String,
        hits: Vec<SearchHit>,
        states: usize,
        exhausted: bool,
    },
    Strategy {
        header: String,
        solutions: Vec<Solution>,
        rewrites: u64,
        exhausted: bool,
        first_call: bool,
    },
}

impl Output {
    /// The terms of a strategy command, or the result of a reduction.
    pub fn terms(&self) -> Vec<String> {
        match self {
            Output::Reduce { term, .. } => vec![term.to_string()],
            Output::Strategy { solutions, .. } => solutions.iter().map(|s| s.term.to_string()).collect(),
            Output::Search { hits, .. } => {
                hits.iter().map(|h| h.bindings.iter().map(|(v, s, t)| format!("{v}:{s} --> {t}")).collect::<Vec<_>>().join("; ")).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Maude-style transcript text.
    pub fn transcript(&self) -> String {
        let mut out = String::new();
        match self {
            Output::Module { .. } | Output::Selected { .. } => {}
            Output::Reduce { header, sort, term, rewrites } => {
                let _ = writeln!(out, "{header}");
                let _ = writeln!(out, "rewrites: {rewrites}");
                let _ = writeln!(out, "result {sort}: {term}");
            }
            Output::Search { header, hits, states, exhausted } => {
                let _ = writeln!(out, "{header}");
                for h in hits {
                    let _ = writeln!(out, "\nSolution {} (state {})", h.index, h.state);
                    let _ = writeln!(out, "states: {states}");
                    if h.bindings.is_empty() {
                        let _ = writeln!(out, "empty substitution");
                    }
                    for (v, s, t) in &h.bindings {
                        let _ = writeln!(out, "{v}:{s} --> {t}");
                    }
                }
                if *exhausted {
                    let none = if hits.is_empty() { "No solution." } else { "No more solutions." };
                    let _ = writeln!(out, "\n{none}");
                }
            }
            Output::Strategy { header, solutions, rewrites, exhausted, first_call } => {
                let _ = writeln!(out, "{header}");
                for s in solutions {
                    let _ = writeln!(out, "\nSolution {}", s.index);
                    let _ = writeln!(out, "rewrites: {rewrites}");
                    let _ = writeln!(out, "result {}: {}", s.sort, s.term);
                }
                if *exhausted {
                    let none = if *first_call && solutions.is_empty() { "No solution." } else { "No more solutions." };
                    let _ = writeln!(out, "\n{none}");
                }
            }
        }
        out
    }
}

/// Splits the optional `[n]` bound and `in M :` prefix off a command.
fn prefix(toks: &[Token]) -> Result<(Option<usize>, Option<String>, &[Token])> {
    let mut rest = toks;
    let mut bound = None;
    // A term may itself start with a bracket, as in `[0, 0, b] ...`.
    if rest.first().is_some_and(|t| t.is("[")) && rest.get(2).is_some_and(|t| t.is("]")) {
        let n = &rest[1];
        bound = Some(n.text.parse::<usize>().map_err(|_| Error::Command(format!("bad bound {}", n.text)))?);
        rest = &rest[3..];
    }
    let mut module = None;
    if rest.first().is_some_and(|t| t.is("in")) && rest.get(2).is_some_and(|t| t.is(":")) {
        module = Some(rest[1].text.clone());
        rest = &rest[3..];
    }
    Ok((bound, module, rest))
}

fn labels_of(m: &Module) -> HashSet<String> {
    m.rules.iter().filter_map(|r| r.label.clone()).collect()
}

/// Parses a term in the signature and variables of `m`.
pub fn parse_term_in(m: &Module, text: &str) -> Result<Term> {
    TermParser::new(&m.sig, &m.vars).parse_str(text)
}

fn strategy_of(m: &Module, toks: &[Token]) -> Result<StratRef> {
    let labels = labels_of(m);
    let ctx = StratContext { tp: TermParser::new(&m.sig, &m.vars), labels: &labels, decls: &m.strat_decls };
    parse_strategy(&ctx, toks)
}

/// Parses a strategy expression in `m`.
pub fn parse_strategy_in(m: &Module, text: &str) -> Result<StratRef> {
    strategy_of(m, &tokenize(text))
}

impl Default for Session {
    fn default() -> Self {
        Session::new()
    }
}

impl Session {
    pub fn new() -> Session {
        Session { lib: Library::new(), current: None, stream: None, config: Config::default() }
    }

    pub fn library(&self) -> &Library {
        &self.lib
    }

    /// The module named `name`, or the current one, with the session
    /// limits applied.
    pub fn module(&self, name: Option<&str>) -> Result<Arc<Module>> {
        let m = match name.or(self.current.as_deref()) {
            Some(n) => self.lib.get(n).ok_or_else(|| Error::Command(format!("no module {n}")))?,
            None => self.lib.last().ok_or_else(|| Error::Command("no module loaded".into()))?,
        };
        let base = Limits::default();
        let cur = m.limits();
        let want = Limits { eq_steps: self.config.eq_steps.unwrap_or(base.eq_steps), states: self.config.states.unwrap_or(base.states) };
        if cur != want {
            m.set_limits(want);
        }
        Ok(m)
    }

    /// Runs every module and command in `text`, reporting each one.
    pub fn run_text(&mut self, text: &str) -> Vec<Result<Output>> {
        let mut out = Vec::new();
        for item in parse_items(text) {
            match item {
                Ok(Item::Module(ast)) => {
                    let name = ast.name.clone();
                    out.push(self.lib.add(ast).map(|_| {
                        self.current = None;
                        Output::Module { name }
                    }));
                }
                Ok(Item::Command(st)) => out.push(self.command(&st)),
                Err(e) => out.push(Err(e)),
            }
        }
        out
    }

    pub fn load_file(&mut self, path: &str) -> Vec<Result<Output>> {
        match std::fs::read_to_string(path) {
            Ok(text) => self.run_text(&text),
            Err(e) => vec![Err(Error::Io(format!("{path}: {e}")))],
        }
    }

    /// Runs a single command given as text, with or without the final
    /// period.
    pub fn execute(&mut self, text: &str) -> Result<Output> {
        let mut toks = tokenize(text);
        if toks.last().is_some_and(|t| t.is(".")) {
            toks.pop();
        }
        let Some(kw) = toks.first().cloned() else {
            return Err(Error::Command("empty command".into()));
        };
        self.command(&Stmt { kw, toks: toks[1..].to_vec() })
    }

    pub fn parse_term(&self, module: &Module, toks: &[Token]) -> Result<Term> {
        TermParser::new(&module.sig, &module.vars).parse(toks, None)
    }

    fn command(&mut self, st: &Stmt) -> Result<Output> {
        // Only a strategy rewrite leaves something to continue.
        if matches!(st.kw.text.as_str(), "red" | "reduce" | "rew" | "rewrite" | "search") {
            self.stream = None;
        }
        match st.kw.text.as_str() {
            "load" => {
                let path = text_of(&st.toks).replace(' ', "");
                let mut last = Err(Error::Command(format!("nothing loaded from {path}")));
                for r in self.load_file(&path) {
                    last = Ok(r?);
                }
                last
            }
            "select" => {
                let name = text_of(&st.toks);
                self.lib.get(&name).ok_or_else(|| Error::Command(format!("no module {name}")))?;
                self.current = Some(name.clone());
                Ok(Output::Selected { name })
            }
            "red" | "reduce" => self.reduce(&st.toks),
            "rew" | "rewrite" => self.rewrite(&st.toks),
            "search" => self.search(&st.toks),
            "srew" | "srewrite" => self.srewrite(&st.toks, Schedule::Fair),
            "dsrew" | "dsrewrite" => self.srewrite(&st.toks, Schedule::DepthFirst),
            "cont" | "continue" => {
                let n = match st.toks.first() {
                    Some(t) => Some(t.text.parse::<usize>().map_err(|_| Error::Command(format!("bad bound {}", t.text)))?),
                    None => None,
                };
                self.cont(n)
            }
            other => Err(Error::Command(format!("unknown command {other}"))),
        }
    }

    fn reduce(&mut self, toks: &[Token]) -> Result<Output> {
        let (_, name, rest) = prefix(toks)?;
        let m = self.module(name.as_deref())?;
        let t = self.parse_term(&m, rest)?;
        let before = m.rewrites();
        let r = Engine::new(&m).reduce(&t)?;
        let header = format!("reduce in {} : {t} .", m.name);
        Ok(Output::Reduce { header, sort: m.sort_name(r.sort()).to_string(), rewrites: m.rewrites() - before, term: r })
    }

    fn rewrite(&mut self, toks: &[Token]) -> Result<Output> {
        let (bound, name, rest) = prefix(toks)?;
        let m = self.module(name.as_deref())?;
        let t = self.parse_term(&m, rest)?;
        let before = m.rewrites();
        let (r, _) = Engine::new(&m).rewrite_default(&t, bound.map(|b| b as u64))?;
        let header = format!("rewrite in {} : {t} .", m.name);
        Ok(Output::Reduce { header, sort: m.sort_name(r.sort()).to_string(), rewrites: m.rewrites() - before, term: r })
    }

    fn search(&mut self, toks: &[Token]) -> Result<Output> {
        let (bound, name, rest) = prefix(toks)?;
        let m = self.module(name.as_deref())?;
        let arrow_at = rest
            .iter()
            .position(|t| SearchArrow::parse(&t.text).is_some())
            .ok_or_else(|| Error::Command("search needs an arrow such as =>*".into()))?;
        let arrow = SearchArrow::parse(&rest[arrow_at].text).expect("checked");
        let tp = TermParser::new(&m.sig, &m.vars);
        let t = tp.parse(&rest[..arrow_at], None)?;
        let after = &rest[arrow_at + 1..];
        let st = after.iter().position(|t| t.is("s.t.") || t.is("such"));
        let (pat_toks, cond_toks) = match st {
            Some(i) if after[i].is("such") => (&after[..i], &after[(i + 2).min(after.len())..]),
            Some(i) => (&after[..i], &after[i + 1..]),
            None => (after, &after[after.len()..]),
        };
        let pattern = tp.parse(pat_toks, None)?;
        let cond = if cond_toks.is_empty() { Vec::new() } else { parse_condition(&tp, cond_toks)? };
        let res = Engine::new(&m).search(&t, arrow, &pattern, &cond, bound)?;
        let exhausted = bound.is_none_or(|b| res.solutions.len() < b);
        let vars = pattern.vars();
        let hits = res
            .solutions
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mut bindings = Vec::new();
                for v in &vars {
                    if let Some(val) = s.subst.get(v) {
                        let name = v.var_name().unwrap_or_default().to_string();
                        bindings.push((name, m.sort_name(v.sort()).to_string(), val.to_string()));
                    }
                }
                SearchHit { index: i + 1, state: s.state, bindings }
            })
            .collect();
        let header = format!("search in {} : {t} {} {pattern} .", m.name, rest[arrow_at].text);
        Ok(Output::Search { header, hits, states: res.states, exhausted })
    }

    fn srewrite(&mut self, toks: &[Token], schedule: Schedule) -> Result<Output> {
        let (bound, name, rest) = prefix(toks)?;
        let m = self.module(name.as_deref())?;
        let parts = split_top(rest, "using");
        if parts.len() < 2 {
            return Err(Error::Command("expected `term using strategy`".into()));
        }
        let t = self.parse_term(&m, parts[0])?;
        let strat_toks = &rest[parts[0].len() + 1..];
        let s = strategy_of(&m, strat_toks)?;
        let kw = if schedule == Schedule::Fair { "srewrite" } else { "dsrewrite" };
        let header = format!("{kw} in {} : {t} using {s} .", m.name);
        self.stream = None;
        let mut vm = Vm::new(m.clone(), &t, s, schedule)?;
        if !self.config.dedup {
            vm.keep_duplicates();
        }
        self.stream = Some(Stream { vm, module: m, header, exhausted: false });
        self.pull(bound, true)
    }

    fn cont(&mut self, n: Option<usize>) -> Result<Output> {
        if self.stream.is_none() {
            return Err(Error::Command("no open command to continue".into()));
        }
        self.pull(n, false)
    }

    fn pull(&mut self, bound: Option<usize>, first_call: bool) -> Result<Output> {
        let stream = self.stream.as_mut().expect("open stream");
        let m = stream.module.clone();
        let before = m.rewrites();
        let mut solutions = Vec::new();
        while !stream.exhausted && bound.is_none_or(|b| solutions.len() < b) {
            match stream.vm.next_solution() {
                Ok(Some(t)) => solutions.push(Solution { index: stream.vm.found(), sort: m.sort_name(t.sort()).to_string(), term: t }),
                Ok(None) => stream.exhausted = true,
                Err(e) => {
                    self.stream = None;
                    return Err(e);
                }
            }
        }
        Ok(Output::Strategy {
            header: stream.header.clone(),
            solutions,
            rewrites: m.rewrites() - before,
            exhausted: stream.exhausted,
            first_call,
        })
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    const CORPUS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/corpus");

    pub(crate) fn session(files: &[&str]) -> Session {
        let mut s = Session::new();
        for f in files {
            for r in s.load_file(&format!("{CORPUS}/{f}")) {
                r.unwrap();
            }
        }
        s
    }

    fn terms(s: &mut Session, cmd: &str) -> Vec<String> {
        s.execute(cmd).unwrap_or_else(|e| panic!("{cmd}: {e}")).terms()
    }

    fn set(v: Vec<String>) -> Vec<String> {
        let mut v = v;
        v.sort();
        v
    }

    fn strs(v: &[&str]) -> Vec<String> {
        set(v.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn board_basics() {
        let mut s = session(&["15puzzle.maude"]);
        let out = s.execute("reduce in 15PUZZLE : size(1 b 2 3) .").unwrap();
        assert!(out.transcript().contains("result NzNat: 4"), "{}", out.transcript());
        assert_eq!(terms(&mut s, "rewrite [21] in 15PUZZLE : 1 b 2 3 ."), strs(&["b 1 2 3"]));
        let hits = terms(&mut s, "search in 15PUZZLE : 1 b 2 3 =>* 1 2 R .");
        assert_eq!(set(hits), strs(&["R:Row --> b 3", "R:Row --> 3 b"]));
    }

    #[test]
    fn first_transcripts() {
        let mut s = session(&["15puzzle.maude"]);
        s.execute("select 15PUZZLE").unwrap();
        assert!(terms(&mut s, "srew 1 b 2 using fail").is_empty());
        let out = s.execute("srew 1 b 2 using fail").unwrap();
        assert!(out.transcript().contains("No solution."));
        assert_eq!(terms(&mut s, "srew 1 b 2 using idle"), strs(&["1 b 2"]));
        assert_eq!(set(terms(&mut s, "srew 1 b 2 ; 3 b 4 using right")), strs(&["1 2 b ; 3 b 4", "1 b 2 ; 3 4 b"]));
        assert_eq!(terms(&mut s, "srew 1 b 2 ; 3 b 4 using left[T <- 1]"), strs(&["b 1 2 ; 3 b 4"]));
        assert_eq!(terms(&mut s, "srew 1 b 2 3 using right *").len(), 3);
        assert_eq!(set(terms(&mut s, "srew 1 b using (left | right) *")), strs(&["1 b", "b 1"]));
    }

    #[test]
    fn continue_stream() {
        let mut s = session(&["15puzzle.maude"]);
        assert!(s.execute("continue 1").is_err());
        let first = terms(&mut s, "srew [1] in 15PUZZLE : 1 b 2 3 using right *");
        assert_eq!(first.len(), 1);
        let more = terms(&mut s, "continue 5");
        assert_eq!(more.len(), 2);
        let out = s.execute("continue 1").unwrap();
        assert!(out.terms().is_empty());
        assert!(out.transcript().contains("No more solutions."));
        terms(&mut s, "srew [1] in 15PUZZLE : 1 b 2 3 using right *");
        terms(&mut s, "red in 15PUZZLE : size(1 b) .");
        assert!(s.execute("continue 1").is_err());
    }

    #[test]
    fn rule_and_test_transcripts() {
        let mut s = session(&["15puzzle.maude"]);
        let log = "srew in 15PUZZLE-LOG : < nil | 1 b 2 > using";
        assert_eq!(terms(&mut s, &format!("{log} move[M <- 'left]{{left}}")), strs(&["< 'left | b 1 2 >"]));
        assert_eq!(set(terms(&mut s, &format!("{log} all"))), strs(&["< nil | b 1 2 >", "< nil | 1 2 b >"]));
        let multi = terms(&mut s, "srew in 15PUZZLE-MULTI : 1 b 2 b 3 using top(multimv)");
        assert_eq!(set(multi), strs(&["1 2 b 3 b", "1 b 2 3 b"]));
        s.execute("select 15PUZZLE").unwrap();
        let r = terms(&mut s, "srew 1 2 ; 3 b using left ; up | up ; left");
        assert_eq!(set(r), strs(&["b 2 ; 1 3", "b 1 ; 3 2"]));
        assert_eq!(terms(&mut s, "srew 1 b 2 3 4 using right * ; (right ? fail : idle)"), strs(&["1 2 3 4 b"]));
        let mr = "srew 1 b 2 ; 3 b 4 using matchrew RU ; RD by RU using left, RD using right";
        assert_eq!(terms(&mut s, mr), strs(&["b 1 2 ; 3 4 b"]));
        let xmr = terms(&mut s, "srew 1 b ; 1 b ; 2 b ; 2 b using xmatchrew R ; R by R using left");
        assert_eq!(set(xmr), strs(&["b 1 ; b 1 ; 2 b ; 2 b", "1 b ; 1 b ; b 2 ; b 2"]));
        assert_eq!(terms(&mut s, "srew 1 b 2 3 using one(right +)"), strs(&["1 2 b 3"]));
    }

    #[test]
    fn call_transcripts() {
        let mut s = session(&["15puzzle.maude", "solver.maude"]);
        s.execute("select 15PUZZLE-STRATS").unwrap();
        assert_eq!(terms(&mut s, "srew 1 b 2 using xmatch b N s.t. N =/= 1"), strs(&["1 b 2"]));
        assert_eq!(terms(&mut s, "srew 1 b 2 3 4 using move(2, 0)"), strs(&["1 2 3 b 4"]));
        assert_eq!(terms(&mut s, "srew 1 2 3 ; 4 5 6 ; 7 b 8 using move(1, -2)"), strs(&["1 2 b ; 4 5 3 ; 7 8 6"]));
        let fair = terms(&mut s, "srew [2] b 1 2 ; b 3 using right +");
        assert_eq!(fair, vec!["1 b 2 ; b 3", "b 1 2 ; 3 b"]);
        let dfs = terms(&mut s, "dsrew [2] b 1 2 ; b 3 using right +");
        assert_eq!(dfs, vec!["1 b 2 ; b 3", "1 2 b ; b 3"]);
    }

    const SOLVED: &str = "1 2 3 4 ; 5 6 7 8 ; 9 10 11 12 ; 13 14 15 b";

    #[test]
    fn solver_rows() {
        let mut s = session(&["15puzzle.maude", "solver.maude"]);
        s.execute("select 15PUZZLE-SOLVE").unwrap();
        let r = terms(&mut s, "dsrew [1] 5 1 4 8 ; 2 14 15 3 ; 9 7 6 11 ; 13 10 b 12 using solve");
        assert_eq!(r, vec![SOLVED]);
        let r = terms(&mut s, "dsrew [1] 15 2 1 12 ; 8 5 6 11 ; 4 9 10 7 ; 3 14 13 b using solve");
        assert_eq!(r, vec!["1 2 3 4 ; 6 5 7 8 ; 9 10 11 12 ; 13 14 15 b"]);
    }

    #[test]
    fn blackboard() {
        let mut s = session(&["blackboard.maude"]);
        s.execute("select BLACKBOARD-STRAT").unwrap();
        assert_eq!(set(terms(&mut s, "srew 8 7 4 3 2 1 using play !")), strs(&["6", "5", "4", "3", "2"]));
        assert_eq!(terms(&mut s, "srew 8 7 4 3 2 1 using maxmax"), strs(&["2"]));
        assert_eq!(terms(&mut s, "srew 8 7 4 3 2 1 using minmin"), strs(&["6"]));
        assert_eq!(terms(&mut s, "srew 8 7 4 3 2 1 using maxmin"), strs(&["3"]));
    }

    #[test]
    fn queens_first() {
        let mut s = session(&["queens.maude"]);
        s.execute("select BT-QUEENS").unwrap();
        assert_eq!(terms(&mut s, "dsrew [1] nil using solve"), vec!["1 5 8 6 3 7 2 4"]);
        assert_eq!(terms(&mut s, "srew [1] nil using solve").len(), 1);
    }

    /// The same board as a set of `[column, line, tile]` cells.
    pub(crate) fn as_pairs(rows: &str) -> String {
        let mut cells = Vec::new();
        for (y, row) in rows.split(';').enumerate() {
            for (x, t) in row.split_whitespace().enumerate() {
                cells.push(format!("[{x}, {y}, {t}]"));
            }
        }
        cells.join(" ")
    }

    #[test]
    fn solver_pairs() {
        let mut s = session(&["15puzzle-pairs.maude", "solver.maude"]);
        s.execute("select 15PUZZLE-SOLVE").unwrap();
        let start = as_pairs("5 1 4 8 ; 2 14 15 3 ; 9 7 6 11 ; 13 10 b 12");
        let r = terms(&mut s, &format!("dsrew [1] {start} using solve"));
        let goal = terms(&mut s, &format!("red {}", as_pairs(SOLVED)));
        assert_eq!(r, goal);
    }

    #[test]
    fn fairness() {
        let mut s = session(&["15puzzle.maude", "fairness.maude"]);
        s.config.states = Some(5_000);
        s.execute("select FAIRNESS").unwrap();
        assert_eq!(terms(&mut s, "srew [1] b 1 using loopforever(0) | right"), strs(&["1 b"]));
        let err = s.execute("dsrew [1] b 1 using loopforever(0) | right").unwrap_err();
        assert_eq!(err, Error::StateLimit(5_000));
    }

    #[test]
    fn queens_all() {
        let mut s = session(&["queens.maude"]);
        s.execute("select BT-QUEENS").unwrap();
        let t = std::time::Instant::now();
        assert_eq!(terms(&mut s, "srew nil using solve").len(), 92);
        eprintln!("queens {:?}", t.elapsed());
    }
}
