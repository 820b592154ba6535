//! Random micro modules, strategies and subjects shared by the
//! property tests and the acceptance run.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use stratum::matcher::match_anywhere;
use stratum::module::{Limits, Module};
use stratum::oracle::Oracle;
use stratum::session::{parse_strategy_in, parse_term_in, Session};
use stratum::sort::SortTable;
use stratum::subst::Subst;
use stratum::term::{Head, Symbol, Term};
use stratum::vm::{Schedule, Vm};
use stratum::Error;

pub const CORPUS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/corpus");

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn corpus_session(files: &[&str]) -> Session {
    let mut s = Session::new();
    for f in files {
        for r in s.load_file(&format!("{CORPUS}/{f}")) {
            r.unwrap();
        }
    }
    s
}

/// A transition system over three states, with labels `a` and `b`, a
/// pair sort so that `matchrew` has something to take apart, and a few
/// named strategies.
pub struct Micro {
    pub source: String,
    pub module: Arc<Module>,
}

pub struct GenOpts {
    /// Allow calls to the named strategies.
    pub calls: bool,
    /// Allow the call that never returns.
    pub divergent: bool,
}

const STATES: [&str; 3] = ["s0", "s1", "s2"];

pub fn micro(rng: &mut ChaCha8Rng) -> Micro {
    let mut rules = Vec::new();
    for label in ["a", "b"] {
        let mut n = 0;
        for from in STATES {
            for to in STATES {
                if rng.gen_bool(0.3) {
                    rules.push(format!("  rl [{label}] : {from} => {to} ."));
                    n += 1;
                }
            }
        }
        if n == 0 {
            let from = STATES.choose(rng).unwrap();
            let to = STATES.choose(rng).unwrap();
            rules.push(format!("  rl [{label}] : {from} => {to} ."));
        }
    }
    let inner = GenOpts { calls: false, divergent: false };
    let p = strategy(rng, 2, &inner);
    let step = strategy(rng, 2, &inner);
    let grow = strategy(rng, 2, &inner);
    let source = format!(
        "mod MICRO is
  protecting NAT .
  sorts State Pair .
  ops s0 s1 s2 : -> State [ctor] .
  op <_,_> : State State -> Pair [ctor] .
  vars X Y Z : State .
{}
  crl [c] : < X, Y > => < Z, Y > if X => Z [nonexec] .
endm

smod MICRO-STRAT is
  protecting MICRO .
  strat p @ Pair .
  strats cnt grow : Nat @ Pair .
  var N : Nat .
  vars X Y : State .
  sd p := {p} .
  sd cnt(0) := idle .
  sd cnt(s(N)) := {step} ; cnt(N) .
  sd grow(N) := {grow} ; grow(N + 1) .
endsm
",
        rules.join("\n")
    );
    let mut s = Session::new();
    for r in s.run_text(&source) {
        r.unwrap_or_else(|e| panic!("{e}\n{source}"));
    }
    let module = s.library().get("MICRO-STRAT").unwrap();
    Micro { source, module }
}

fn atom(rng: &mut ChaCha8Rng, opts: &GenOpts) -> String {
    let mut atoms: Vec<String> =
        ["idle", "fail", "a", "b", "all", "top(a)", "match s0", "amatch s1", "(xmatch < s2, Y >)", "(match < X, Y > s.t. X = Y)"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    if opts.calls {
        atoms.push("p".into());
        let k = rng.gen_range(0..4);
        atoms.push(format!("cnt({k})"));
        if opts.divergent {
            atoms.push("grow(0)".into());
        }
    }
    atoms.choose(rng).unwrap().clone()
}

/// A random strategy of at most `depth` nested combinators, fully
/// parenthesized.
pub fn strategy(rng: &mut ChaCha8Rng, depth: u32, opts: &GenOpts) -> String {
    if depth == 0 || rng.gen_bool(0.25) {
        return atom(rng, opts);
    }
    let d = depth - 1;
    let g = |rng: &mut ChaCha8Rng| strategy(rng, d, opts);
    match rng.gen_range(0..15) {
        0 | 1 => format!("({} ; {})", g(rng), g(rng)),
        2 | 3 => format!("({} | {})", g(rng), g(rng)),
        4 => format!("({}) *", g(rng)),
        5 => format!("({}) +", g(rng)),
        6 => format!("({} ? {} : {})", g(rng), g(rng), g(rng)),
        7 => format!("({} or-else {})", g(rng), g(rng)),
        8 => format!("not({})", g(rng)),
        9 => format!("try({})", g(rng)),
        10 => format!("test({})", g(rng)),
        11 => format!("({}) !", g(rng)),
        12 => format!("(matchrew < X, Y > by X using {}, Y using {})", g(rng), g(rng)),
        13 => format!("(matchrew < X, Y > s.t. X =/= Y by X using {})", g(rng)),
        _ => format!("c{{{}}}", g(rng)),
    }
}

pub fn subject(rng: &mut ChaCha8Rng) -> String {
    let s = |rng: &mut ChaCha8Rng| STATES.choose(rng).unwrap().to_string();
    if rng.gen_bool(0.3) {
        s(rng)
    } else {
        format!("< {}, {} >", s(rng), s(rng))
    }
}

/// How a differential case ended.
#[derive(Debug)]
pub enum Verdict {
    /// Total oracle result, equal to both VM schedules.
    Agree,
    /// Partial oracle result; the VM ran out of states after finding
    /// every oracle term.
    AgreeDivergent,
    Mismatch(String),
}

pub fn run_vm(module: &Arc<Module>, t: &Term, s: &stratum::strategy::StratRef, schedule: Schedule) -> (BTreeSet<Term>, Option<Error>) {
    let mut vm = Vm::new(module.clone(), t, s.clone(), schedule).unwrap();
    let mut out = BTreeSet::new();
    loop {
        match vm.next_solution() {
            Ok(Some(u)) => {
                out.insert(u);
            }
            Ok(None) => return (out, None),
            Err(e) => return (out, Some(e)),
        }
    }
}

fn show(set: &BTreeSet<Term>) -> String {
    let v: Vec<String> = set.iter().map(|t| t.to_string()).collect();
    format!("{{{}}}", v.join(", "))
}

/// Compares the VM with the reference evaluator on one case.
pub fn differential(seed: u64) -> Verdict {
    let mut r = rng(seed);
    let opts = GenOpts { calls: true, divergent: true };
    let m = micro(&mut r);
    m.module.set_limits(Limits { eq_steps: 100_000, states: 200_000 });
    let text = strategy(&mut r, 4, &opts);
    let subj = subject(&mut r);
    let s = parse_strategy_in(&m.module, &text).unwrap_or_else(|e| panic!("{text}: {e}"));
    let t = parse_term_in(&m.module, &subj).unwrap();
    let (oset, depth) = Oracle::new(&m.module).stable(&s, &t, 8).unwrap();
    let (fair, fair_err) = run_vm(&m.module, &t, &s, Schedule::Fair);
    let case = || format!("seed {seed}: {subj} using {text} (oracle depth {depth})\n{}", m.source);
    if !oset.bottom {
        if let Some(e) = fair_err {
            return Verdict::Mismatch(format!("{}\noracle {} but srewrite failed: {e}", case(), show(&oset.terms)));
        }
        if fair != oset.terms {
            return Verdict::Mismatch(format!("{}\noracle {} srewrite {}", case(), show(&oset.terms), show(&fair)));
        }
        let (dfs, dfs_err) = run_vm(&m.module, &t, &s, Schedule::DepthFirst);
        if let Some(e) = dfs_err {
            return Verdict::Mismatch(format!("{}\ndsrewrite failed: {e}", case()));
        }
        if dfs != oset.terms {
            return Verdict::Mismatch(format!("{}\noracle {} dsrewrite {}", case(), show(&oset.terms), show(&dfs)));
        }
        Verdict::Agree
    } else {
        match fair_err {
            Some(Error::StateLimit(_)) if oset.terms.is_subset(&fair) => Verdict::AgreeDivergent,
            Some(Error::StateLimit(_)) => {
                Verdict::Mismatch(format!("{}\npartial oracle {} not within srewrite {}", case(), show(&oset.terms), show(&fair)))
            }
            Some(e) => Verdict::Mismatch(format!("{}\nsrewrite failed: {e}", case())),
            None => Verdict::Mismatch(format!("{}\noracle never total but srewrite ended with {}", case(), show(&fair))),
        }
    }
}

/// Equations between strategies that must give equal solution sets.
pub const IDENTITIES: &[(&str, &str)] = &[
    ("idle ; A", "A"),
    ("A ; idle", "A"),
    ("fail ; A", "fail"),
    ("A ; fail", "fail"),
    ("A | fail", "A"),
    ("A | B", "B | A"),
    ("(A | B) | C", "A | (B | C)"),
    ("(A ; B) ; C", "A ; (B ; C)"),
    ("A ; (B | C)", "(A ; B) | (A ; C)"),
    ("(A | B) ; C", "(A ; C) | (B ; C)"),
    ("A +", "A ; (A *)"),
    ("A *", "idle | (A +)"),
    ("A !", "(A *) ; not(A)"),
    ("A or-else B", "A ? idle : B"),
    ("not(A)", "A ? fail : idle"),
    ("try(A)", "A ? idle : idle"),
    ("test(A)", "not(not(A))"),
    ("test(A)", "not(A) ? fail : idle"),
    ("idle ? A : B", "A"),
    ("fail ? A : B", "B"),
];

fn instantiate(pattern: &str, parts: &[String]) -> String {
    pattern.replace('A', &format!("({})", parts[0])).replace('B', &format!("({})", parts[1])).replace('C', &format!("({})", parts[2]))
}

/// Checks one random instance of every identity.
pub fn combinator_case(seed: u64) -> Result<usize, String> {
    let mut r = rng(seed);
    let opts = GenOpts { calls: true, divergent: false };
    let m = micro(&mut r);
    m.module.set_limits(Limits { eq_steps: 100_000, states: 1_000_000 });
    let parts: Vec<String> = (0..3).map(|_| strategy(&mut r, 2, &opts)).collect();
    let subj = subject(&mut r);
    let t = parse_term_in(&m.module, &subj).unwrap();
    let mut checked = 0;
    for (lhs, rhs) in IDENTITIES {
        let (l, rr) = (instantiate(lhs, &parts), instantiate(rhs, &parts));
        let sl = parse_strategy_in(&m.module, &l).map_err(|e| format!("{l}: {e}"))?;
        let sr = parse_strategy_in(&m.module, &rr).map_err(|e| format!("{rr}: {e}"))?;
        let (a, ea) = run_vm(&m.module, &t, &sl, Schedule::Fair);
        let (b, eb) = run_vm(&m.module, &t, &sr, Schedule::Fair);
        if ea.is_some() || eb.is_some() || a != b {
            return Err(format!("seed {seed}: on {subj}\n  {l} gives {} {ea:?}\n  {rr} gives {} {eb:?}", show(&a), show(&b)));
        }
        checked += 1;
    }
    Ok(checked)
}

/// Free symbols, assoc, comm, assoc-comm and identity operators over one
/// sort, for matcher tests.
pub const MATCH_SPEC: &str = "fmod M is
  sorts T S .
  subsort T < S .
  ops a b c : -> T [ctor] .
  ops e z : -> S [ctor] .
  op g : S -> S [ctor] .
  op h : S S -> S [ctor] .
  op _._ : S S -> S [ctor assoc] .
  op _<>_ : S S -> S [ctor comm] .
  op _%_ : S S -> S [ctor assoc comm] .
  op _;_ : S S -> S [ctor assoc id: e] .
  op _&_ : S S -> S [ctor assoc comm id: z] .
  vars X Y Z : S .
  var W : T .
endfm
";

pub fn match_module() -> Arc<Module> {
    let mut s = Session::new();
    for r in s.run_text(MATCH_SPEC) {
        r.unwrap();
    }
    s.library().get("M").unwrap()
}

struct Ops {
    consts: Vec<Arc<Symbol>>,
    unary: Arc<Symbol>,
    binary: Vec<Arc<Symbol>>,
}

fn ops(m: &Module) -> Ops {
    let c = |n: &str| m.sig.op(n, 0).unwrap().clone();
    Ops {
        consts: vec![c("a"), c("b"), c("c")],
        unary: m.sig.op("g", 1).unwrap().clone(),
        binary: ["h", "_._", "_<>_", "_%_", "_;_", "_&_"].iter().map(|n| m.sig.op(n, 2).unwrap().clone()).collect(),
    }
}

/// A random term of about `nodes` nodes. Variables appear when `vars` is
/// not empty.
pub fn random_term(rng: &mut ChaCha8Rng, m: &Module, nodes: usize, vars: &[Term]) -> Term {
    let o = ops(m);
    gen_term(rng, &o, nodes, vars, None)
}

/// Children often reuse the parent's operator, so that assoc and AC
/// nodes end up with long argument lists.
fn gen_term(rng: &mut ChaCha8Rng, o: &Ops, nodes: usize, vars: &[Term], parent: Option<&Arc<Symbol>>) -> Term {
    if nodes <= 1 {
        if !vars.is_empty() && rng.gen_bool(0.5) {
            return vars.choose(rng).unwrap().clone();
        }
        return Term::constant(o.consts.choose(rng).unwrap());
    }
    if nodes == 2 || rng.gen_bool(0.15) {
        return Term::app(&o.unary, vec![gen_term(rng, o, nodes - 1, vars, None)]);
    }
    let f = match parent {
        Some(p) if rng.gen_bool(0.6) => p,
        _ => o.binary.choose(rng).unwrap(),
    };
    let left = rng.gen_range(1..nodes - 1);
    let x = gen_term(rng, o, left, vars, Some(f));
    let y = gen_term(rng, o, nodes - 1 - left, vars, Some(f));
    Term::app(f, vec![x, y])
}

/// Replaces random subterms of `t` by variables, so that the result
/// matches `t` in at least one way.
pub fn generalize(rng: &mut ChaCha8Rng, t: &Term, vars: &[Term]) -> Term {
    if rng.gen_bool(0.3) {
        return vars.choose(rng).unwrap().clone();
    }
    match t.head() {
        Head::App(sym) if !t.args().is_empty() => {
            let args: Vec<Term> = t.args().iter().map(|a| generalize(rng, a, vars)).collect();
            Term::app(sym, args)
        }
        _ => t.clone(),
    }
}

/// Like `generalize`, keeping the top symbol.
fn generalize_below(rng: &mut ChaCha8Rng, t: &Term, vars: &[Term]) -> Term {
    match t.head() {
        Head::App(sym) if !t.args().is_empty() => {
            let args: Vec<Term> = t.args().iter().map(|a| generalize(rng, a, vars)).collect();
            Term::app(sym, args)
        }
        _ => t.clone(),
    }
}

/// A contiguous run, or for assoc-comm a subset, of the arguments of an
/// assoc node, so that matching it needs extension.
fn part_of(rng: &mut ChaCha8Rng, t: &Term) -> Term {
    let Head::App(f) = t.head() else { return t.clone() };
    let n = t.args().len();
    if !f.assoc || n < 3 {
        return t.clone();
    }
    let k = rng.gen_range(2..n);
    let args = if f.comm {
        let mut v = t.args().to_vec();
        v.shuffle(rng);
        v.truncate(k);
        v
    } else {
        let a = rng.gen_range(0..=n - k);
        t.args()[a..a + k].to_vec()
    };
    Term::app(f, args)
}

/// Terms a variable could be bound to when matching into `s`: every
/// subterm, every partial argument list of an assoc or assoc-comm
/// node, and every identity element.
fn candidates(m: &Module, s: &Term) -> Vec<Term> {
    let mut out: HashSet<Term> = HashSet::new();
    for sym in &m.sig.symbols {
        if let Some(e) = sym.identity() {
            out.insert(e.clone());
        }
    }
    for u in s.subterms_postorder() {
        out.insert(u.clone());
        if let Head::App(f) = u.head() {
            let args = u.args();
            let n = args.len();
            if f.assoc && !f.comm {
                for i in 0..n {
                    for j in i + 2..=n {
                        out.insert(Term::app(f, args[i..j].to_vec()));
                    }
                }
            } else if f.assoc && f.comm && n <= 12 {
                for mask in 1u32..(1 << n) {
                    if mask.count_ones() >= 2 {
                        let part: Vec<Term> = (0..n).filter(|k| mask & (1 << k) != 0).map(|k| args[k].clone()).collect();
                        out.insert(Term::app(f, part));
                    }
                }
            }
        }
    }
    out.into_iter().collect()
}

/// A variable whose sort holds the results of `f`, so it can stand for
/// any part of an argument list of `f`.
fn absorbing(sorts: &SortTable, f: &Symbol, p: &Term) -> bool {
    p.is_var() && sorts.leq(f.range(), p.sort())
}

/// Pieces of `u` that a match with extension may cover, with the term
/// that plugging a marker into the matched spot produces.
fn targets(sorts: &SortTable, u: &Term, pattern: &Term, marker: &Term) -> Vec<(Term, Term)> {
    let mut out = vec![(u.clone(), marker.clone())];
    let (Head::App(f), Head::App(pf)) = (u.head(), pattern.head()) else {
        return out;
    };
    if !Arc::ptr_eq(f, pf) || !f.assoc {
        return out;
    }
    let ps = pattern.args();
    let args = u.args();
    let n = args.len();
    if f.comm {
        if ps.iter().any(|q| absorbing(sorts, f, q)) {
            return out;
        }
        for mask in 1u32..(1 << n) - 1 {
            let inside: Vec<Term> = (0..n).filter(|k| mask & (1 << k) != 0).map(|k| args[k].clone()).collect();
            let rest: Vec<Term> = (0..n).filter(|k| mask & (1 << k) == 0).map(|k| args[k].clone()).collect();
            let piece = if inside.len() == 1 { inside[0].clone() } else { Term::app(f, inside) };
            let mut with = rest;
            with.push(marker.clone());
            out.push((piece, Term::app(f, with)));
        }
        return out;
    }
    let left = !absorbing(sorts, f, &ps[0]);
    let right = !absorbing(sorts, f, &ps[ps.len() - 1]);
    for i in 0..n {
        for j in i + 1..=n {
            if (i == 0 && j == n) || (i > 0 && !left) || (j < n && !right) {
                continue;
            }
            let piece = if j - i == 1 { args[i].clone() } else { Term::app(f, args[i..j].to_vec()) };
            let mut with = args[..i].to_vec();
            with.push(marker.clone());
            with.extend(args[j..].iter().cloned());
            out.push((piece, Term::app(f, with)));
        }
    }
    out
}

fn plug_path(s: &Term, path: &[usize], filler: &Term) -> Term {
    match path.split_first() {
        None => filler.clone(),
        Some((&i, rest)) => {
            let mut args = s.args().to_vec();
            args[i] = plug_path(&args[i], rest, filler);
            let Head::App(f) = s.head() else { unreachable!() };
            Term::app(f, args)
        }
    }
}

fn positions(s: &Term, path: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, Term)>) {
    for (i, a) in s.args().iter().enumerate() {
        path.push(i);
        positions(a, path, out);
        path.pop();
    }
    out.push((path.clone(), s.clone()));
}

/// Every (substitution, marked context) of `pattern` anywhere in `s`,
/// found by trying all bindings from a finite universe.
pub fn brute_force_anywhere(m: &Module, pattern: &Term, s: &Term, marker: &Term) -> BTreeSet<(Vec<(String, Term)>, Term)> {
    let mut vars = pattern.vars();
    vars.sort();
    vars.dedup();
    let universe = candidates(m, s);
    let sorts = m.sorts();
    let pools: Vec<Vec<Term>> = vars.iter().map(|v| universe.iter().filter(|u| sorts.leq(u.sort(), v.sort())).cloned().collect()).collect();
    // Every instance of the pattern, keyed by the term it builds.
    let mut instances: HashMap<Term, Vec<Subst>> = HashMap::new();
    let mut pick = vec![0usize; vars.len()];
    if pools.iter().all(|p| !p.is_empty()) {
        loop {
            let sub = Subst::from_pairs(vars.iter().cloned().zip(pick.iter().enumerate().map(|(k, &i)| pools[k][i].clone())));
            instances.entry(sub.apply(pattern)).or_default().push(sub);
            let mut k = 0;
            while k < pick.len() {
                pick[k] += 1;
                if pick[k] < pools[k].len() {
                    break;
                }
                pick[k] = 0;
                k += 1;
            }
            if k == pick.len() {
                break;
            }
        }
    }
    let mut out = BTreeSet::new();
    let mut ps = Vec::new();
    positions(s, &mut Vec::new(), &mut ps);
    for (path, u) in ps {
        for (piece, marked) in targets(sorts, &u, pattern, marker) {
            if let Some(subs) = instances.get(&piece) {
                let ctx = plug_path(s, &path, &marked);
                for sub in subs {
                    out.insert((binding_list(sub), ctx.clone()));
                }
            }
        }
    }
    out
}

fn binding_list(s: &Subst) -> Vec<(String, Term)> {
    let mut v: Vec<(String, Term)> = s.iter().map(|(k, v)| (k.var_name().unwrap_or_default().to_string(), v.clone())).collect();
    v.sort();
    v
}

/// The matcher's answer in the same shape as the brute-force one.
pub fn matcher_anywhere(m: &Module, pattern: &Term, s: &Term, marker: &Term) -> BTreeSet<(Vec<(String, Term)>, Term)> {
    match_anywhere(m.sorts(), pattern, s).into_iter().map(|r| (binding_list(&r.subst), r.context.plug(marker))).collect()
}

/// One matcher comparison; returns the subject size.
pub fn matcher_case(seed: u64, m: &Module) -> Result<usize, String> {
    let mut r = rng(seed);
    let s_sort = m.sig.sorts.get("S").unwrap();
    let mut vars: Vec<Term> = ["X", "Y", "Z"].iter().map(|n| Term::var(n, s_sort)).collect();
    vars.shuffle(&mut r);
    vars.truncate(r.gen_range(1..=3));
    if r.gen_bool(0.4) {
        vars.push(Term::var("W", m.sig.sorts.get("T").unwrap()));
    }
    let nodes = r.gen_range(1..=12);
    let s = random_term(&mut r, m, nodes, &[]);
    let inner: Vec<Term> = s.subterms_postorder().into_iter().filter(|u| !u.args().is_empty()).collect();
    let base = inner.choose(&mut r).cloned().unwrap_or_else(|| s.clone());
    let pattern = match r.gen_range(0..10) {
        0..=3 => generalize_below(&mut r, &base, &vars),
        4..=6 => {
            let part = part_of(&mut r, &base);
            generalize_below(&mut r, &part, &vars)
        }
        _ => {
            let pn = r.gen_range(1..=5);
            random_term(&mut r, m, pn, &vars)
        }
    };
    let marker = Term::var("HOLE", m.sig.sorts.get("S").unwrap());
    let want = brute_force_anywhere(m, &pattern, &s, &marker);
    let got = matcher_anywhere(m, &pattern, &s, &marker);
    if want != got {
        let only_b: Vec<_> = want.difference(&got).collect();
        let only_m: Vec<_> = got.difference(&want).collect();
        return Err(format!("seed {seed}: {pattern} in {s}\n  missed by matcher: {only_b:?}\n  not in brute force: {only_m:?}"));
    }
    Ok(s.size())
}
