//! Elaboration of module syntax into resolved modules.
//!
//! Imports are flattened: the sorts, operators, statements and strategies
//! of every transitively imported module are rebuilt over the importing
//! module's signature. Each statement is parsed with the variables of the
//! module that declared it.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use crate::builtins;
use crate::error::{Error, Result};
use crate::lexer::Token;
use crate::module::{Cond, Equation, Module, ModuleKind, Rule, Signature, StratDecl, StratDef};
use crate::sort::{SortBuilder, SortId, SortTable};
use crate::stratparse::{parse_args, parse_condition, parse_strategy, split_top, StratContext};
use crate::syntax::{ModuleAst, Stmt};
use crate::term::{Builtin, OpDecl, Symbol, Term};
use crate::termparse::TermParser;

const ATTR_KEYWORDS: [&str; 19] = [
    "ctor",
    "assoc",
    "comm",
    "id:",
    "left-id:",
    "right-id:",
    "prec",
    "nonexec",
    "owise",
    "otherwise",
    "label",
    "metadata",
    "memo",
    "gather",
    "format",
    "idem",
    "iter",
    "frozen",
    "print",
];

const IMPORT_KEYWORDS: [&str; 7] = ["protecting", "including", "extending", "generated-by", "pr", "inc", "ex"];

fn at(t: &Token, msg: impl Into<String>) -> Error {
    Error::syntax(t.line, t.col, msg)
}

#[derive(Default, Debug)]
struct Attrs {
    ctor: bool,
    assoc: bool,
    comm: bool,
    id: Option<Vec<Token>>,
    prec: Option<u32>,
    nonexec: bool,
    owise: bool,
    label: Option<String>,
}

/// Splits a trailing attribute block `[ ... ]` off a statement body.
fn split_attrs(toks: &[Token]) -> (&[Token], Option<&[Token]>) {
    if !toks.last().is_some_and(|t| t.is("]")) {
        return (toks, None);
    }
    let mut depth = 0;
    for i in (0..toks.len()).rev() {
        match toks[i].text.as_str() {
            "]" | ")" | "}" => depth += 1,
            "[" | "(" | "{" => {
                depth -= 1;
                if depth == 0 {
                    let inner = &toks[i + 1..toks.len() - 1];
                    if i > 0 && inner.first().is_some_and(|t| ATTR_KEYWORDS.contains(&t.text.as_str())) {
                        return (&toks[..i], Some(inner));
                    }
                    return (toks, None);
                }
            }
            _ => {}
        }
    }
    (toks, None)
}

fn parse_attrs(toks: &[Token]) -> Result<Attrs> {
    let mut a = Attrs::default();
    let mut i = 0;
    while i < toks.len() {
        let t = &toks[i];
        i += 1;
        match t.text.as_str() {
            "ctor" => a.ctor = true,
            "assoc" => a.assoc = true,
            "comm" => a.comm = true,
            "nonexec" => a.nonexec = true,
            "owise" | "otherwise" => a.owise = true,
            "memo" => {}
            "id:" => {
                let start = i;
                let mut depth = 0;
                while i < toks.len() {
                    let s = toks[i].text.as_str();
                    if depth == 0 && ATTR_KEYWORDS.contains(&s) {
                        break;
                    }
                    depth += match s {
                        "(" | "[" | "{" => 1,
                        ")" | "]" | "}" => -1,
                        _ => 0,
                    };
                    i += 1;
                }
                if i == start {
                    return Err(at(t, "missing identity element after id:"));
                }
                a.id = Some(toks[start..i].to_vec());
            }
            "prec" => {
                let n = toks.get(i).and_then(|n| n.text.parse::<u32>().ok()).ok_or_else(|| at(t, "prec expects a number"))?;
                a.prec = Some(n);
                i += 1;
            }
            "label" => {
                let l = toks.get(i).ok_or_else(|| at(t, "label expects a name"))?;
                a.label = Some(l.text.clone());
                i += 1;
            }
            "metadata" => i += 1,
            "format" | "frozen" | "print" => {
                if toks.get(i).is_some_and(|x| x.is("(")) {
                    while i < toks.len() && !toks[i].is(")") {
                        i += 1;
                    }
                    i += 1;
                }
            }
            "gather" | "idem" | "iter" | "left-id:" | "right-id:" => {
                return Err(at(t, format!("attribute {} is not supported", t.text)));
            }
            other => return Err(at(t, format!("unknown attribute {other}"))),
        }
    }
    Ok(a)
}

/// Index of the `if` that starts a statement condition: the first one at
/// bracket depth zero not closed by a later `fi`.
fn condition_split(toks: &[Token]) -> Option<usize> {
    let mut open = Vec::new();
    let mut depth = 0;
    for (i, t) in toks.iter().enumerate() {
        match t.text.as_str() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            "if" if depth == 0 => open.push(i),
            "fi" if depth == 0 => {
                open.pop();
            }
            _ => {}
        }
    }
    open.first().copied()
}

fn top_positions(toks: &[Token], s: &str) -> Vec<usize> {
    let mut out = Vec::new();
    let mut depth = 0;
    for (i, t) in toks.iter().enumerate() {
        match t.text.as_str() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            _ if depth == 0 && t.is(s) => out.push(i),
            _ => {}
        }
    }
    out
}

fn resolve_sort(sorts: &SortTable, toks: &[Token]) -> Result<SortId> {
    match toks {
        [t] => sorts.get(&t.text).ok_or_else(|| at(t, format!("unknown sort {}", t.text))),
        [o, t, c] if o.is("[") && c.is("]") => {
            let s = sorts.get(&t.text).ok_or_else(|| at(t, format!("unknown sort {}", t.text)))?;
            Ok(sorts.kind_sort(s))
        }
        [] => Err(Error::Resolve("missing sort".into())),
        _ => Err(at(&toks[0], "malformed sort")),
    }
}

/// Sorts of a declaration list: single names or `[Name]` kinds.
fn sort_list(sorts: &SortTable, toks: &[Token]) -> Result<Vec<SortId>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        if toks[i].is("[") {
            out.push(resolve_sort(sorts, toks.get(i..i + 3).unwrap_or(&toks[i..]))?);
            i += 3;
        } else {
            out.push(resolve_sort(sorts, &toks[i..i + 1])?);
            i += 1;
        }
    }
    Ok(out)
}

/// Parsed modules, elaborated in the order they are added.
#[derive(Default)]
pub struct Library {
    asts: HashMap<String, ModuleAst>,
    modules: HashMap<String, Arc<Module>>,
    order: Vec<String>,
}

impl Library {
    pub fn new() -> Self {
        Library::default()
    }

    /// Elaborates and registers a module, replacing any earlier one with
    /// the same name. Nothing is registered on error.
    pub fn add(&mut self, ast: ModuleAst) -> Result<Arc<Module>> {
        let module = Arc::new(Elab::new(self, &ast)?.run()?);
        let name = ast.name.clone();
        self.asts.insert(name.clone(), ast);
        self.modules.insert(name.clone(), module.clone());
        self.order.retain(|n| n != &name);
        self.order.push(name);
        Ok(module)
    }

    pub fn get(&self, name: &str) -> Option<Arc<Module>> {
        self.modules.get(name).cloned()
    }

    pub fn last(&self) -> Option<Arc<Module>> {
        self.order.last().and_then(|n| self.get(n))
    }

    pub fn names(&self) -> &[String] {
        &self.order
    }
}

struct OpSpec {
    name: String,
    args: Vec<SortId>,
    result: SortId,
    attrs: Attrs,
    tok: Token,
}

struct Elab<'l> {
    ast: &'l ModuleAst,
    /// Imported modules first, the module itself last.
    chain: Vec<&'l ModuleAst>,
}

impl<'l> Elab<'l> {
    fn new(lib: &'l Library, ast: &'l ModuleAst) -> Result<Self> {
        let mut chain = Vec::new();
        let mut visiting = vec![ast.name.clone()];
        collect_imports(lib, ast, &mut chain, &mut visiting)?;
        chain.push(ast);
        Ok(Elab { ast, chain })
    }

    fn stmts(&self) -> impl Iterator<Item = (&'l ModuleAst, &'l Stmt)> + '_ {
        self.chain.iter().flat_map(|m| m.stmts.iter().map(move |s| (*m, s)))
    }

    fn run(self) -> Result<Module> {
        self.check_kinds()?;
        let sorts = Arc::new(self.sorts()?);
        let specs = self.op_specs(&sorts)?;
        let sig = self.signature(&sorts, specs)?;

        let mut var_maps: HashMap<&str, HashMap<String, SortId>> = HashMap::new();
        for m in &self.chain {
            var_maps.insert(m.name.as_str(), self.vars_of(m, &sorts)?);
        }
        let mut command_vars = HashMap::new();
        for m in &self.chain {
            command_vars.extend(var_maps[m.name.as_str()].clone());
        }

        let decls = self.strat_decls(&sig)?;
        let labels = self.labels();
        let (mut eqs, mut rules, mut defs) = (Vec::new(), Vec::new(), Vec::new());
        for (m, st) in self.stmts() {
            let vars = &var_maps[m.name.as_str()];
            let tp = TermParser::new(&sig, vars);
            match st.kw.text.as_str() {
                "eq" | "ceq" => eqs.push(equation(&tp, st)?),
                "rl" | "crl" => rules.push(rule(&tp, st)?),
                "sd" | "csd" => {
                    let ctx = StratContext { tp, labels: &labels, decls: &decls };
                    defs.push(strat_def(&ctx, st)?);
                }
                _ => {}
            }
        }
        Ok(Module::new(self.ast.name.clone(), self.ast.kind, sig, command_vars, eqs, rules, decls, defs))
    }

    fn check_kinds(&self) -> Result<()> {
        for (m, st) in self.stmts() {
            let kw = st.kw.text.as_str();
            let needs = match kw {
                "rl" | "crl" => Some(ModuleKind::System),
                "strat" | "strats" | "sd" | "csd" => Some(ModuleKind::Strategy),
                "mb" | "cmb" => return Err(at(&st.kw, "membership axioms are not supported; use subsorts")),
                _ => None,
            };
            let level = |k: ModuleKind| match k {
                ModuleKind::Functional => 0,
                ModuleKind::System => 1,
                ModuleKind::Strategy => 2,
            };
            if let Some(k) = needs {
                if level(m.kind) < level(k) {
                    return Err(at(&st.kw, format!("`{kw}` is not allowed in {} {}", m.kind.keywords().0, m.name)));
                }
            }
        }
        // Strategy modules may be imported only by strategy modules.
        for m in &self.chain {
            if m.kind == ModuleKind::Strategy && self.ast.kind != ModuleKind::Strategy {
                return Err(Error::Resolve(format!("{} imports strategy module {}", self.ast.name, m.name)));
            }
        }
        Ok(())
    }

    fn sorts(&self) -> Result<SortTable> {
        let mut b = SortBuilder::new();
        for (_, st) in self.stmts() {
            if matches!(st.kw.text.as_str(), "sort" | "sorts") {
                if st.toks.is_empty() {
                    return Err(at(&st.kw, "missing sort name"));
                }
                for t in &st.toks {
                    if matches!(t.text.as_str(), "{" | "}" | "[" | "]" | "(" | ")" | ",") {
                        return Err(at(t, "parameterized sort names are not supported"));
                    }
                    b.add(&t.text);
                }
            }
        }
        for (_, st) in self.stmts() {
            if matches!(st.kw.text.as_str(), "subsort" | "subsorts") {
                let groups = split_top(&st.toks, "<");
                if groups.len() < 2 || groups.iter().any(|g| g.is_empty()) {
                    return Err(at(&st.kw, "malformed subsort declaration"));
                }
                let mut ids = Vec::new();
                for g in &groups {
                    let mut row = Vec::new();
                    for t in g.iter() {
                        row.push(b.get(&t.text).ok_or_else(|| at(t, format!("unknown sort {}", t.text)))?);
                    }
                    ids.push(row);
                }
                for w in ids.windows(2) {
                    for &lo in &w[0] {
                        for &hi in &w[1] {
                            b.subsort(lo, hi);
                        }
                    }
                }
            }
        }
        b.finish()
    }

    fn op_specs(&self, sorts: &SortTable) -> Result<Vec<OpSpec>> {
        let mut out = Vec::new();
        for (_, st) in self.stmts() {
            let kw = st.kw.text.as_str();
            if kw != "op" && kw != "ops" {
                continue;
            }
            let (body, attrs) = split_attrs(&st.toks);
            let attrs = match attrs {
                Some(a) => parse_attrs(a)?,
                None => Attrs::default(),
            };
            let colon = body.iter().position(|t| t.is(":")).ok_or_else(|| at(&st.kw, "expected `:` in operator declaration"))?;
            let arrow =
                body.iter().position(|t| t.is("->") || t.is("~>")).ok_or_else(|| at(&st.kw, "expected `->` in operator declaration"))?;
            if arrow < colon || colon == 0 {
                return Err(at(&st.kw, "malformed operator declaration"));
            }
            let args = sort_list(sorts, &body[colon + 1..arrow])?;
            let result = resolve_sort(sorts, &body[arrow + 1..])?;
            let names: Vec<(String, Token)> = if kw == "op" {
                let name: String = body[..colon].iter().map(|t| t.text.as_str()).collect();
                vec![(name, body[0].clone())]
            } else {
                body[..colon].iter().map(|t| (t.text.clone(), t.clone())).collect()
            };
            for (name, tok) in names {
                if name.contains('_') && name.matches('_').count() != args.len() {
                    return Err(at(
                        &tok,
                        format!("operator {name} has {} underscores but {} arguments", name.matches('_').count(), args.len()),
                    ));
                }
                let attrs = Attrs { id: attrs.id.clone(), label: attrs.label.clone(), ..attrs };
                out.push(OpSpec { name, args: args.clone(), result, attrs, tok });
            }
        }
        Ok(out)
    }

    fn signature(&self, sorts: &Arc<SortTable>, specs: Vec<OpSpec>) -> Result<Signature> {
        // One symbol per name, arity and kind of the result.
        let mut groups: Vec<Vec<OpSpec>> = Vec::new();
        for s in specs {
            let found = groups.iter_mut().find(|g| {
                let h = &g[0];
                h.name == s.name && h.args.len() == s.args.len() && sorts.same_kind(h.result, s.result)
            });
            match found {
                Some(g) => g.push(s),
                None => groups.push(vec![s]),
            }
        }
        let mut symbols = builtins::symbols(sorts);
        let mut identities = Vec::new();
        for g in groups {
            let head = &g[0];
            let assoc = g.iter().any(|s| s.attrs.assoc);
            let comm = g.iter().any(|s| s.attrs.comm);
            let ctor = g.iter().any(|s| s.attrs.ctor);
            let prec = g.iter().find_map(|s| s.attrs.prec);
            let arity = head.args.len();
            if (assoc || comm) && arity != 2 {
                return Err(at(&head.tok, format!("assoc and comm need a binary operator, {} has arity {arity}", head.name)));
            }
            if assoc || comm {
                for s in &g {
                    if !s.args.iter().all(|&a| sorts.same_kind(a, s.result)) {
                        return Err(at(&s.tok, format!("arguments of {} must be in the kind of its result", s.name)));
                    }
                }
            }
            let mut decls: Vec<OpDecl> = Vec::new();
            for s in &g {
                let d = OpDecl { args: s.args.clone(), result: s.result };
                if !decls.contains(&d) {
                    decls.push(d);
                }
            }
            let sym = Symbol::new(&head.name, arity, decls, assoc, comm, ctor, prec, None, sorts.clone());
            if let Some(id) = g.iter().find_map(|s| s.attrs.id.clone()) {
                if arity != 2 {
                    return Err(at(&head.tok, "id: needs a binary operator"));
                }
                identities.push((sym.clone(), id));
            }
            symbols.push(sym);
        }
        let sig = Signature::new(sorts.clone(), symbols);
        let no_vars = HashMap::new();
        let tp = TermParser::new(&sig, &no_vars);
        for (sym, toks) in identities {
            let e = tp.parse(&toks, Some(sym.range())).map_err(|e| at(&toks[0], format!("identity of {}: {e}", sym.name)))?;
            if !e.is_ground() {
                return Err(at(&toks[0], "identity element must be ground"));
            }
            sym.set_identity(e);
        }
        Ok(sig)
    }

    fn vars_of(&self, m: &ModuleAst, sorts: &SortTable) -> Result<HashMap<String, SortId>> {
        let mut vars = HashMap::new();
        for st in &m.stmts {
            if !matches!(st.kw.text.as_str(), "var" | "vars") {
                continue;
            }
            let colon = st.toks.iter().position(|t| t.is(":")).ok_or_else(|| at(&st.kw, "expected `:` in variable declaration"))?;
            let sort = resolve_sort(sorts, &st.toks[colon + 1..])?;
            if colon == 0 {
                return Err(at(&st.kw, "missing variable name"));
            }
            for t in &st.toks[..colon] {
                if let Some(&old) = vars.get(&t.text) {
                    if old != sort {
                        return Err(at(t, format!("variable {} declared with two sorts", t.text)));
                    }
                }
                vars.insert(t.text.clone(), sort);
            }
        }
        Ok(vars)
    }

    fn strat_decls(&self, sig: &Signature) -> Result<Vec<StratDecl>> {
        let sorts = &sig.sorts;
        let mut out: Vec<StratDecl> = Vec::new();
        for (_, st) in self.stmts() {
            if !matches!(st.kw.text.as_str(), "strat" | "strats") {
                continue;
            }
            let (body, _) = split_attrs(&st.toks);
            let at_pos = body.iter().position(|t| t.is("@")).ok_or_else(|| at(&st.kw, "expected `@` in strategy declaration"))?;
            let subject = resolve_sort(sorts, &body[at_pos + 1..])?;
            let colon = body[..at_pos].iter().position(|t| t.is(":"));
            let (names, args) = match colon {
                Some(c) => (&body[..c], sort_list(sorts, &body[c + 1..at_pos])?),
                None => (&body[..at_pos], Vec::new()),
            };
            if names.is_empty() {
                return Err(at(&st.kw, "missing strategy name"));
            }
            for n in names {
                if out.iter().any(|d| d.name == n.text && d.args.len() == args.len()) {
                    continue;
                }
                let tuple = Symbol::new(
                    &format!("{}$args", n.text),
                    args.len(),
                    vec![OpDecl { args: args.clone(), result: SortId::TUPLE }],
                    false,
                    false,
                    true,
                    None,
                    Some(Builtin::Tuple),
                    sorts.clone(),
                );
                out.push(StratDecl { name: n.text.clone(), args: args.clone(), subject, tuple });
            }
        }
        Ok(out)
    }

    fn labels(&self) -> HashSet<String> {
        let mut out = HashSet::new();
        for (_, st) in self.stmts() {
            if matches!(st.kw.text.as_str(), "rl" | "crl") {
                if let Ok((Some(l), _)) = rule_label(st) {
                    out.insert(l);
                }
            }
        }
        out
    }
}

fn collect_imports<'l>(lib: &'l Library, m: &'l ModuleAst, chain: &mut Vec<&'l ModuleAst>, visiting: &mut Vec<String>) -> Result<()> {
    for st in &m.stmts {
        if !IMPORT_KEYWORDS.contains(&st.kw.text.as_str()) {
            continue;
        }
        let Some(name) = st.toks.first() else {
            return Err(at(&st.kw, "missing module name"));
        };
        if st.toks.len() > 1 {
            let hint = if st.toks[1].is("{") { "; parameterized modules must be instantiated by hand" } else { "" };
            return Err(at(&st.toks[1], format!("unsupported module expression{hint}")));
        }
        if builtins::PRELUDE.contains(&name.text.as_str()) {
            continue;
        }
        if visiting.contains(&name.text) {
            return Err(at(name, format!("cyclic import of {}", name.text)));
        }
        let Some(dep) = lib.asts.get(&name.text) else {
            return Err(at(name, format!("unknown module {}", name.text)));
        };
        if chain.iter().any(|c| c.name == dep.name) {
            continue;
        }
        visiting.push(dep.name.clone());
        collect_imports(lib, dep, chain, visiting)?;
        visiting.pop();
        chain.push(dep);
    }
    Ok(())
}

/// Parses `lhs <sep> rhs`, trying every top-level separator until both
/// sides parse with compatible kinds.
fn split_pair(tp: &TermParser<'_>, toks: &[Token], sep: &str, kw: &Token) -> Result<(Term, Term)> {
    let mut first_err = None;
    for k in top_positions(toks, sep) {
        let (l, r) = (&toks[..k], &toks[k + 1..]);
        if l.is_empty() || r.is_empty() {
            continue;
        }
        let res = tp.parse(l, None).and_then(|lhs| {
            let rhs = tp.parse(r, Some(lhs.sort()))?;
            Ok((lhs, rhs))
        });
        match res {
            Ok(p) => return Ok(p),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    Err(first_err.unwrap_or_else(|| at(kw, format!("expected `{sep}`"))))
}

fn bound_by(cond: &[Cond], mut vars: Vec<Term>) -> Vec<Term> {
    for c in cond {
        match c {
            Cond::Match(p, _) | Cond::Rewrite(_, p) => p.collect_vars(&mut vars),
            _ => {}
        }
    }
    vars
}

fn check_bound(kw: &Token, bound: &[Term], t: &Term, what: &str) -> Result<()> {
    for v in t.vars() {
        if !bound.contains(&v) {
            return Err(at(kw, format!("variable {} in the {what} is not bound by the left-hand side", v.var_name().unwrap_or("?"))));
        }
    }
    Ok(())
}

fn body_and_cond<'t>(tp: &TermParser<'_>, st: &'t Stmt, conditional: bool) -> Result<(&'t [Token], Vec<Cond>, Attrs)> {
    let (body, attrs) = split_attrs(&st.toks);
    let attrs = match attrs {
        Some(a) => parse_attrs(a)?,
        None => Attrs::default(),
    };
    if !conditional {
        return Ok((body, Vec::new(), attrs));
    }
    let k = condition_split(body).ok_or_else(|| at(&st.kw, format!("`{}` needs an `if` condition", st.kw.text)))?;
    let cond = parse_condition(tp, &body[k + 1..])?;
    Ok((&body[..k], cond, attrs))
}

fn equation(tp: &TermParser<'_>, st: &Stmt) -> Result<Equation> {
    let (body, cond, attrs) = body_and_cond(tp, st, st.kw.is("ceq"))?;
    let (lhs, rhs) = split_pair(tp, body, "=", &st.kw)?;
    if lhs.is_var() {
        return Err(at(&st.kw, "the left-hand side of an equation cannot be a variable"));
    }
    let bound = bound_by(&cond, lhs.vars());
    check_bound(&st.kw, &bound, &rhs, "right-hand side")?;
    Ok(Equation { lhs, rhs, cond, owise: attrs.owise })
}

fn rule_label(st: &Stmt) -> Result<(Option<String>, usize)> {
    let t = &st.toks;
    if t.len() >= 4 && t[0].is("[") && t[2].is("]") && t[3].is(":") {
        return Ok((Some(t[1].text.clone()), 4));
    }
    let (_, attrs) = split_attrs(t);
    let label = match attrs {
        Some(a) => parse_attrs(a)?.label,
        None => None,
    };
    Ok((label, 0))
}

fn rule(tp: &TermParser<'_>, st: &Stmt) -> Result<Rule> {
    let (label, skip) = rule_label(st)?;
    let trimmed = Stmt { kw: st.kw.clone(), toks: st.toks[skip..].to_vec() };
    let (body, cond, attrs) = body_and_cond(tp, &trimmed, st.kw.is("crl"))?;
    let (lhs, rhs) = split_pair(tp, body, "=>", &st.kw)?;
    if !attrs.nonexec {
        let bound = bound_by(&cond, lhs.vars());
        check_bound(&st.kw, &bound, &rhs, "right-hand side")?;
    }
    Ok(Rule { label: label.or(attrs.label), lhs, rhs, cond, nonexec: attrs.nonexec })
}

fn strat_def(ctx: &StratContext<'_>, st: &Stmt) -> Result<StratDef> {
    let (body, cond, _) = body_and_cond(&ctx.tp, st, st.kw.is("csd"))?;
    let k = top_positions(body, ":=").first().copied().ok_or_else(|| at(&st.kw, "expected `:=` in strategy definition"))?;
    let head = &body[..k];
    let name = head.first().ok_or_else(|| at(&st.kw, "missing strategy name"))?;
    let arg_toks: &[Token] = match head.len() {
        1 => &[],
        n if n >= 3 && head[1].is("(") && head[n - 1].is(")") => &head[2..n - 1],
        _ => return Err(at(name, "malformed strategy definition head")),
    };
    let candidates: Vec<&StratDecl> = ctx.decls.iter().filter(|d| d.name == name.text).collect();
    if candidates.is_empty() {
        return Err(Error::UnknownStrategy(name.text.clone()));
    }
    let mut params = None;
    let mut last_err = None;
    for d in &candidates {
        match parse_args(&ctx.tp, arg_toks, &d.args) {
            Ok(p) => {
                params = Some(p);
                break;
            }
            Err(e) => last_err = Some(e),
        }
    }
    let params = params.ok_or_else(|| last_err.unwrap_or_else(|| Error::UnknownStrategy(name.text.clone())))?;
    let strat = parse_strategy(ctx, &body[k + 1..])?;
    Ok(StratDef { name: name.text.clone(), params, cond, body: strat })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_items, Item};

    pub(crate) const BOARD: &str = "
fmod 15PUZZLE-BOARD is
  protecting NAT .
  sorts Tile Row Puzzle .
  subsorts Nat < Tile < Row < Puzzle .
  op b : -> Tile [ctor] .
  op nil : -> Row [ctor] .
  op __ : Row Row -> Row [ctor assoc id: nil prec 25] .
  op _;_ : Puzzle Puzzle -> Puzzle [ctor assoc] .
  var T : Tile .
  var R : Row .
  op size : Row -> Nat .
  eq size(nil) = 0 .
  eq size(T R) = size(R) + 1 .
endfm
mod 15PUZZLE is
  protecting 15PUZZLE-BOARD .
  var T : Tile . vars LU RU LD RD : Row . var P : Puzzle .
  rl [left] : T b => b T .
  rl [right] : b T => T b .
  crl [down] : (LU b RU) ; (LD T RD)
            => (LU T RU) ; (LD b RD) if size(LU) = size(LD) .
  crl [up] : (LU T RU) ; (LD b RD)
          => (LU b RU) ; (LD T RD) if size(LU) = size(LD) .
endm
smod 15PUZZLE-STRATS is
  protecting 15PUZZLE .
  protecting INT .
  strat loop @ Puzzle .
  strat move : Int Int @ Puzzle .
  var N : Nat . var M : Int .
  sd loop := left ; up ; right ; down .
  sd move(0, 0) := idle .
  sd move(s(N), M) := right ; move(N, M) .
  sd move(- s(N), M) := left ; move(- N, M) .
  sd move(0, s(N)) := down ; move(0, N) .
  sd move(0, - s(N)) := up ; move(0, - N) .
endsm
";

    pub(crate) fn load(src: &str) -> Library {
        let mut lib = Library::new();
        for item in parse_items(src) {
            if let Item::Module(m) = item.unwrap() {
                lib.add(m).unwrap();
            }
        }
        lib
    }

    #[test]
    fn puzzle_modules() {
        let lib = load(BOARD);
        let board = lib.get("15PUZZLE-BOARD").unwrap();
        for s in ["Tile", "Row", "Puzzle"] {
            assert!(board.sig.sorts.get(s).is_some());
        }
        assert_eq!(board.eqs.len(), 2);
        let puzzle = lib.get("15PUZZLE").unwrap();
        assert_eq!(puzzle.rules.len(), 4);
        assert_eq!(puzzle.rules[2].cond.len(), 1);
        let strats = lib.get("15PUZZLE-STRATS").unwrap();
        assert_eq!(strats.strat_decls.len(), 2);
        assert_eq!(strats.strat_defs.len(), 6);
        assert_eq!(strats.eqs.len(), 2);
        assert_eq!(strats.strat_defs[2].body.to_string(), "right ; move(N, M)");
    }

    #[test]
    fn terms_with_mixfix() {
        let lib = load(BOARD);
        let m = lib.get("15PUZZLE").unwrap();
        let tp = TermParser::new(&m.sig, &m.vars);
        let t = tp.parse_str("1 b 2 ; 3 b 4").unwrap();
        assert_eq!(m.sort_name(t.sort()), "Puzzle");
        assert_eq!(t.args().len(), 2);
        assert_eq!(t.to_string(), "1 b 2 ; 3 b 4");
        let p = tp.parse_str("(LU b RU) ; (LD T RD)").unwrap();
        assert_eq!(p.to_string(), "LU b RU ; LD T RD");
        assert_eq!(m.sort_name(tp.parse_str("b").unwrap().sort()), "Tile");
        let s = tp.parse_str("size(1 b 2 3) + 1").unwrap();
        assert_eq!(s.args().len(), 2);
    }

    #[test]
    fn empty_module() {
        let lib = load("fmod M is endfm");
        let m = lib.get("M").unwrap();
        assert!(m.eqs.is_empty() && m.rules.is_empty());
    }

    #[test]
    fn statement_errors() {
        let mut lib = Library::new();
        let bad = [
            "fmod A is sort S . op f : S -> T . endfm",
            "fmod A is sort S . rl [x] : a => a . endfm",
            "fmod A is sort S . op a : -> S . var X : S . eq a = X . endfm",
            "fmod A is sort S . vars X : S . var X : Nat . endfm",
            "fmod A is protecting MISSING . endfm",
            "fmod A is sort S . op _+_ : S S S -> S . endfm",
        ];
        for src in bad {
            let Item::Module(m) = parse_items(src).pop().unwrap().unwrap() else { panic!() };
            assert!(lib.add(m).is_err(), "{src}");
        }
    }

    #[test]
    fn condition_if_is_found_past_conditionals() {
        let toks = crate::lexer::tokenize("f(X) = if X then a else b fi if X = c");
        let k = condition_split(&toks).unwrap();
        assert_eq!(crate::termparse::text_of(&toks[k + 1..]), "X = c");
    }
}
