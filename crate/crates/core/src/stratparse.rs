//! Strategy expressions and equational conditions.
//!
//! Binding strength, tightest first: the postfix operators `*`, `+`, `!`,
//! then `;`, `|`, `or-else` and finally `? :`. Tests and `matchrew`
//! embed terms, which end at the longest prefix that parses as one.

use std::collections::HashSet;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lexer::{tokenize, Token};
use crate::module::{Cond, StratDecl};
use crate::sort::SortId;
use crate::strategy::{MatchMode, RuleApp, Strat, StratRef};
use crate::term::Term;
use crate::termparse::{text_of, TermParser};

pub struct StratContext<'a> {
    pub tp: TermParser<'a>,
    pub labels: &'a HashSet<String>,
    pub decls: &'a [StratDecl],
}

fn depth_delta(t: &Token) -> i32 {
    match t.text.as_str() {
        "(" | "[" | "{" => 1,
        ")" | "]" | "}" => -1,
        _ => 0,
    }
}

/// Positions of depth-zero tokens satisfying `pred`.
fn top_level(toks: &[Token], pred: impl Fn(usize, &Token) -> bool) -> Vec<usize> {
    let mut out = Vec::new();
    let mut depth = 0;
    for (i, t) in toks.iter().enumerate() {
        let d = depth_delta(t);
        if d < 0 {
            depth += d;
        }
        if depth == 0 && pred(i, t) {
            out.push(i);
        }
        if d > 0 {
            depth += d;
        }
    }
    out
}

/// Splits at depth-zero occurrences of `sep`.
pub fn split_top<'t>(toks: &'t [Token], sep: &str) -> Vec<&'t [Token]> {
    let mut parts = Vec::new();
    let mut start = 0;
    for i in top_level(toks, |_, t| t.is(sep)) {
        parts.push(&toks[start..i]);
        start = i + 1;
    }
    parts.push(&toks[start..]);
    parts
}

fn matching_close(toks: &[Token], open: usize) -> Option<usize> {
    let mut depth = 0;
    for (i, t) in toks.iter().enumerate().skip(open) {
        depth += depth_delta(t);
        if depth == 0 {
            return Some(i);
        }
    }
    None
}

fn err_at(t: Option<&Token>, msg: impl Into<String>) -> Error {
    match t {
        Some(t) => Error::syntax(t.line, t.col, msg),
        None => Error::syntax(0, 0, msg),
    }
}

/// Parses `t1 = t2`, picking the kind of each side from the other when
/// one of them alone is ambiguous.
fn parse_pair(tp: &TermParser<'_>, a: &[Token], b: &[Token]) -> Result<(Term, Term)> {
    match tp.parse(a, None) {
        Ok(x) => {
            let y = tp.parse(b, Some(x.sort()))?;
            Ok((x, y))
        }
        Err(e) => {
            let y = tp.parse(b, None).map_err(|_| e)?;
            let x = tp.parse(a, Some(y.sort()))?;
            Ok((x, y))
        }
    }
}

pub fn parse_condition(tp: &TermParser<'_>, toks: &[Token]) -> Result<Vec<Cond>> {
    let mut out = Vec::new();
    for frag in split_top(toks, "/\\") {
        if frag.is_empty() {
            return Err(err_at(toks.first(), "empty condition fragment"));
        }
        let find = |s: &str| top_level(frag, |_, t| t.is(s)).first().copied();
        let c = if let Some(k) = find(":=") {
            let (p, t) = parse_pair(tp, &frag[..k], &frag[k + 1..])?;
            Cond::Match(p, t)
        } else if let Some(k) = find("=>") {
            let (t, p) = parse_pair(tp, &frag[..k], &frag[k + 1..])?;
            Cond::Rewrite(t, p)
        } else if let Some(k) = find("=") {
            let (a, b) = parse_pair(tp, &frag[..k], &frag[k + 1..])?;
            Cond::Eq(a, b)
        } else if frag.len() >= 3 && frag[frag.len() - 2].is(":") {
            let name = &frag[frag.len() - 1].text;
            let sort = tp.sig.sorts.get(name).ok_or_else(|| err_at(frag.last(), format!("unknown sort {name}")))?;
            Cond::Sort(tp.parse(&frag[..frag.len() - 2], None)?, sort, name.clone())
        } else {
            let t = tp.parse(frag, Some(SortId::BOOL))?;
            Cond::Bool(t)
        };
        out.push(c);
    }
    Ok(out)
}

/// Parses a comma-separated argument list against expected kinds. Commas
/// inside an argument are allowed when exactly one grouping parses.
pub fn parse_args(tp: &TermParser<'_>, toks: &[Token], expected: &[SortId]) -> Result<Vec<Term>> {
    if expected.is_empty() {
        return if toks.is_empty() { Ok(Vec::new()) } else { Err(err_at(toks.first(), "no arguments expected")) };
    }
    let commas = top_level(toks, |_, t| t.is(","));
    let mut found: Option<Vec<Term>> = None;
    let mut first_err = None;
    // Choose expected.len() - 1 of the commas as argument separators.
    let k = expected.len() - 1;
    if commas.len() < k {
        return Err(err_at(toks.first(), format!("expected {} arguments", expected.len())));
    }
    let mut pick: Vec<usize> = (0..k).collect();
    loop {
        let mut bounds = vec![0];
        for &p in &pick {
            bounds.push(commas[p]);
        }
        bounds.push(toks.len());
        let mut args = Vec::with_capacity(expected.len());
        for (i, &s) in expected.iter().enumerate() {
            let from = if i == 0 { 0 } else { bounds[i] + 1 };
            match tp.parse(&toks[from..bounds[i + 1]], Some(s)) {
                Ok(t) => args.push(t),
                Err(e) => {
                    first_err.get_or_insert(e);
                    break;
                }
            }
        }
        if args.len() == expected.len() {
            if found.is_some() {
                return Err(err_at(toks.first(), "ambiguous argument list"));
            }
            found = Some(args);
        }
        // Next combination of separator commas.
        let mut i = k;
        loop {
            if i == 0 {
                return found.ok_or_else(|| first_err.unwrap_or_else(|| err_at(toks.first(), "bad arguments")));
            }
            i -= 1;
            if pick[i] < commas.len() - k + i {
                pick[i] += 1;
                for j in i + 1..k {
                    pick[j] = pick[j - 1] + 1;
                }
                break;
            }
        }
    }
}

pub fn parse_strategy(ctx: &StratContext<'_>, toks: &[Token]) -> Result<StratRef> {
    let mut p = Parser { ctx, toks, pos: 0 };
    let s = p.s5()?;
    if p.pos < toks.len() {
        return Err(err_at(toks.get(p.pos), format!("unexpected `{}` in strategy", toks[p.pos].text)));
    }
    Ok(s)
}

pub fn parse_strategy_str(ctx: &StratContext<'_>, text: &str) -> Result<StratRef> {
    parse_strategy(ctx, &tokenize(text))
}

const TERM_ENDS: [&str; 8] = ["s.t.", ";", "|", "?", ":", "or-else", ",", "by"];

struct Parser<'c, 'a, 't> {
    ctx: &'c StratContext<'a>,
    toks: &'t [Token],
    pos: usize,
}

impl<'c, 'a, 't> Parser<'c, 'a, 't> {
    fn peek(&self) -> Option<&str> {
        self.toks.get(self.pos).map(|t| t.text.as_str())
    }

    fn peek_at(&self, k: usize) -> Option<&str> {
        self.toks.get(self.pos + k).map(|t| t.text.as_str())
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.peek() == Some(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn here(&self) -> Option<&Token> {
        self.toks.get(self.pos).or(self.toks.last())
    }

    fn s5(&mut self) -> Result<StratRef> {
        let a = self.s4()?;
        if self.eat("?") {
            let b = self.s5()?;
            if !self.eat(":") {
                return Err(err_at(self.here(), "expected `:` in conditional strategy"));
            }
            let c = self.s5()?;
            return Ok(Strat::cond(a, b, c));
        }
        Ok(a)
    }

    fn s4(&mut self) -> Result<StratRef> {
        let mut a = self.s3()?;
        while self.eat("or-else") {
            let b = self.s3()?;
            a = Arc::new(Strat::OrElse(a, b));
        }
        Ok(a)
    }

    fn s3(&mut self) -> Result<StratRef> {
        let mut a = self.s2()?;
        while self.eat("|") {
            let b = self.s2()?;
            a = Strat::alt(a, b);
        }
        Ok(a)
    }

    fn s2(&mut self) -> Result<StratRef> {
        let mut a = self.s1()?;
        while self.eat(";") {
            let b = self.s1()?;
            a = Strat::seq(a, b);
        }
        Ok(a)
    }

    fn s1(&mut self) -> Result<StratRef> {
        let mut a = self.s0()?;
        loop {
            a = match self.peek() {
                Some("*") => Strat::star(a),
                Some("+") => Arc::new(Strat::Plus(a)),
                Some("!") => Arc::new(Strat::Bang(a)),
                _ => break,
            };
            self.pos += 1;
        }
        Ok(a)
    }

    /// The parenthesized group starting at the current `(`, parsed whole.
    fn group(&mut self) -> Result<&'t [Token]> {
        let open = self.pos;
        let close = matching_close(self.toks, open).ok_or_else(|| err_at(self.here(), "unbalanced parenthesis"))?;
        self.pos = close + 1;
        let toks: &'t [Token] = self.toks;
        Ok(&toks[open + 1..close])
    }

    fn sub(&self, toks: &[Token]) -> Result<StratRef> {
        if toks.is_empty() {
            return Err(err_at(self.here(), "empty strategy"));
        }
        parse_strategy(self.ctx, toks)
    }

    fn s0(&mut self) -> Result<StratRef> {
        let Some(tok) = self.peek() else {
            return Err(err_at(self.here(), "strategy expected"));
        };
        let tok = tok.to_string();
        let call_like = self.peek_at(1) == Some("(");
        match tok.as_str() {
            "(" => {
                let inner = self.group()?;
                self.sub(inner)
            }
            "idle" => {
                self.pos += 1;
                Ok(Strat::idle())
            }
            "fail" => {
                self.pos += 1;
                Ok(Strat::fail())
            }
            "all" => {
                self.pos += 1;
                Ok(Arc::new(Strat::All))
            }
            "top" if call_like => {
                self.pos += 1;
                let inner = self.group()?;
                let s = self.sub(inner)?;
                match &*s {
                    Strat::Rule(r) => Ok(Arc::new(Strat::Rule(RuleApp { top: true, ..r.clone() }))),
                    _ => Err(err_at(self.here(), "top( ) applies only to rule applications")),
                }
            }
            "not" | "try" | "test" | "one" if call_like => {
                self.pos += 1;
                let inner = self.group()?;
                let s = self.sub(inner)?;
                Ok(Arc::new(match tok.as_str() {
                    "not" => Strat::Not(s),
                    "try" => Strat::Try(s),
                    "test" => Strat::TestOp(s),
                    _ => Strat::One(s),
                }))
            }
            "match" | "xmatch" | "amatch" => {
                self.pos += 1;
                let mode = mode_of(&tok);
                let pattern = self.longest_term(&["s.t."])?;
                let cond = if self.eat("s.t.") { self.longest_cond(&[])? } else { Vec::new() };
                Ok(Arc::new(Strat::Test { mode, pattern, cond }))
            }
            "matchrew" | "xmatchrew" | "amatchrew" => {
                self.pos += 1;
                self.matchrew(mode_of(tok.trim_end_matches("rew")))
            }
            _ => self.named(&tok),
        }
    }

    /// Candidate end positions of an embedded term: depth-zero delimiters
    /// and the end of the region, longest first.
    fn ends(&self, extra_stop: &[&str]) -> Vec<usize> {
        let start = self.pos;
        let rest = &self.toks[start..];
        let mut ends: Vec<usize> =
            top_level(rest, |i, t| i > 0 && (TERM_ENDS.contains(&t.text.as_str()) || extra_stop.contains(&t.text.as_str())))
                .into_iter()
                .map(|i| start + i)
                .collect();
        ends.push(self.toks.len());
        ends.reverse();
        ends
    }

    fn longest_term(&mut self, stops: &[&str]) -> Result<Term> {
        let mut first_err = None;
        for e in self.ends(stops) {
            match self.ctx.tp.parse(&self.toks[self.pos..e], None) {
                Ok(t) => {
                    self.pos = e;
                    return Ok(t);
                }
                Err(err) => {
                    first_err.get_or_insert(err);
                }
            }
        }
        Err(first_err.unwrap_or_else(|| err_at(self.here(), "pattern expected")))
    }

    fn longest_cond(&mut self, stops: &[&str]) -> Result<Vec<Cond>> {
        let mut last_err = None;
        for e in self.ends(stops) {
            match parse_condition(&self.ctx.tp, &self.toks[self.pos..e]) {
                Ok(c) => {
                    self.pos = e;
                    return Ok(c);
                }
                Err(err) => last_err = Some(err),
            }
        }
        Err(last_err.unwrap_or_else(|| err_at(self.here(), "condition expected")))
    }

    fn matchrew(&mut self, mode: MatchMode) -> Result<StratRef> {
        let rest = &self.toks[self.pos..];
        let stop = top_level(rest, |_, t| t.is("s.t.") || t.is("by")).first().copied();
        let Some(stop) = stop else {
            return Err(err_at(self.here(), "expected `by` in matchrew"));
        };
        let pattern = self.ctx.tp.parse(&rest[..stop], None)?;
        self.pos += stop;
        let mut cond = Vec::new();
        if self.eat("s.t.") {
            let rest = &self.toks[self.pos..];
            let by = top_level(rest, |_, t| t.is("by")).first().copied().ok_or_else(|| err_at(self.here(), "expected `by` in matchrew"))?;
            cond = parse_condition(&self.ctx.tp, &rest[..by])?;
            self.pos += by;
        }
        if !self.eat("by") {
            return Err(err_at(self.here(), "expected `by` in matchrew"));
        }
        // The using pairs extend to the end of the enclosing region.
        let rest = &self.toks[self.pos..];
        let mut cuts = top_level(rest, |i, t| t.is(",") && rest.get(i + 2).is_some_and(|u| u.is("using")));
        cuts.push(rest.len());
        let mut subs = Vec::new();
        let mut start = 0;
        let pattern_vars = pattern.vars();
        for cut in cuts {
            let pair = &rest[start..cut];
            if pair.len() < 3 || !pair[1].is("using") {
                return Err(err_at(pair.first().or(self.here()), "expected `X using strategy`"));
            }
            let var = self.ctx.tp.parse(&pair[..1], None)?;
            if !var.is_var() || !pattern_vars.contains(&var) {
                return Err(err_at(Some(&pair[0]), format!("{} is not a variable of the matchrew pattern", pair[0].text)));
            }
            if subs.iter().any(|(v, _)| v == &var) {
                return Err(err_at(Some(&pair[0]), format!("{} is used twice", pair[0].text)));
            }
            subs.push((var, self.sub(&pair[2..])?));
            start = cut + 1;
        }
        self.pos = self.toks.len();
        Ok(Arc::new(Strat::MatchRew { mode, pattern, cond, subs }))
    }

    fn named(&mut self, name: &str) -> Result<StratRef> {
        let at = self.pos;
        self.pos += 1;
        match self.peek() {
            Some("(") => {
                let inner = self.group()?;
                let ncommas = top_level(inner, |_, t| t.is(",")).len();
                let mut last_err = None;
                let mut found = None;
                for d in self.ctx.decls.iter().filter(|d| d.name == name && d.args.len() <= ncommas + 1) {
                    match parse_args(&self.ctx.tp, inner, &d.args) {
                        Ok(a) => {
                            found = Some(a);
                            break;
                        }
                        Err(e) => last_err = Some(e),
                    }
                }
                let args = match (found, last_err) {
                    (Some(a), _) => a,
                    (None, Some(e)) => return Err(e),
                    (None, None) => {
                        return Err(Error::UnknownStrategy(format!(
                            "{name} with {} arguments",
                            if inner.is_empty() { 0 } else { ncommas + 1 }
                        )))
                    }
                };
                Ok(Arc::new(Strat::Call { name: name.to_string(), args }))
            }
            Some("[") | Some("{") => self.rule_app(name),
            _ => {
                let is_call = !self.ctx.labels.contains(name) && self.ctx.decls.iter().any(|d| d.name == name && d.args.is_empty());
                if is_call {
                    Ok(Arc::new(Strat::Call { name: name.to_string(), args: Vec::new() }))
                } else if is_ident(name) {
                    Ok(Strat::rule(name))
                } else {
                    Err(err_at(self.toks.get(at), format!("unexpected `{name}` in strategy")))
                }
            }
        }
    }

    fn rule_app(&mut self, label: &str) -> Result<StratRef> {
        let mut subst = Vec::new();
        if self.peek() == Some("[") {
            let inner = self.group()?;
            let cuts = top_level(inner, |i, t| t.is(",") && inner.get(i + 2).is_some_and(|u| u.is("<-")));
            let mut start = 0;
            for cut in cuts.into_iter().chain(std::iter::once(inner.len())) {
                let b = &inner[start..cut];
                if b.len() < 3 || !b[1].is("<-") {
                    return Err(err_at(b.first().or(self.here()), "expected `X <- term`"));
                }
                subst.push((b[0].text.clone(), self.ctx.tp.parse(&b[2..], None)?));
                start = cut + 1;
            }
        }
        let mut strats = Vec::new();
        if self.peek() == Some("{") {
            let inner = self.group()?;
            for part in split_top(inner, ",") {
                strats.push(self.sub(part)?);
            }
        }
        Ok(Arc::new(Strat::Rule(RuleApp { label: label.to_string(), subst, strats, top: false })))
    }
}

fn mode_of(kw: &str) -> MatchMode {
    match kw {
        "xmatch" => MatchMode::XMatch,
        "amatch" => MatchMode::AMatch,
        _ => MatchMode::Match,
    }
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && !["*", "+", "!", ";", "|", "?", ":", ")", "]", "}", ",", "or-else", "using", "by", "s.t."].contains(&s)
}

/// Text of a token slice, for diagnostics.
pub fn describe(toks: &[Token]) -> String {
    text_of(toks)
}
