//! Equational reduction, condition checking and rule rewriting.
//!
//! Reduction is leftmost-innermost: arguments first, then equations at
//! the top, `owise` equations last. Rewriting steps always work on
//! equational normal forms.

use std::collections::{HashSet, VecDeque};

use crate::builtins;
use crate::error::{Error, Result};
use crate::matcher::{for_each_extension, for_each_top, match_anywhere_from, match_extension_from, match_top_from, Context, MatchResult};
use crate::module::{Cond, Module, Rule};
use crate::subst::Subst;
use crate::term::{Builtin, Term};

/// Normal forms kept per module before the cache is flushed.
const CACHE_CAP: usize = 1 << 20;

/// Which rules a rewrite step may use.
#[derive(Clone, Copy, Debug)]
pub enum RuleFilter<'a> {
    /// Every executable rule.
    All,
    Label(&'a str),
}

/// Reduction and rewriting over one module, with a step budget per
/// top-level reduction.
pub struct Engine<'m> {
    pub module: &'m Module,
    steps: u64,
    depth: u32,
}

fn unbound(t: &Term) -> Error {
    let name = t.vars().first().and_then(|v| v.var_name().map(str::to_string)).unwrap_or_default();
    Error::UnboundVariable(name)
}

impl<'m> Engine<'m> {
    pub fn new(module: &'m Module) -> Self {
        Engine { module, steps: 0, depth: 0 }
    }

    fn tick(&mut self) -> Result<()> {
        self.steps += 1;
        self.module.count_rewrites(1);
        let limit = self.module.limits().eq_steps;
        if self.steps > limit {
            return Err(Error::EqLimit(limit));
        }
        Ok(())
    }

    /// Normal form of `t` under the module's equations and builtins.
    pub fn reduce(&mut self, t: &Term) -> Result<Term> {
        if self.depth == 0 {
            self.steps = 0;
        }
        self.depth += 1;
        let r = self.normalize(t);
        self.depth -= 1;
        r
    }

    fn cached(&self, t: &Term) -> Option<Term> {
        self.module.nf_cache.lock().unwrap_or_else(|e| e.into_inner()).get(t).cloned()
    }

    fn remember(&self, from: &Term, to: &Term) {
        let mut c = self.module.nf_cache.lock().unwrap_or_else(|e| e.into_inner());
        if c.len() >= CACHE_CAP {
            c.clear();
        }
        c.insert(from.clone(), to.clone());
        c.insert(to.clone(), to.clone());
    }

    fn normalize(&mut self, t: &Term) -> Result<Term> {
        let original = t.clone();
        let mut cur = t.clone();
        loop {
            let Some(f) = cur.symbol().cloned() else {
                return Ok(cur);
            };
            if let Some(hit) = self.cached(&cur) {
                self.remember(&original, &hit);
                return Ok(hit);
            }
            // Lazy builtins evaluate their first argument only.
            match f.builtin {
                Some(Builtin::IfThenElse) => {
                    let c = self.normalize(&cur.args()[0])?;
                    match c.builtin() {
                        Some(Builtin::True) => {
                            self.tick()?;
                            cur = cur.args()[1].clone();
                            continue;
                        }
                        Some(Builtin::False) => {
                            self.tick()?;
                            cur = cur.args()[2].clone();
                            continue;
                        }
                        _ => {}
                    }
                }
                Some(b @ (Builtin::AndThen | Builtin::OrElse)) => {
                    let a = self.normalize(&cur.args()[0])?;
                    let short = if b == Builtin::AndThen { Builtin::False } else { Builtin::True };
                    match a.builtin() {
                        Some(x) if x == short => {
                            self.tick()?;
                            cur = a;
                            continue;
                        }
                        Some(Builtin::True | Builtin::False) => {
                            self.tick()?;
                            cur = cur.args()[1].clone();
                            continue;
                        }
                        _ => {}
                    }
                }
                _ => {}
            }
            let mut args = Vec::with_capacity(cur.args().len());
            for a in cur.args() {
                args.push(self.normalize(a)?);
            }
            let t2 = if args.iter().zip(cur.args()).all(|(a, b)| a == b) { cur.clone() } else { Term::app(&f, args) };
            if let Some(hit) = self.cached(&t2) {
                self.remember(&original, &hit);
                return Ok(hit);
            }
            match self.step_top(&t2)? {
                Some(next) => {
                    self.tick()?;
                    cur = next;
                }
                None => {
                    self.remember(&original, &t2);
                    return Ok(t2);
                }
            }
        }
    }

    /// One equation or builtin step at the top of a term whose arguments
    /// are normal.
    fn step_top(&mut self, t: &Term) -> Result<Option<Term>> {
        let Some(f) = t.symbol().cloned() else {
            return Ok(None);
        };
        if f.builtin.is_some() {
            if let Some(r) = builtins::eval(&self.module.sig, &f, t.args()) {
                return Ok(Some(r));
            }
        }
        let module = self.module;
        for &i in module.equations_for(&f) {
            let eq = &module.eqs[i];
            let mut found: Option<Result<Term>> = None;
            let sorts = module.sorts();
            let extend = f.assoc && eq.lhs.is_symbol(&f);
            let mut visit = |this: &mut Self, sub: &Subst, ctx: Context| -> bool {
                match this.check_eq_condition(&eq.cond, sub) {
                    Ok(sols) => match sols.first() {
                        Some(s2) => {
                            found = Some(Ok(ctx.plug(&s2.apply(&eq.rhs))));
                            false
                        }
                        None => true,
                    },
                    Err(e) => {
                        found = Some(Err(e));
                        false
                    }
                }
            };
            if extend {
                for_each_extension(sorts, &eq.lhs, t, &Subst::new(), &mut |sub, ctx| visit(self, sub, ctx));
            } else {
                for_each_top(sorts, &eq.lhs, t, &Subst::new(), &mut |sub| visit(self, sub, Context::hole()));
            }
            if let Some(r) = found {
                return r.map(Some);
            }
        }
        Ok(None)
    }

    fn ground(&mut self, sub: &Subst, t: &Term) -> Result<Term> {
        let u = sub.apply(t);
        if !u.is_ground() {
            return Err(unbound(&u));
        }
        self.reduce(&u)
    }

    /// All extensions of `sub` satisfying the equational fragments,
    /// evaluated left to right.
    pub fn check_eq_condition(&mut self, cond: &[Cond], sub: &Subst) -> Result<Vec<Subst>> {
        let mut current = vec![sub.clone()];
        for c in cond {
            let mut next = Vec::new();
            for s in &current {
                self.check_fragment(c, s, &mut next)?;
            }
            if next.is_empty() {
                return Ok(next);
            }
            current = next;
        }
        Ok(current)
    }

    fn check_fragment(&mut self, c: &Cond, s: &Subst, out: &mut Vec<Subst>) -> Result<()> {
        match c {
            Cond::Bool(t) => {
                if self.ground(s, t)?.builtin() == Some(Builtin::True) {
                    out.push(s.clone());
                }
            }
            Cond::Eq(a, b) => {
                if self.ground(s, a)? == self.ground(s, b)? {
                    out.push(s.clone());
                }
            }
            Cond::Sort(t, sort, _) => {
                let v = self.ground(s, t)?;
                if self.module.sorts().leq(v.sort(), *sort) {
                    out.push(s.clone());
                }
            }
            Cond::Match(p, t) => {
                let v = self.ground(s, t)?;
                let p2 = s.apply(p);
                out.extend(match_top_from(self.module.sorts(), &p2, &v, s));
            }
            Cond::Rewrite(..) => {
                return Err(Error::Command("rewriting condition fragment in an equational condition".into()));
            }
        }
        Ok(())
    }

    /// Solutions of a rule condition that may contain rewriting fragments;
    /// those are solved by unrestricted search from their left side.
    pub fn check_condition(&mut self, cond: &[Cond], sub: &Subst) -> Result<Vec<Subst>> {
        let mut current = vec![sub.clone()];
        for c in cond {
            let mut next = Vec::new();
            for s in &current {
                match c {
                    Cond::Rewrite(l, p) => {
                        let start = self.ground(s, l)?;
                        let p2 = s.apply(p);
                        for state in self.reachable(&start)? {
                            next.extend(match_top_from(self.module.sorts(), &p2, &state, s));
                        }
                    }
                    _ => self.check_fragment(c, s, &mut next)?,
                }
            }
            current = dedup(next);
            if current.is_empty() {
                break;
            }
        }
        Ok(current)
    }

    /// Every state reachable from `t` by executable rules, in breadth-first
    /// order, bounded by the state limit.
    pub fn reachable(&mut self, t: &Term) -> Result<Vec<Term>> {
        let limit = self.module.limits().states;
        let mut seen: HashSet<Term> = HashSet::new();
        let mut order = Vec::new();
        let mut queue = VecDeque::new();
        seen.insert(t.clone());
        queue.push_back(t.clone());
        while let Some(u) = queue.pop_front() {
            order.push(u.clone());
            if order.len() as u64 > limit {
                return Err(Error::StateLimit(limit));
            }
            for (v, _) in self.one_step_rewrites(RuleFilter::All, &Subst::new(), &u, false)? {
                if seen.insert(v.clone()) {
                    queue.push_back(v);
                }
            }
        }
        Ok(order)
    }

    pub fn rule_selected(rule: &Rule, filter: RuleFilter<'_>) -> bool {
        match filter {
            RuleFilter::All => !rule.nonexec,
            RuleFilter::Label(l) => rule.label.as_deref() == Some(l),
        }
    }

    /// Matches of a rule's left side, anywhere or at the top with extension.
    pub fn rule_matches(&self, rule: &Rule, init: &Subst, t: &Term, top: bool) -> Vec<MatchResult> {
        if top {
            match_extension_from(self.module.sorts(), &rule.lhs, t, init)
        } else {
            match_anywhere_from(self.module.sorts(), &rule.lhs, t, init)
        }
    }

    /// The reduced result of firing a rule under a full substitution.
    pub fn fire(&mut self, rule: &Rule, sub: &Subst, ctx: &Context) -> Result<Option<Term>> {
        let rhs = sub.apply(&rule.rhs);
        if !rhs.is_ground() {
            return Ok(None);
        }
        self.module.count_rewrites(1);
        Ok(Some(self.reduce(&ctx.plug(&rhs))?))
    }

    /// All one-step rewrites of a normal term by the selected rules, with
    /// the index of the rule used; duplicates removed.
    pub fn one_step_rewrites(&mut self, filter: RuleFilter<'_>, init: &Subst, t: &Term, top: bool) -> Result<Vec<(Term, usize)>> {
        let module = self.module;
        let mut out: Vec<(Term, usize)> = Vec::new();
        let mut seen = HashSet::new();
        for (i, rule) in module.rules.iter().enumerate() {
            if !Self::rule_selected(rule, filter) {
                continue;
            }
            for r in self.rule_matches(rule, init, t, top) {
                for s in self.check_condition(&rule.cond, &r.subst)? {
                    if let Some(u) = self.fire(rule, &s, &r.context)? {
                        if seen.insert(u.clone()) {
                            out.push((u, i));
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// The first rewrite in enumeration order, if any.
    pub fn first_rewrite(&mut self, t: &Term) -> Result<Option<Term>> {
        let module = self.module;
        for rule in module.rules.iter().filter(|r| !r.nonexec) {
            for r in self.rule_matches(rule, &Subst::new(), t, false) {
                for s in self.check_condition(&rule.cond, &r.subst)? {
                    if let Some(u) = self.fire(rule, &s, &r.context)? {
                        return Ok(Some(u));
                    }
                }
            }
        }
        Ok(None)
    }

    /// Rewrites with the first applicable rule up to `bound` times.
    pub fn rewrite_default(&mut self, t: &Term, bound: Option<u64>) -> Result<(Term, u64)> {
        let mut cur = self.reduce(t)?;
        let limit = self.module.limits().states;
        let mut n = 0;
        while bound.is_none_or(|b| n < b) {
            if bound.is_none() && n >= limit {
                return Err(Error::StateLimit(limit));
            }
            match self.first_rewrite(&cur)? {
                Some(u) => {
                    cur = u;
                    n += 1;
                }
                None => break,
            }
        }
        Ok((cur, n))
    }

    /// Breadth-first search for states matching `pattern` under `cond`,
    /// at the depths allowed by `arrow`.
    pub fn search(&mut self, t: &Term, arrow: SearchArrow, pattern: &Term, cond: &[Cond], bound: Option<usize>) -> Result<SearchResult> {
        let mut res = SearchResult::default();
        let start = self.reduce(t)?;
        let limit = self.module.limits().states;
        let mut seen: HashSet<Term> = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(start.clone());
        queue.push_back((start, 0usize));
        while let Some((u, depth)) = queue.pop_front() {
            let state = res.states;
            res.states += 1;
            if res.states as u64 > limit {
                return Err(Error::StateLimit(limit));
            }
            let next = if arrow == SearchArrow::One && depth == 1 {
                Vec::new()
            } else {
                self.one_step_rewrites(RuleFilter::All, &Subst::new(), &u, false)?
            };
            let eligible = match arrow {
                SearchArrow::One => depth == 1,
                SearchArrow::Plus => depth >= 1,
                SearchArrow::Star => true,
                SearchArrow::Bang => next.is_empty(),
            };
            if eligible {
                for m in match_top_from(self.module.sorts(), pattern, &u, &Subst::new()) {
                    for s in self.check_eq_condition(cond, &m)? {
                        res.solutions.push(SearchSolution { state, term: u.clone(), subst: s });
                        if bound.is_some_and(|b| res.solutions.len() >= b) {
                            return Ok(res);
                        }
                    }
                }
            }
            for (v, _) in next {
                if seen.insert(v.clone()) {
                    queue.push_back((v, depth + 1));
                }
            }
        }
        Ok(res)
    }
}

/// The arrow of a search command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchArrow {
    /// `=>1`
    One,
    /// `=>+`
    Plus,
    /// `=>*`
    Star,
    /// `=>!`
    Bang,
}

impl SearchArrow {
    pub fn parse(text: &str) -> Option<SearchArrow> {
        match text {
            "=>1" => Some(SearchArrow::One),
            "=>+" => Some(SearchArrow::Plus),
            "=>*" => Some(SearchArrow::Star),
            "=>!" => Some(SearchArrow::Bang),
            _ => None,
        }
    }
}

fn dedup(v: Vec<Subst>) -> Vec<Subst> {
    let mut seen = HashSet::new();
    v.into_iter().filter(|s| seen.insert(s.clone())).collect()
}

#[derive(Clone, Debug)]
pub struct SearchSolution {
    /// Breadth-first index of the matching state.
    pub state: usize,
    pub term: Term,
    pub subst: Subst,
}

#[derive(Clone, Debug, Default)]
pub struct SearchResult {
    pub solutions: Vec<SearchSolution>,
    /// States visited.
    pub states: usize,
}
