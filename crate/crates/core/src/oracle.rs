//! Reference evaluator for strategies: computes result sets directly by
//! recursion over the expression, with strategy calls unfolded to a
//! fixed depth. A set carrying `bottom` is a lower approximation of a
//! result that may still grow or never terminate.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::eqeng::{Engine, RuleFilter};
use crate::error::{Error, Result};
use crate::matcher::{match_mode, match_top_from, Context};
use crate::module::{Cond, Module, Rule};
use crate::strategy::{Strat, StratRef};
use crate::subst::Subst;
use crate::term::Term;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ResultSet {
    pub terms: BTreeSet<Term>,
    pub bottom: bool,
}

impl ResultSet {
    pub fn empty() -> Self {
        ResultSet::default()
    }

    pub fn bottom() -> Self {
        ResultSet { terms: BTreeSet::new(), bottom: true }
    }

    pub fn single(t: Term) -> Self {
        ResultSet { terms: [t].into(), bottom: false }
    }

    pub fn union(&mut self, other: ResultSet) {
        self.terms.extend(other.terms);
        self.bottom |= other.bottom;
    }

    /// `self ≤ other`: equal, or `self` is a partial result whose terms
    /// all appear in `other`.
    pub fn leq(&self, other: &ResultSet) -> bool {
        self == other || (self.bottom && self.terms.is_subset(&other.terms))
    }
}

/// Feeds every term of `a` to `f` and joins the results. Partiality of
/// `a` carries over.
pub fn let_in(a: &ResultSet, mut f: impl FnMut(&Term) -> Result<ResultSet>) -> Result<ResultSet> {
    let mut out = ResultSet { terms: BTreeSet::new(), bottom: a.bottom };
    for t in &a.terms {
        out.union(f(t)?);
    }
    Ok(out)
}

pub struct Oracle<'m> {
    module: &'m Module,
    eng: Engine<'m>,
    /// Evaluation steps allowed per top-level call to `eval`.
    pub budget: u64,
    steps: u64,
}

impl<'m> Oracle<'m> {
    pub fn new(module: &'m Module) -> Self {
        Oracle { module, eng: Engine::new(module), budget: 100_000, steps: 0 }
    }

    /// The result of `s` on `t` with calls unfolded `depth` times.
    pub fn eval(&mut self, s: &StratRef, env: &Subst, t: &Term, depth: u32) -> Result<ResultSet> {
        self.steps = 0;
        let t = self.eng.reduce(t)?;
        self.ev(s, env, &t, depth)
    }

    pub fn converged(&mut self, s: &StratRef, env: &Subst, t: &Term, depth: u32) -> Result<bool> {
        Ok(!self.eval(s, env, t, depth)?.bottom)
    }

    /// Evaluates at increasing depths up to `max_depth`, stopping at the
    /// first total result. Returns the last set and its depth.
    pub fn stable(&mut self, s: &StratRef, t: &Term, max_depth: u32) -> Result<(ResultSet, u32)> {
        let env = Subst::new();
        let mut last = ResultSet::bottom();
        for d in 0..=max_depth {
            last = self.eval(s, &env, t, d)?;
            if !last.bottom {
                return Ok((last, d));
            }
        }
        Ok((last, max_depth))
    }

    fn ev(&mut self, s: &StratRef, env: &Subst, t: &Term, depth: u32) -> Result<ResultSet> {
        self.steps += 1;
        if self.steps > self.budget {
            return Ok(ResultSet::bottom());
        }
        let module = self.module;
        Ok(match &**s {
            Strat::Idle => ResultSet::single(t.clone()),
            Strat::Fail => ResultSet::empty(),
            Strat::All => {
                let mut out = ResultSet::empty();
                for (u, _) in self.eng.one_step_rewrites(RuleFilter::All, &Subst::new(), t, false)? {
                    out.terms.insert(u);
                }
                out
            }
            Strat::Rule(app) => {
                let mut bindings = Vec::new();
                for (name, v) in &app.subst {
                    bindings.push((name.clone(), self.ground(env, v)?));
                }
                let mut out = ResultSet::empty();
                for rule in module.rules.iter() {
                    if rule.label.as_deref() != Some(app.label.as_str()) || rule.rewrite_fragments() != app.strats.len() {
                        continue;
                    }
                    let mut init = Subst::new();
                    for (name, v) in &bindings {
                        if let Some(var) = rule.var_named(name) {
                            init.bind(var, v.clone());
                        }
                    }
                    for m in self.eng.rule_matches(rule, &init, t, app.top) {
                        let r = self.rule_cond(rule, 0, &m.subst, &m.context, &app.strats, env, depth)?;
                        out.union(r);
                    }
                }
                out
            }
            Strat::Test { mode, pattern, cond } => {
                let pat = env.apply(pattern);
                let cond: Vec<Cond> = cond.iter().map(|c| c.map_terms(&|x| env.apply(x))).collect();
                let mut ok = false;
                for m in match_mode(module.sorts(), *mode, &pat, t, &Subst::new()) {
                    if !self.eng.check_eq_condition(&cond, &m.subst)?.is_empty() {
                        ok = true;
                        break;
                    }
                }
                if ok {
                    ResultSet::single(t.clone())
                } else {
                    ResultSet::empty()
                }
            }
            Strat::Seq(a, b) => {
                let first = self.ev(a, env, t, depth)?;
                let_in(&first, |u| self.ev(b, env, u, depth))?
            }
            Strat::Alt(a, b) => {
                let mut out = self.ev(a, env, t, depth)?;
                out.union(self.ev(b, env, t, depth)?);
                out
            }
            Strat::Star(a) => self.star(a, env, t, depth)?,
            Strat::Plus(a) => {
                let first = self.ev(a, env, t, depth)?;
                let mut out = ResultSet { terms: BTreeSet::new(), bottom: first.bottom };
                for u in &first.terms {
                    out.union(self.star(a, env, u, depth)?);
                }
                out
            }
            Strat::Cond(a, b, c) => self.cond(a, b, c, env, t, depth)?,
            Strat::OrElse(a, b) => self.cond(a, &Strat::idle(), b, env, t, depth)?,
            Strat::Not(a) => self.cond(a, &Strat::fail(), &Strat::idle(), env, t, depth)?,
            Strat::Try(a) => self.cond(a, &Strat::idle(), &Strat::idle(), env, t, depth)?,
            Strat::TestOp(a) => {
                let not_a = Arc::new(Strat::Not(a.clone()));
                self.cond(&not_a, &Strat::fail(), &Strat::idle(), env, t, depth)?
            }
            Strat::Bang(a) => {
                let all = self.star(a, env, t, depth)?;
                let not_a = Arc::new(Strat::Not(a.clone()));
                let_in(&all, |u| self.ev(&not_a, env, u, depth))?
            }
            Strat::One(_) => return Err(Error::Command("the reference evaluator does not handle one".into())),
            Strat::MatchRew { mode, pattern, cond, subs } => self.matchrew(*mode, pattern, cond, subs, env, t, depth)?,
            Strat::Call { name, args } => {
                if depth == 0 {
                    return Ok(ResultSet::bottom());
                }
                let decl = module.strat_decl(name, args.len()).ok_or_else(|| Error::UnknownStrategy(name.clone()))?;
                let mut vals = Vec::new();
                for a in args {
                    vals.push(self.ground(env, a)?);
                }
                let call = Term::app(&decl.tuple, vals);
                let mut out = ResultSet::empty();
                for def in module.defs_for(name, args.len()) {
                    let lhs = Term::app(&decl.tuple, def.params.clone());
                    for m in match_top_from(module.sorts(), &lhs, &call, &Subst::new()) {
                        for sigma in self.eng.check_eq_condition(&def.cond, &m)? {
                            out.union(self.ev(&def.body, &sigma, t, depth - 1)?);
                        }
                    }
                }
                out
            }
        })
    }

    fn ground(&mut self, env: &Subst, t: &Term) -> Result<Term> {
        let u = env.apply(t);
        if !u.is_ground() {
            let name = u.vars().first().map(|v| v.to_string()).unwrap_or_default();
            return Err(Error::UnboundVariable(name));
        }
        self.eng.reduce(&u)
    }

    fn cond(&mut self, a: &StratRef, b: &StratRef, c: &StratRef, env: &Subst, t: &Term, depth: u32) -> Result<ResultSet> {
        let first = self.ev(a, env, t, depth)?;
        if !first.terms.is_empty() {
            let_in(&first, |u| self.ev(b, env, u, depth))
        } else if first.bottom {
            Ok(ResultSet::bottom())
        } else {
            self.ev(c, env, t, depth)
        }
    }

    /// Union of `a` iterated any number of times, by saturation.
    fn star(&mut self, a: &StratRef, env: &Subst, t: &Term, depth: u32) -> Result<ResultSet> {
        let mut out = ResultSet::single(t.clone());
        let mut frontier = vec![t.clone()];
        while let Some(u) = frontier.pop() {
            if self.steps > self.budget {
                out.bottom = true;
                break;
            }
            let next = self.ev(a, env, &u, depth)?;
            out.bottom |= next.bottom;
            for v in next.terms {
                if out.terms.insert(v.clone()) {
                    frontier.push(v);
                }
            }
        }
        Ok(out)
    }

    /// Checks the condition of `rule` from fragment `from` and fires it.
    #[allow(clippy::too_many_arguments)]
    fn rule_cond(
        &mut self,
        rule: &Rule,
        from: usize,
        sub: &Subst,
        ctx: &Context,
        strats: &[StratRef],
        env: &Subst,
        depth: u32,
    ) -> Result<ResultSet> {
        let next = rule.cond[from..].iter().position(Cond::is_rewrite).map(|k| k + from);
        let eq_part = &rule.cond[from..next.unwrap_or(rule.cond.len())];
        let mut out = ResultSet::empty();
        for s2 in self.eng.check_eq_condition(eq_part, sub)? {
            match next {
                None => {
                    if let Some(u) = self.eng.fire(rule, &s2, ctx)? {
                        out.terms.insert(u);
                    }
                }
                Some(k) => {
                    let Cond::Rewrite(l, r) = &rule.cond[k] else { unreachable!() };
                    let start = self.ground(&s2, l)?;
                    let idx = rule.cond[..k].iter().filter(|c| c.is_rewrite()).count();
                    let res = self.ev(&strats[idx], env, &start, depth)?;
                    out.bottom |= res.bottom;
                    for u in &res.terms {
                        for s3 in match_top_from(self.module.sorts(), r, u, &s2) {
                            out.union(self.rule_cond(rule, k + 1, &s3, ctx, strats, env, depth)?);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn matchrew(
        &mut self,
        mode: crate::strategy::MatchMode,
        pattern: &Term,
        cond: &[Cond],
        subs: &[(Term, StratRef)],
        env: &Subst,
        t: &Term,
        depth: u32,
    ) -> Result<ResultSet> {
        let mut outer = env.clone();
        let mut full = Vec::new();
        for (v, _) in subs {
            if let Some(val) = env.get(v) {
                full.push(Cond::Eq(v.clone(), val.clone()));
                outer.unbind(v);
            }
        }
        let pat = outer.apply(pattern);
        full.extend(cond.iter().map(|c| c.map_terms(&|x| outer.apply(x))));
        let mut out = ResultSet::empty();
        for m in match_mode(self.module.sorts(), mode, &pat, t, &Subst::new()) {
            for s in self.eng.check_eq_condition(&full, &m.subst)? {
                let inner = env.extended(&s);
                let mut tables = Vec::new();
                for (v, strat) in subs {
                    let val = s.get(v).ok_or_else(|| Error::UnboundVariable(v.to_string()))?.clone();
                    let val = self.eng.reduce(&val)?;
                    let r = self.ev(strat, &inner, &val, depth)?;
                    out.bottom |= r.bottom;
                    tables.push(r.terms.into_iter().collect::<Vec<_>>());
                }
                if tables.iter().any(|col| col.is_empty()) {
                    continue;
                }
                let mut idx = vec![0usize; tables.len()];
                loop {
                    let mut s2 = s.clone();
                    for (k, (v, _)) in subs.iter().enumerate() {
                        s2.bind(v.clone(), tables[k][idx[k]].clone());
                    }
                    out.terms.insert(self.eng.reduce(&m.context.plug(&s2.apply(&pat)))?);
                    let mut k = 0;
                    while k < idx.len() {
                        idx[k] += 1;
                        if idx[k] < tables[k].len() {
                            break;
                        }
                        idx[k] = 0;
                        k += 1;
                    }
                    if k == idx.len() {
                        break;
                    }
                }
            }
        }
        Ok(out)
    }
}
