//! The strategy machine.
//!
//! A search is a tree of tasks holding processes. A process has a subject
//! term and a stack of pending strategy items; tasks delimit subsearches
//! (conditionals, `one`, calls, rewriting conditions, `matchrew`) and
//! hold what must happen with the solutions found inside them. Each task
//! keeps the set of (term, stack) pairs it has already seen, so that
//! looping paths are cut.
//!
//! Stacks are nodes of one shared tree, interned by (item, parent), so a
//! stack is identified by its node index.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;

use crate::eqeng::{Engine, RuleFilter};
use crate::error::{Error, Result};
use crate::matcher::{match_mode, match_top_from, Context, MatchResult};
use crate::module::{Cond, Module};
use crate::strategy::{Strat, StratRef};
use crate::subst::Subst;
use crate::term::{Symbol, Term};

/// Process scheduling policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// Round robin over all live processes (`srewrite`).
    Fair,
    /// Last in, first out (`dsrewrite`).
    DepthFirst,
}

#[derive(Clone)]
enum Item {
    Expr(StratRef),
    /// The iteration of the given body.
    Star(StratRef),
    /// `not` of the given body.
    Not(StratRef),
    Idle,
    Fail,
}

impl Item {
    fn key(&self) -> (u8, usize) {
        match self {
            Item::Expr(s) => (0, Arc::as_ptr(s) as usize),
            Item::Star(s) => (1, Arc::as_ptr(s) as usize),
            Item::Not(s) => (2, Arc::as_ptr(s) as usize),
            Item::Idle => (3, 0),
            Item::Fail => (4, 0),
        }
    }
}

type StackId = u32;
const EMPTY: StackId = 0;

struct Stacks {
    nodes: Vec<(Item, StackId)>,
    index: HashMap<(u8, usize, StackId), StackId>,
}

impl Stacks {
    fn new() -> Self {
        Stacks { nodes: vec![(Item::Idle, EMPTY)], index: HashMap::new() }
    }

    fn push(&mut self, item: Item, below: StackId) -> StackId {
        if matches!(item, Item::Idle) {
            return below;
        }
        let (tag, ptr) = item.key();
        let nodes = &mut self.nodes;
        *self.index.entry((tag, ptr, below)).or_insert_with(|| {
            nodes.push((item, below));
            (nodes.len() - 1) as StackId
        })
    }
}

type TaskId = usize;

struct RewriteCont {
    rule: usize,
    frag: usize,
    sub: Subst,
    ctx: Context,
    strats: Vec<StratRef>,
    cont: StackId,
}

struct SubtermCont {
    pattern: Term,
    ctx: Context,
    sub: Subst,
    vars: Vec<Term>,
    tables: Vec<Vec<Term>>,
    cont: StackId,
}

enum TaskKind {
    Root,
    Branch {
        pos: Item,
        neg: Item,
        start: Term,
        cont: StackId,
        success: bool,
    },
    One {
        cont: StackId,
    },
    Call {
        cont: StackId,
    },
    RewriteCond(Box<RewriteCont>),
    Subterm(Box<SubtermCont>),
    /// Rewrites one `matchrew` subterm; the parent is the `Subterm` task.
    SubtermPart {
        index: usize,
    },
}

struct Task {
    kind: TaskKind,
    parent: Option<TaskId>,
    env: Arc<Subst>,
    /// Live processes and child tasks.
    live: usize,
    /// Finished or cancelled.
    dead: bool,
    children: Vec<TaskId>,
    visited: HashSet<(Term, StackId)>,
    seen: HashSet<Term>,
}

struct ApplyState {
    rules: Vec<usize>,
    next_rule: usize,
    current: usize,
    matches: Vec<MatchResult>,
    next_match: usize,
    bindings: Vec<(String, Term)>,
    strats: Vec<StratRef>,
    top: bool,
}

struct CallState {
    tuple: Arc<Symbol>,
    call: Term,
    defs: Vec<usize>,
    next: usize,
}

struct MatchRewState {
    matches: Vec<MatchResult>,
    next: usize,
    pattern: Term,
    cond: Vec<Cond>,
    vars: Vec<Term>,
    strats: Vec<StratRef>,
}

enum ProcKind {
    Decompose,
    Apply(Box<ApplyState>),
    Call(Box<CallState>),
    MatchRew(Box<MatchRewState>),
}

struct Proc {
    task: TaskId,
    term: Term,
    stack: StackId,
    kind: ProcKind,
}

/// One `srewrite` or `dsrewrite` execution, producing solutions on demand.
pub struct Vm {
    module: Arc<Module>,
    schedule: Schedule,
    dedup: bool,
    stacks: Stacks,
    tasks: Vec<Task>,
    queue: VecDeque<Proc>,
    out: Vec<Proc>,
    solutions: VecDeque<Term>,
    states: u64,
    limit: u64,
    found: usize,
}

impl Vm {
    /// Prepares the execution of `strat` on the normal form of `term`.
    pub fn new(module: Arc<Module>, term: &Term, strat: StratRef, schedule: Schedule) -> Result<Vm> {
        let start = Engine::new(&module).reduce(term)?;
        let limit = module.limits().states;
        let mut vm = Vm {
            module,
            schedule,
            dedup: true,
            stacks: Stacks::new(),
            tasks: Vec::new(),
            queue: VecDeque::new(),
            out: Vec::new(),
            solutions: VecDeque::new(),
            states: 0,
            limit,
            found: 0,
        };
        vm.tasks.push(Task {
            kind: TaskKind::Root,
            parent: None,
            env: Arc::new(Subst::new()),
            live: 0,
            dead: false,
            children: Vec::new(),
            visited: HashSet::new(),
            seen: HashSet::new(),
        });
        let stack = vm.stacks.push(Item::Expr(strat), EMPTY);
        vm.spawn(0, start, stack);
        vm.flush();
        Ok(vm)
    }

    /// Reports every solution found, duplicates included.
    pub fn keep_duplicates(&mut self) {
        self.dedup = false;
    }

    /// Execution states visited so far.
    pub fn states(&self) -> u64 {
        self.states
    }

    /// Solutions returned so far.
    pub fn found(&self) -> usize {
        self.found
    }

    /// Runs until the next solution, or `None` once the search space is
    /// exhausted.
    pub fn next_solution(&mut self) -> Result<Option<Term>> {
        loop {
            if let Some(t) = self.solutions.pop_front() {
                self.found += 1;
                return Ok(Some(t));
            }
            let next = match self.schedule {
                Schedule::Fair => self.queue.pop_front(),
                Schedule::DepthFirst => self.queue.pop_back(),
            };
            let Some(p) = next else {
                return Ok(None);
            };
            self.run(p)?;
        }
    }

    /// Up to `bound` further solutions.
    pub fn take(&mut self, bound: Option<usize>) -> Result<Vec<Term>> {
        let mut out = Vec::new();
        while bound.is_none_or(|b| out.len() < b) {
            match self.next_solution()? {
                Some(t) => out.push(t),
                None => break,
            }
        }
        Ok(out)
    }

    fn flush(&mut self) {
        let out = std::mem::take(&mut self.out);
        match self.schedule {
            Schedule::Fair => self.queue.extend(out),
            Schedule::DepthFirst => self.queue.extend(out.into_iter().rev()),
        }
    }

    fn spawn_proc(&mut self, p: Proc) {
        self.tasks[p.task].live += 1;
        self.out.push(p);
    }

    fn spawn(&mut self, task: TaskId, term: Term, stack: StackId) {
        self.spawn_proc(Proc { task, term, stack, kind: ProcKind::Decompose });
    }

    fn new_task(&mut self, kind: TaskKind, parent: TaskId, env: Arc<Subst>) -> TaskId {
        let id = self.tasks.len();
        self.tasks.push(Task {
            kind,
            parent: Some(parent),
            env,
            live: 0,
            dead: false,
            children: Vec::new(),
            visited: HashSet::new(),
            seen: HashSet::new(),
        });
        self.tasks[parent].live += 1;
        self.tasks[parent].children.push(id);
        id
    }

    fn run(&mut self, p: Proc) -> Result<()> {
        let task = p.task;
        if self.tasks[task].dead {
            return Ok(());
        }
        let Proc { term, stack, kind, .. } = p;
        match kind {
            ProcKind::Decompose => self.decompose(task, term, stack)?,
            ProcKind::Apply(st) => self.apply_step(task, term, stack, st)?,
            ProcKind::Call(st) => self.call_step(task, term, stack, st)?,
            ProcKind::MatchRew(st) => self.matchrew_step(task, term, stack, st)?,
        }
        self.finish_process(task);
        self.flush();
        Ok(())
    }

    fn decompose(&mut self, task: TaskId, t: Term, stack: StackId) -> Result<()> {
        if !self.tasks[task].visited.insert((t.clone(), stack)) {
            return Ok(());
        }
        self.states += 1;
        if self.states > self.limit {
            return Err(Error::StateLimit(self.limit));
        }
        if stack == EMPTY {
            return self.solution(task, t);
        }
        let (item, rest) = self.stacks.nodes[stack as usize].clone();
        match item {
            Item::Idle => self.spawn(task, t, rest),
            Item::Fail => {}
            Item::Star(a) => {
                self.spawn(task, t.clone(), rest);
                let s = self.stacks.push(Item::Expr(a), stack);
                self.spawn(task, t, s);
            }
            Item::Not(a) => self.branch(task, t, Item::Expr(a), Item::Fail, Item::Idle, rest),
            Item::Expr(s) => self.expr(task, t, &s, rest)?,
        }
        Ok(())
    }

    fn branch(&mut self, task: TaskId, t: Term, cond: Item, pos: Item, neg: Item, rest: StackId) {
        let env = self.tasks[task].env.clone();
        let kind = TaskKind::Branch { pos, neg, start: t.clone(), cont: rest, success: false };
        let child = self.new_task(kind, task, env);
        let s = self.stacks.push(cond, EMPTY);
        self.spawn(child, t, s);
    }

    fn expr(&mut self, task: TaskId, t: Term, s: &StratRef, rest: StackId) -> Result<()> {
        let module = self.module.clone();
        let mut eng = Engine::new(&module);
        let env = self.tasks[task].env.clone();
        match &**s {
            Strat::Idle => self.spawn(task, t, rest),
            Strat::Fail => {}
            Strat::All => {
                for (u, _) in eng.one_step_rewrites(RuleFilter::All, &Subst::new(), &t, false)? {
                    self.spawn(task, u, rest);
                }
            }
            Strat::Rule(r) => {
                let rules: Vec<usize> = module
                    .rules
                    .iter()
                    .enumerate()
                    .filter(|(_, rl)| rl.label.as_deref() == Some(r.label.as_str()) && rl.rewrite_fragments() == r.strats.len())
                    .map(|(i, _)| i)
                    .collect();
                if rules.is_empty() {
                    return Ok(());
                }
                let mut bindings = Vec::with_capacity(r.subst.len());
                for (name, v) in &r.subst {
                    bindings.push((name.clone(), ground(&mut eng, &env, v)?));
                }
                let st = ApplyState {
                    rules,
                    next_rule: 0,
                    current: 0,
                    matches: Vec::new(),
                    next_match: 0,
                    bindings,
                    strats: r.strats.clone(),
                    top: r.top,
                };
                self.spawn_proc(Proc { task, term: t, stack: rest, kind: ProcKind::Apply(Box::new(st)) });
            }
            Strat::Test { mode, pattern, cond } => {
                let pat = env.apply(pattern);
                let cond: Vec<Cond> = cond.iter().map(|c| c.map_terms(&|x| env.apply(x))).collect();
                let mut ok = false;
                for m in match_mode(module.sorts(), *mode, &pat, &t, &Subst::new()) {
                    if !eng.check_eq_condition(&cond, &m.subst)?.is_empty() {
                        ok = true;
                        break;
                    }
                }
                if ok {
                    self.spawn(task, t, rest);
                }
            }
            Strat::Seq(a, b) => {
                let s1 = self.stacks.push(Item::Expr(b.clone()), rest);
                let s2 = self.stacks.push(Item::Expr(a.clone()), s1);
                self.spawn(task, t, s2);
            }
            Strat::Alt(a, b) => {
                let s1 = self.stacks.push(Item::Expr(a.clone()), rest);
                let s2 = self.stacks.push(Item::Expr(b.clone()), rest);
                self.spawn(task, t.clone(), s1);
                self.spawn(task, t, s2);
            }
            Strat::Star(a) => {
                self.spawn(task, t.clone(), rest);
                let s1 = self.stacks.push(Item::Star(a.clone()), rest);
                let s2 = self.stacks.push(Item::Expr(a.clone()), s1);
                self.spawn(task, t, s2);
            }
            Strat::Plus(a) => {
                let s1 = self.stacks.push(Item::Star(a.clone()), rest);
                let s2 = self.stacks.push(Item::Expr(a.clone()), s1);
                self.spawn(task, t, s2);
            }
            Strat::Bang(a) => {
                let s1 = self.stacks.push(Item::Not(a.clone()), rest);
                let s2 = self.stacks.push(Item::Star(a.clone()), s1);
                self.spawn(task, t, s2);
            }
            Strat::Cond(a, b, c) => self.branch(task, t, Item::Expr(a.clone()), Item::Expr(b.clone()), Item::Expr(c.clone()), rest),
            Strat::OrElse(a, b) => self.branch(task, t, Item::Expr(a.clone()), Item::Idle, Item::Expr(b.clone()), rest),
            Strat::Not(a) => self.branch(task, t, Item::Expr(a.clone()), Item::Fail, Item::Idle, rest),
            Strat::Try(a) => self.branch(task, t, Item::Expr(a.clone()), Item::Idle, Item::Idle, rest),
            Strat::TestOp(a) => self.branch(task, t, Item::Not(a.clone()), Item::Fail, Item::Idle, rest),
            Strat::One(a) => {
                let child = self.new_task(TaskKind::One { cont: rest }, task, env);
                let s1 = self.stacks.push(Item::Expr(a.clone()), EMPTY);
                self.spawn(child, t, s1);
            }
            Strat::MatchRew { mode, pattern, cond, subs } => {
                let vars: Vec<Term> = subs.iter().map(|(v, _)| v.clone()).collect();
                // Outer bindings of the rewritten variables become equations,
                // so that the variables stay in the pattern.
                let mut outer = (*env).clone();
                let mut full_cond = Vec::new();
                for v in &vars {
                    if let Some(val) = env.get(v) {
                        full_cond.push(Cond::Eq(v.clone(), val.clone()));
                        outer.unbind(v);
                    }
                }
                let pat = outer.apply(pattern);
                full_cond.extend(cond.iter().map(|c| c.map_terms(&|x| outer.apply(x))));
                let matches = match_mode(module.sorts(), *mode, &pat, &t, &Subst::new());
                if matches.is_empty() {
                    return Ok(());
                }
                let st = MatchRewState {
                    matches,
                    next: 0,
                    pattern: pat,
                    cond: full_cond,
                    vars,
                    strats: subs.iter().map(|(_, s)| s.clone()).collect(),
                };
                self.spawn_proc(Proc { task, term: t, stack: rest, kind: ProcKind::MatchRew(Box::new(st)) });
            }
            Strat::Call { name, args } => {
                let defs: Vec<usize> = module
                    .strat_defs
                    .iter()
                    .enumerate()
                    .filter(|(_, d)| d.name == *name && d.params.len() == args.len())
                    .map(|(i, _)| i)
                    .collect();
                // Parameterless unconditional definitions run in place, which
                // lets the visited set see through tail recursion.
                if args.is_empty() && env.is_empty() && defs.iter().all(|&d| module.strat_defs[d].cond.is_empty()) {
                    for d in defs {
                        let s1 = self.stacks.push(Item::Expr(module.strat_defs[d].body.clone()), rest);
                        self.spawn(task, t.clone(), s1);
                    }
                    return Ok(());
                }
                let decl = module.strat_decl(name, args.len()).ok_or_else(|| Error::UnknownStrategy(name.clone()))?;
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(ground(&mut eng, &env, a)?);
                }
                let st = CallState { tuple: decl.tuple.clone(), call: Term::app(&decl.tuple, vals), defs, next: 0 };
                self.spawn_proc(Proc { task, term: t, stack: rest, kind: ProcKind::Call(Box::new(st)) });
            }
        }
        Ok(())
    }

    fn apply_step(&mut self, task: TaskId, t: Term, stack: StackId, mut st: Box<ApplyState>) -> Result<()> {
        let module = self.module.clone();
        if st.next_match >= st.matches.len() {
            // Next rule with some match.
            st.matches.clear();
            st.next_match = 0;
            let eng = Engine::new(&module);
            while st.matches.is_empty() && st.next_rule < st.rules.len() {
                let ri = st.rules[st.next_rule];
                st.next_rule += 1;
                let rule = &module.rules[ri];
                let mut init = Subst::new();
                for (name, v) in &st.bindings {
                    if let Some(var) = rule.var_named(name) {
                        init.bind(var, v.clone());
                    }
                }
                st.current = ri;
                st.matches = eng.rule_matches(rule, &init, &t, st.top);
            }
            if st.matches.is_empty() {
                return Ok(());
            }
        }
        let m = st.matches[st.next_match].clone();
        st.next_match += 1;
        self.advance_condition(task, st.current, 0, vec![m.subst], &m.context, &st.strats, stack)?;
        if st.next_match < st.matches.len() || st.next_rule < st.rules.len() {
            self.spawn_proc(Proc { task, term: t, stack, kind: ProcKind::Apply(st) });
        }
        Ok(())
    }

    /// Continues checking a rule condition from fragment `from` for each
    /// substitution. Rewriting fragments open a task running their
    /// strategy; when none remain, the rule fires into `owner`.
    #[allow(clippy::too_many_arguments)]
    fn advance_condition(
        &mut self,
        owner: TaskId,
        ri: usize,
        from: usize,
        subs: Vec<Subst>,
        ctx: &Context,
        strats: &[StratRef],
        cont: StackId,
    ) -> Result<()> {
        let module = self.module.clone();
        let mut eng = Engine::new(&module);
        let rule = &module.rules[ri];
        let next = rule.cond[from..].iter().position(Cond::is_rewrite).map(|k| k + from);
        let eq_part = &rule.cond[from..next.unwrap_or(rule.cond.len())];
        for s in subs {
            for s2 in eng.check_eq_condition(eq_part, &s)? {
                match next {
                    None => {
                        if let Some(u) = eng.fire(rule, &s2, ctx)? {
                            self.spawn(owner, u, cont);
                        }
                    }
                    Some(k) => {
                        let Cond::Rewrite(l, _) = &rule.cond[k] else { unreachable!() };
                        let start = ground(&mut eng, &s2, l)?;
                        let idx = rule.cond[..k].iter().filter(|c| c.is_rewrite()).count();
                        let env = self.tasks[owner].env.clone();
                        let rc = RewriteCont { rule: ri, frag: k, sub: s2, ctx: ctx.clone(), strats: strats.to_vec(), cont };
                        let child = self.new_task(TaskKind::RewriteCond(Box::new(rc)), owner, env);
                        let s1 = self.stacks.push(Item::Expr(strats[idx].clone()), EMPTY);
                        self.spawn(child, start, s1);
                    }
                }
            }
        }
        Ok(())
    }

    fn call_step(&mut self, task: TaskId, t: Term, stack: StackId, mut st: Box<CallState>) -> Result<()> {
        let module = self.module.clone();
        let mut eng = Engine::new(&module);
        let Some(&di) = st.defs.get(st.next) else {
            return Ok(());
        };
        st.next += 1;
        let def = &module.strat_defs[di];
        let lhs = Term::app(&st.tuple, def.params.clone());
        for m in match_top_from(module.sorts(), &lhs, &st.call, &Subst::new()) {
            for s in eng.check_eq_condition(&def.cond, &m)? {
                let child = self.new_task(TaskKind::Call { cont: stack }, task, Arc::new(s));
                let s1 = self.stacks.push(Item::Expr(def.body.clone()), EMPTY);
                self.spawn(child, t.clone(), s1);
            }
        }
        if st.next < st.defs.len() {
            self.spawn_proc(Proc { task, term: t, stack, kind: ProcKind::Call(st) });
        }
        Ok(())
    }

    fn matchrew_step(&mut self, task: TaskId, t: Term, stack: StackId, mut st: Box<MatchRewState>) -> Result<()> {
        let module = self.module.clone();
        let mut eng = Engine::new(&module);
        let Some(m) = st.matches.get(st.next).cloned() else {
            return Ok(());
        };
        st.next += 1;
        let env = self.tasks[task].env.clone();
        for s in eng.check_eq_condition(&st.cond, &m.subst)? {
            if st.vars.is_empty() {
                let u = eng.reduce(&m.context.plug(&s.apply(&st.pattern)))?;
                self.spawn(task, u, stack);
                continue;
            }
            let inner = Arc::new(env.extended(&s));
            let cont = SubtermCont {
                pattern: st.pattern.clone(),
                ctx: m.context.clone(),
                sub: s.clone(),
                vars: st.vars.clone(),
                tables: vec![Vec::new(); st.vars.len()],
                cont: stack,
            };
            let holder = self.new_task(TaskKind::Subterm(Box::new(cont)), task, inner.clone());
            for (i, (v, strat)) in st.vars.iter().zip(&st.strats).enumerate() {
                let sub_t = eng.reduce(s.get(v).ok_or_else(|| Error::UnboundVariable(v.to_string()))?)?;
                let part = self.new_task(TaskKind::SubtermPart { index: i }, holder, inner.clone());
                let s1 = self.stacks.push(Item::Expr(strat.clone()), EMPTY);
                self.spawn(part, sub_t, s1);
            }
        }
        if st.next < st.matches.len() {
            self.spawn_proc(Proc { task, term: t, stack, kind: ProcKind::MatchRew(st) });
        }
        Ok(())
    }

    /// A process of `task` reached the bottom of its stack with `r`.
    fn solution(&mut self, task: TaskId, r: Term) -> Result<()> {
        let dedup = self.dedup || !matches!(self.tasks[task].kind, TaskKind::Root);
        if dedup && !self.tasks[task].seen.insert(r.clone()) {
            return Ok(());
        }
        let parent = self.tasks[task].parent;
        match &mut self.tasks[task].kind {
            TaskKind::Root => self.solutions.push_back(r),
            TaskKind::Branch { pos, cont, success, .. } => {
                *success = true;
                let (pos, cont) = (pos.clone(), *cont);
                if !matches!(pos, Item::Fail) {
                    let s = self.stacks.push(pos, cont);
                    self.spawn(parent.unwrap(), r, s);
                }
            }
            TaskKind::One { cont } => {
                let cont = *cont;
                let parent = parent.unwrap();
                self.spawn(parent, r, cont);
                self.kill(task);
                self.release(parent);
            }
            TaskKind::Call { cont } => {
                let cont = *cont;
                self.spawn(parent.unwrap(), r, cont);
            }
            TaskKind::RewriteCond(rc) => {
                let module = self.module.clone();
                let rule = &module.rules[rc.rule];
                let Cond::Rewrite(_, v) = &rule.cond[rc.frag] else { unreachable!() };
                let pat = rc.sub.apply(v);
                let subs = match_top_from(module.sorts(), &pat, &r, &rc.sub);
                let (ri, frag, ctx, strats, cont) = (rc.rule, rc.frag, rc.ctx.clone(), rc.strats.clone(), rc.cont);
                self.advance_condition(parent.unwrap(), ri, frag + 1, subs, &ctx, &strats, cont)?;
            }
            TaskKind::SubtermPart { index } => {
                let index = *index;
                self.subterm_result(parent.unwrap(), index, r)?;
            }
            TaskKind::Subterm(_) => unreachable!("subterm tasks hold no processes"),
        }
        Ok(())
    }

    /// Records a result for one `matchrew` subterm and emits every new
    /// combination with the results already known for the others.
    fn subterm_result(&mut self, holder: TaskId, index: usize, r: Term) -> Result<()> {
        let module = self.module.clone();
        let mut eng = Engine::new(&module);
        let outer = self.tasks[holder].parent.unwrap();
        let TaskKind::Subterm(sc) = &mut self.tasks[holder].kind else { unreachable!() };
        sc.tables[index].push(r.clone());
        let lists: Vec<Vec<Term>> =
            sc.tables.iter().enumerate().map(|(j, tb)| if j == index { vec![r.clone()] } else { tb.clone() }).collect();
        if lists.iter().any(Vec::is_empty) {
            return Ok(());
        }
        let (pattern, ctx, sub, vars, cont) = (sc.pattern.clone(), sc.ctx.clone(), sc.sub.clone(), sc.vars.clone(), sc.cont);
        let mut pick = vec![0usize; lists.len()];
        loop {
            let mut s = sub.clone();
            for (j, v) in vars.iter().enumerate() {
                s.bind(v.clone(), lists[j][pick[j]].clone());
            }
            let u = eng.reduce(&ctx.plug(&s.apply(&pattern)))?;
            self.spawn(outer, u, cont);
            // Odometer over the result lists.
            let mut j = 0;
            loop {
                if j == pick.len() {
                    return Ok(());
                }
                pick[j] += 1;
                if pick[j] < lists[j].len() {
                    break;
                }
                pick[j] = 0;
                j += 1;
            }
        }
    }

    /// Cancels a task and everything below it.
    fn kill(&mut self, task: TaskId) {
        let mut todo = vec![task];
        while let Some(id) = todo.pop() {
            let t = &mut self.tasks[id];
            t.dead = true;
            t.visited = HashSet::new();
            t.seen = HashSet::new();
            todo.append(&mut t.children);
        }
    }

    fn finish_process(&mut self, task: TaskId) {
        if self.tasks[task].dead {
            return;
        }
        self.tasks[task].live -= 1;
        if self.tasks[task].live == 0 {
            self.exhausted(task);
        }
    }

    /// A child of `task` is gone.
    fn release(&mut self, task: TaskId) {
        if self.tasks[task].dead {
            return;
        }
        self.tasks[task].live -= 1;
        if self.tasks[task].live == 0 {
            self.exhausted(task);
        }
    }

    /// Handles tasks running out of work, walking up while parents run
    /// out too.
    fn exhausted(&mut self, task: TaskId) {
        let mut cur = task;
        loop {
            let t = &mut self.tasks[cur];
            if t.dead {
                return;
            }
            t.dead = true;
            t.visited = HashSet::new();
            t.seen = HashSet::new();
            t.children = Vec::new();
            let parent = t.parent;
            // A subterm part without results is not cut short: its
            // siblings may still fail to terminate.
            if let TaskKind::Branch { success: false, neg, start, cont, .. } = &t.kind {
                let (neg, start, cont) = (neg.clone(), start.clone(), *cont);
                if !matches!(neg, Item::Fail) {
                    let s = self.stacks.push(neg, cont);
                    self.spawn(parent.unwrap(), start, s);
                }
            }
            let Some(p) = parent else {
                return;
            };
            if self.tasks[p].dead {
                return;
            }
            self.tasks[p].live -= 1;
            if self.tasks[p].live > 0 {
                return;
            }
            cur = p;
        }
    }
}

fn ground(eng: &mut Engine<'_>, sub: &Subst, t: &Term) -> Result<Term> {
    let u = sub.apply(t);
    if !u.is_ground() {
        let name = u.vars().first().map(|v| v.to_string()).unwrap_or_default();
        return Err(Error::UnboundVariable(name));
    }
    eng.reduce(&u)
}

/// All solutions of a fair execution, up to `bound`.
pub fn srewrite(module: &Arc<Module>, t: &Term, s: &StratRef, bound: Option<usize>) -> Result<Vec<Term>> {
    Vm::new(module.clone(), t, s.clone(), Schedule::Fair)?.take(bound)
}

/// All solutions of a depth-first execution, up to `bound`.
pub fn dsrewrite(module: &Arc<Module>, t: &Term, s: &StratRef, bound: Option<usize>) -> Result<Vec<Term>> {
    Vm::new(module.clone(), t, s.clone(), Schedule::DepthFirst)?.take(bound)
}
