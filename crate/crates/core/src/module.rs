//! Elaborated modules: the flattened signature plus equations, rules and
//! strategy declarations and definitions.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use crate::sort::{SortId, SortTable};
use crate::strategy::StratRef;
use crate::term::{mixfix_items, Builtin, MixItem, Symbol, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModuleKind {
    Functional,
    System,
    Strategy,
}

impl ModuleKind {
    pub fn keywords(self) -> (&'static str, &'static str) {
        match self {
            ModuleKind::Functional => ("fmod", "endfm"),
            ModuleKind::System => ("mod", "endm"),
            ModuleKind::Strategy => ("smod", "endsm"),
        }
    }
}

/// One condition fragment.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Cond {
    /// A boolean term that must reduce to `true`.
    Bool(Term),
    Eq(Term, Term),
    /// `pattern := term`
    Match(Term, Term),
    /// `t : s`
    Sort(Term, SortId, String),
    /// `t => pattern`
    Rewrite(Term, Term),
}

impl Cond {
    pub fn is_rewrite(&self) -> bool {
        matches!(self, Cond::Rewrite(..))
    }

    pub fn terms(&self) -> Vec<&Term> {
        match self {
            Cond::Bool(t) | Cond::Sort(t, ..) => vec![t],
            Cond::Eq(a, b) | Cond::Match(a, b) | Cond::Rewrite(a, b) => vec![a, b],
        }
    }

    pub fn map_terms(&self, f: &dyn Fn(&Term) -> Term) -> Cond {
        match self {
            Cond::Bool(t) => Cond::Bool(f(t)),
            Cond::Eq(a, b) => Cond::Eq(f(a), f(b)),
            Cond::Match(a, b) => Cond::Match(f(a), f(b)),
            Cond::Sort(t, s, n) => Cond::Sort(f(t), *s, n.clone()),
            Cond::Rewrite(a, b) => Cond::Rewrite(f(a), f(b)),
        }
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cond::Bool(t) => write!(f, "{t}"),
            Cond::Eq(a, b) => write!(f, "{a} = {b}"),
            Cond::Match(a, b) => write!(f, "{a} := {b}"),
            Cond::Sort(t, _, n) => write!(f, "{t} : {n}"),
            Cond::Rewrite(a, b) => write!(f, "{a} => {b}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Equation {
    pub lhs: Term,
    pub rhs: Term,
    pub cond: Vec<Cond>,
    pub owise: bool,
}

#[derive(Clone, Debug)]
pub struct Rule {
    pub label: Option<String>,
    pub lhs: Term,
    pub rhs: Term,
    pub cond: Vec<Cond>,
    pub nonexec: bool,
}

impl Rule {
    pub fn rewrite_fragments(&self) -> usize {
        self.cond.iter().filter(|c| c.is_rewrite()).count()
    }

    /// Variables of the rule, looked up by name for `[x <- t]` bindings.
    pub fn var_named(&self, name: &str) -> Option<Term> {
        let mut vars = self.lhs.vars();
        self.rhs.collect_vars(&mut vars);
        for c in &self.cond {
            for t in c.terms() {
                t.collect_vars(&mut vars);
            }
        }
        vars.into_iter().find(|v| v.var_name() == Some(name))
    }
}

#[derive(Clone, Debug)]
pub struct StratDecl {
    pub name: String,
    pub args: Vec<SortId>,
    pub subject: SortId,
    /// Hidden tuple symbol used to match call arguments against
    /// definition parameters.
    pub tuple: Arc<Symbol>,
}

#[derive(Clone, Debug)]
pub struct StratDef {
    pub name: String,
    pub params: Vec<Term>,
    pub cond: Vec<Cond>,
    pub body: StratRef,
}

/// Operator table of a module.
#[derive(Debug)]
pub struct Signature {
    pub sorts: Arc<SortTable>,
    pub symbols: Vec<Arc<Symbol>>,
    by_name: HashMap<String, Vec<Arc<Symbol>>>,
    builtins: HashMap<Builtin, Arc<Symbol>>,
    /// Token shape of every operator with arguments: its mixfix items, or
    /// `f ( _ , … , _ )` for prefix notation.
    pub(crate) shapes: Vec<(Arc<Symbol>, Vec<MixItem>)>,
}

fn shape(sym: &Symbol) -> Vec<MixItem> {
    if let Some(items) = mixfix_items(&sym.name, sym.arity) {
        return items;
    }
    let mut items = vec![MixItem::Tok(sym.name.clone()), MixItem::Tok("(".into())];
    for i in 0..sym.arity {
        if i > 0 {
            items.push(MixItem::Tok(",".into()));
        }
        items.push(MixItem::Hole);
    }
    items.push(MixItem::Tok(")".into()));
    items
}

impl Signature {
    pub fn new(sorts: Arc<SortTable>, symbols: Vec<Arc<Symbol>>) -> Signature {
        let mut by_name: HashMap<String, Vec<Arc<Symbol>>> = HashMap::new();
        let mut builtins = HashMap::new();
        let mut shapes = Vec::new();
        for s in &symbols {
            if s.arity > 0 {
                shapes.push((s.clone(), shape(s)));
            }
            by_name.entry(s.name.clone()).or_default().push(s.clone());
            if let Some(b) = s.builtin {
                builtins.entry(b).or_insert_with(|| s.clone());
            }
        }
        Signature { sorts, symbols, by_name, builtins, shapes }
    }

    pub fn named(&self, name: &str) -> &[Arc<Symbol>] {
        self.by_name.get(name).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// The unique operator with this name and arity, if there is one.
    pub fn op(&self, name: &str, arity: usize) -> Option<&Arc<Symbol>> {
        let mut it = self.named(name).iter().filter(|s| s.arity == arity);
        let first = it.next()?;
        if it.next().is_some() {
            None
        } else {
            Some(first)
        }
    }

    pub fn builtin(&self, b: Builtin) -> &Arc<Symbol> {
        &self.builtins[&b]
    }

    pub fn true_term(&self) -> Term {
        Term::constant(self.builtin(Builtin::True))
    }

    pub fn false_term(&self) -> Term {
        Term::constant(self.builtin(Builtin::False))
    }

    pub fn bool_term(&self, b: bool) -> Term {
        if b {
            self.true_term()
        } else {
            self.false_term()
        }
    }
}

/// Resource limits shared by the engines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Equational steps per reduction.
    pub eq_steps: u64,
    /// Rule states per command.
    pub states: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { eq_steps: 1_000_000, states: 100_000 }
    }
}

#[derive(Debug)]
pub struct Module {
    pub name: String,
    pub kind: ModuleKind,
    pub sig: Signature,
    /// Variables declared in this module, visible to commands run in it.
    pub vars: HashMap<String, SortId>,
    pub eqs: Vec<Equation>,
    pub rules: Vec<Rule>,
    pub strat_decls: Vec<StratDecl>,
    pub strat_defs: Vec<StratDef>,
    eq_index: HashMap<u32, Vec<usize>>,
    pub(crate) nf_cache: Mutex<HashMap<Term, Term>>,
    rewrites: AtomicU64,
    limits: Mutex<Limits>,
}

impl Module {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: String,
        kind: ModuleKind,
        sig: Signature,
        vars: HashMap<String, SortId>,
        eqs: Vec<Equation>,
        rules: Vec<Rule>,
        strat_decls: Vec<StratDecl>,
        strat_defs: Vec<StratDef>,
    ) -> Module {
        let mut eq_index: HashMap<u32, Vec<usize>> = HashMap::new();
        // Non-owise equations first, each group in declaration order.
        let mut order: Vec<usize> = (0..eqs.len()).filter(|&i| !eqs[i].owise).collect();
        order.extend((0..eqs.len()).filter(|&i| eqs[i].owise));
        for i in order {
            let key = eqs[i].lhs.symbol().map(|s| s.id).unwrap_or(0);
            eq_index.entry(key).or_default().push(i);
        }
        Module {
            name,
            kind,
            sig,
            vars,
            eqs,
            rules,
            strat_decls,
            strat_defs,
            eq_index,
            nf_cache: Mutex::new(HashMap::new()),
            rewrites: AtomicU64::new(0),
            limits: Mutex::new(Limits::default()),
        }
    }

    pub fn sorts(&self) -> &SortTable {
        &self.sig.sorts
    }

    /// Equations whose left-hand side has `sym` on top, non-owise first.
    pub fn equations_for(&self, sym: &Symbol) -> &[usize] {
        self.eq_index.get(&sym.id).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn rules_labeled<'a>(&'a self, label: &'a str) -> impl Iterator<Item = (usize, &'a Rule)> + 'a {
        self.rules.iter().enumerate().filter(move |(_, r)| r.label.as_deref() == Some(label))
    }

    pub fn has_label(&self, label: &str) -> bool {
        self.rules.iter().any(|r| r.label.as_deref() == Some(label))
    }

    pub fn strat_decl(&self, name: &str, arity: usize) -> Option<&StratDecl> {
        self.strat_decls.iter().find(|d| d.name == name && d.args.len() == arity)
    }

    pub fn defs_for<'a>(&'a self, name: &'a str, arity: usize) -> impl Iterator<Item = &'a StratDef> + 'a {
        self.strat_defs.iter().filter(move |d| d.name == name && d.params.len() == arity)
    }

    pub fn limits(&self) -> Limits {
        *self.limits.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn set_limits(&self, limits: Limits) {
        *self.limits.lock().unwrap_or_else(|e| e.into_inner()) = limits;
    }

    pub fn rewrites(&self) -> u64 {
        self.rewrites.load(Ordering::Relaxed)
    }

    pub fn count_rewrites(&self, n: u64) {
        self.rewrites.fetch_add(n, Ordering::Relaxed);
    }

    pub fn sort_name(&self, s: SortId) -> &str {
        self.sig.sorts.name(s)
    }
}
