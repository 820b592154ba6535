//! Hash-consed terms kept in canonical form modulo associativity,
//! commutativity and identity.
//!
//! Every constructor goes through a global table, so two canonical terms
//! are equal modulo the structural axioms exactly when they are the same
//! allocation. Equality, hashing and identity are therefore pointer-based.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicU32, Ordering as AtomicOrdering};
use std::sync::{Arc, LazyLock, Mutex, OnceLock, Weak};

use crate::sort::{SortId, SortTable};

/// Operations with a built-in evaluation or sort rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Builtin {
    True,
    False,
    Equal,
    NotEqual,
    And,
    AndThen,
    Or,
    OrElse,
    Not,
    IfThenElse,
    Succ,
    Neg,
    Add,
    Sub,
    Mul,
    Quo,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    /// Hidden tuple used to match strategy call arguments.
    Tuple,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpDecl {
    pub args: Vec<SortId>,
    pub result: SortId,
}

static NEXT_SYMBOL: AtomicU32 = AtomicU32::new(1);

/// An operator of one module: a name, an arity and a kind, possibly with
/// several subsort-overloaded declarations.
pub struct Symbol {
    pub id: u32,
    pub name: String,
    pub arity: usize,
    pub decls: Vec<OpDecl>,
    pub assoc: bool,
    pub comm: bool,
    pub ctor: bool,
    pub prec: u32,
    pub builtin: Option<Builtin>,
    pub sorts: Arc<SortTable>,
    identity: OnceLock<Term>,
}

impl Symbol {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        arity: usize,
        decls: Vec<OpDecl>,
        assoc: bool,
        comm: bool,
        ctor: bool,
        prec: Option<u32>,
        builtin: Option<Builtin>,
        sorts: Arc<SortTable>,
    ) -> Arc<Symbol> {
        let prec = prec.unwrap_or_else(|| default_prec(name, arity));
        Arc::new(Symbol {
            id: NEXT_SYMBOL.fetch_add(1, AtomicOrdering::Relaxed),
            name: name.to_string(),
            arity,
            decls,
            assoc,
            comm,
            ctor,
            prec,
            builtin,
            sorts,
            identity: OnceLock::new(),
        })
    }

    pub fn identity(&self) -> Option<&Term> {
        self.identity.get()
    }

    /// Sets the identity element; only the first call has an effect.
    pub fn set_identity(&self, e: Term) {
        let _ = self.identity.set(e);
    }

    /// Result sort of the first declaration, used to name the kind.
    pub fn range(&self) -> SortId {
        self.decls.first().map(|d| d.result).unwrap_or(SortId::BOOL)
    }

    /// Mixfix shape of the operator name, when the number of underscores
    /// agrees with the arity.
    pub fn mixfix(&self) -> Option<Vec<MixItem>> {
        mixfix_items(&self.name, self.arity)
    }

    /// Least sort for the given argument sorts (non-flattened arity).
    pub fn result_sort(&self, args: &[SortId]) -> SortId {
        let st = &self.sorts;
        match self.builtin {
            Some(Builtin::Equal) | Some(Builtin::NotEqual) => return SortId::BOOL,
            Some(Builtin::IfThenElse) if args.len() == 3 => {
                return if st.leq(args[0], SortId::BOOL) { st.join(args[1], args[2]) } else { st.kind_sort(args[1]) };
            }
            Some(Builtin::Tuple) => return SortId::TUPLE,
            _ => {}
        }
        let mut best: Option<SortId> = None;
        for d in &self.decls {
            if d.args.len() == args.len() && d.args.iter().zip(args).all(|(&ds, &a)| st.leq(a, ds)) {
                best = Some(match best {
                    Some(b) if st.leq(b, d.result) => b,
                    _ => d.result,
                });
            }
        }
        best.unwrap_or_else(|| st.kind_sort(self.range()))
    }

    /// True when every argument lies in the kind the operator expects.
    pub fn kinds_fit(&self, args: &[SortId]) -> bool {
        let st = &self.sorts;
        match self.builtin {
            Some(Builtin::Equal) | Some(Builtin::NotEqual) | Some(Builtin::Tuple) => return true,
            Some(Builtin::IfThenElse) => {
                return args.len() == 3 && st.same_kind(args[0], SortId::BOOL) && st.same_kind(args[1], args[2]);
            }
            _ => {}
        }
        self.decls.iter().any(|d| d.args.len() == args.len() && d.args.iter().zip(args).all(|(&ds, &a)| st.same_kind(a, ds)))
    }
}

impl PartialEq for Symbol {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for Symbol {}

impl Hash for Symbol {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id.hash(state);
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}#{}", self.name, self.arity, self.id)
    }
}

pub fn default_prec(name: &str, arity: usize) -> u32 {
    match mixfix_items(name, arity) {
        Some(items) if matches!(items.first(), Some(MixItem::Hole)) || matches!(items.last(), Some(MixItem::Hole)) => 41,
        _ => 0,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MixItem {
    Hole,
    Tok(String),
}

/// Splits an operator name such as `if_then_else_fi` or `[_,_,_]` into
/// tokens and argument holes.
pub fn mixfix_items(name: &str, arity: usize) -> Option<Vec<MixItem>> {
    if !name.contains('_') || name.matches('_').count() != arity {
        return None;
    }
    let mut items = Vec::new();
    let mut cur = String::new();
    let flush = |cur: &mut String, items: &mut Vec<MixItem>| {
        if !cur.is_empty() {
            for piece in crate::lexer::split_special(cur) {
                items.push(MixItem::Tok(piece));
            }
            cur.clear();
        }
    };
    for c in name.chars() {
        if c == '_' {
            flush(&mut cur, &mut items);
            items.push(MixItem::Hole);
        } else if c.is_whitespace() {
            flush(&mut cur, &mut items);
        } else {
            cur.push(c);
        }
    }
    flush(&mut cur, &mut items);
    Some(items)
}

pub enum Head {
    Var(Arc<str>, SortId),
    Int(i64),
    Qid(Arc<str>),
    App(Arc<Symbol>),
}

pub struct Node {
    head: Head,
    args: Vec<Term>,
    sort: SortId,
    hash: u64,
    ground: bool,
    size: u32,
}

/// A reference to a canonical, hash-consed term.
#[derive(Clone)]
pub struct Term(Arc<Node>);

struct Table {
    buckets: HashMap<u64, Vec<Weak<Node>>>,
    live_hint: usize,
    sweep_at: usize,
}

static TABLE: LazyLock<Mutex<Table>> = LazyLock::new(|| Mutex::new(Table { buckets: HashMap::new(), live_hint: 0, sweep_at: 1 << 16 }));

fn mix(h: u64, v: u64) -> u64 {
    (h ^ v.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(h << 6).wrapping_add(h >> 2)).wrapping_mul(0xff51_afd7_ed55_8ccd)
}

fn str_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

fn same_shape(node: &Node, head: &Head, args: &[Term]) -> bool {
    let heads = match (&node.head, head) {
        (Head::Var(a, s), Head::Var(b, t)) => a == b && s == t,
        (Head::Int(a), Head::Int(b)) => a == b,
        (Head::Qid(a), Head::Qid(b)) => a == b,
        (Head::App(f), Head::App(g)) => Arc::ptr_eq(f, g),
        _ => false,
    };
    heads && node.args.len() == args.len() && node.args.iter().zip(args).all(|(a, b)| a == b)
}

fn intern(head: Head, args: Vec<Term>, sort: SortId) -> Term {
    let mut hash = match &head {
        Head::Var(n, s) => mix(mix(1, str_hash(n)), s.0 as u64),
        Head::Int(v) => mix(2, *v as u64),
        Head::Qid(n) => mix(3, str_hash(n)),
        Head::App(f) => mix(4, f.id as u64),
    };
    for a in &args {
        hash = mix(hash, a.0.hash);
    }
    let mut table = TABLE.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(bucket) = table.buckets.get_mut(&hash) {
        let mut found = None;
        bucket.retain(|w| match w.upgrade() {
            Some(n) => {
                if found.is_none() && same_shape(&n, &head, &args) {
                    found = Some(n);
                }
                true
            }
            None => false,
        });
        if let Some(n) = found {
            return Term(n);
        }
    }
    let ground = !matches!(head, Head::Var(..)) && args.iter().all(|a| a.0.ground);
    let size = 1 + args.iter().map(|a| a.0.size).sum::<u32>();
    let node = Arc::new(Node { head, args, sort, hash, ground, size });
    table.buckets.entry(hash).or_default().push(Arc::downgrade(&node));
    table.live_hint += 1;
    if table.live_hint >= table.sweep_at {
        table.buckets.retain(|_, b| {
            b.retain(|w| w.strong_count() > 0);
            !b.is_empty()
        });
        let live: usize = table.buckets.values().map(|b| b.len()).sum();
        table.live_hint = live;
        table.sweep_at = (live * 2).max(1 << 16);
    }
    Term(node)
}

impl Term {
    pub fn var(name: &str, sort: SortId) -> Term {
        intern(Head::Var(Arc::from(name), sort), Vec::new(), sort)
    }

    pub fn int(v: i64) -> Term {
        let sort = match v.cmp(&0) {
            Ordering::Equal => SortId::ZERO,
            Ordering::Greater => SortId::NZNAT,
            Ordering::Less => SortId::NZINT,
        };
        intern(Head::Int(v), Vec::new(), sort)
    }

    pub fn qid(name: &str) -> Term {
        intern(Head::Qid(Arc::from(name)), Vec::new(), SortId::QID)
    }

    pub fn constant(sym: &Arc<Symbol>) -> Term {
        Term::app(sym, Vec::new())
    }

    /// Builds `sym(args)` in canonical form: assoc arguments flattened,
    /// identity elements dropped, comm arguments sorted.
    pub fn app(sym: &Arc<Symbol>, mut args: Vec<Term>) -> Term {
        // Successor and negation of a literal are literals.
        if let ([a], Some(b @ (Builtin::Succ | Builtin::Neg))) = (args.as_slice(), sym.builtin) {
            if let Some(v) = a.as_int() {
                match b {
                    Builtin::Succ if v >= 0 => return Term::int(v + 1),
                    Builtin::Neg => return Term::int(-v),
                    _ => {}
                }
            }
        }
        if sym.assoc && args.iter().any(|a| a.symbol().is_some_and(|g| Arc::ptr_eq(g, sym))) {
            let mut flat = Vec::with_capacity(args.len() + 4);
            for a in args {
                if a.symbol().is_some_and(|g| Arc::ptr_eq(g, sym)) {
                    flat.extend(a.args().iter().cloned());
                } else {
                    flat.push(a);
                }
            }
            args = flat;
        }
        if let Some(id) = sym.identity() {
            if sym.assoc {
                args.retain(|a| a != id);
                match args.len() {
                    0 => return id.clone(),
                    1 => return args.pop().unwrap(),
                    _ => {}
                }
            } else if args.len() == 2 {
                if &args[0] == id {
                    return args.pop().unwrap();
                }
                if &args[1] == id {
                    return args.swap_remove(0);
                }
            }
        }
        if sym.comm {
            args.sort();
        }
        let sort = if sym.assoc && args.len() > 2 {
            let mut s = args[0].sort();
            for a in &args[1..] {
                s = sym.result_sort(&[s, a.sort()]);
            }
            s
        } else {
            let sorts: Vec<SortId> = args.iter().map(|a| a.sort()).collect();
            sym.result_sort(&sorts)
        };
        intern(Head::App(sym.clone()), args, sort)
    }

    pub fn head(&self) -> &Head {
        &self.0.head
    }

    pub fn args(&self) -> &[Term] {
        &self.0.args
    }

    pub fn sort(&self) -> SortId {
        self.0.sort
    }

    pub fn is_ground(&self) -> bool {
        self.0.ground
    }

    pub fn size(&self) -> usize {
        self.0.size as usize
    }

    pub fn is_var(&self) -> bool {
        matches!(self.0.head, Head::Var(..))
    }

    pub fn var_name(&self) -> Option<&str> {
        match &self.0.head {
            Head::Var(n, _) => Some(n),
            _ => None,
        }
    }

    pub fn symbol(&self) -> Option<&Arc<Symbol>> {
        match &self.0.head {
            Head::App(f) => Some(f),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self.0.head {
            Head::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn builtin(&self) -> Option<Builtin> {
        self.symbol().and_then(|f| f.builtin)
    }

    pub fn is_symbol(&self, sym: &Arc<Symbol>) -> bool {
        self.symbol().is_some_and(|f| Arc::ptr_eq(f, sym))
    }

    pub fn ptr_id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    /// Variables occurring in the term, each once, in first-occurrence order.
    pub fn vars(&self) -> Vec<Term> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut Vec<Term>) {
        if self.is_ground() {
            return;
        }
        if self.is_var() {
            if !out.contains(self) {
                out.push(self.clone());
            }
            return;
        }
        for a in self.args() {
            a.collect_vars(out);
        }
    }

    /// Rebuilds the term with a new argument list under the same head.
    pub fn with_args(&self, args: Vec<Term>) -> Term {
        match &self.0.head {
            Head::App(f) => Term::app(f, args),
            _ => self.clone(),
        }
    }

    /// All subterms in post-order (children left to right, then the node).
    pub fn subterms_postorder(&self) -> Vec<Term> {
        let mut out = Vec::new();
        fn go(t: &Term, out: &mut Vec<Term>) {
            for a in t.args() {
                go(a, out);
            }
            out.push(t.clone());
        }
        go(self, &mut out);
        out
    }

    /// Precedence of the term when printed at the top.
    pub fn prec(&self) -> u32 {
        match &self.0.head {
            Head::App(f) if !self.args().is_empty() => match f.mixfix() {
                Some(_) => f.prec,
                None => 0,
            },
            _ => 0,
        }
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl Ord for Term {
    /// Fixed total order used for comm argument lists: variables first,
    /// then literals, quoted identifiers and applications; applications
    /// by operator id, arity, then arguments left to right.
    fn cmp(&self, other: &Self) -> Ordering {
        if self == other {
            return Ordering::Equal;
        }
        fn rank(h: &Head) -> u8 {
            match h {
                Head::Var(..) => 0,
                Head::Int(_) => 1,
                Head::Qid(_) => 2,
                Head::App(_) => 3,
            }
        }
        match (&self.0.head, &other.0.head) {
            (Head::Var(a, s), Head::Var(b, t)) => a.cmp(b).then(s.cmp(t)),
            (Head::Int(a), Head::Int(b)) => a.cmp(b),
            (Head::Qid(a), Head::Qid(b)) => a.cmp(b),
            (Head::App(f), Head::App(g)) => f.id.cmp(&g.id).then(self.args().len().cmp(&other.args().len())).then_with(|| {
                for (x, y) in self.args().iter().zip(other.args()) {
                    let c = x.cmp(y);
                    if c != Ordering::Equal {
                        return c;
                    }
                }
                Ordering::Equal
            }),
            (a, b) => rank(a).cmp(&rank(b)),
        }
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn no_space_after(tok: &str) -> bool {
    matches!(tok, "(" | "[" | "{")
}

fn no_space_before(tok: &str) -> bool {
    matches!(tok, ")" | "]" | "}" | ",")
}

/// Joins printed pieces, spacing them as they would be typed.
fn join_tokens(pieces: &[String]) -> String {
    let mut out = String::new();
    for (i, p) in pieces.iter().enumerate() {
        if i > 0 && !no_space_after(&pieces[i - 1]) && !no_space_before(p) {
            out.push(' ');
        }
        out.push_str(p);
    }
    out
}

fn print_arg(t: &Term, max_prec: u32, out: &mut Vec<String>) {
    let s = t.to_string();
    if t.prec() > max_prec {
        out.push(format!("({s})"));
    } else {
        out.push(s);
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.head {
            Head::Var(n, _) => write!(f, "{n}"),
            Head::Int(v) => write!(f, "{v}"),
            Head::Qid(n) => write!(f, "'{n}"),
            Head::App(sym) => {
                let args = self.args();
                if args.is_empty() {
                    return write!(f, "{}", sym.name);
                }
                let Some(items) = sym.mixfix() else {
                    let parts: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                    return write!(f, "{}({})", sym.name, parts.join(", "));
                };
                let p = sym.prec;
                let infix = matches!(items.first(), Some(MixItem::Hole)) && matches!(items.last(), Some(MixItem::Hole));
                let mut pieces: Vec<String> = Vec::new();
                if sym.assoc && args.len() > 2 {
                    // A flattened chain prints as a left-nested application.
                    let sep: Vec<&MixItem> = items[1..items.len() - 1].iter().collect();
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            for it in &sep {
                                if let MixItem::Tok(t) = it {
                                    pieces.push(t.clone());
                                }
                            }
                        }
                        print_arg(a, if i == 0 { p } else { p.saturating_sub(1) }, &mut pieces);
                    }
                    return write!(f, "{}", join_tokens(&pieces));
                }
                let last = items.len() - 1;
                let mut k = 0;
                for (i, it) in items.iter().enumerate() {
                    match it {
                        MixItem::Tok(t) => pieces.push(t.clone()),
                        MixItem::Hole => {
                            let max = if i == 0 {
                                p
                            } else if i == last {
                                if infix {
                                    p.saturating_sub(1)
                                } else {
                                    p
                                }
                            } else {
                                u32::MAX
                            };
                            print_arg(&args[k], max, &mut pieces);
                            k += 1;
                        }
                    }
                }
                write!(f, "{}", join_tokens(&pieces))
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sort::SortBuilder;

    fn row_sig() -> (Arc<SortTable>, Arc<Symbol>, Arc<Symbol>, Arc<Symbol>) {
        let mut b = SortBuilder::new();
        let tile = b.add("Tile");
        let row = b.add("Row");
        b.subsort(SortId::NAT, tile);
        b.subsort(tile, row);
        let st = Arc::new(b.finish().unwrap());
        let blank = Symbol::new("b", 0, vec![OpDecl { args: vec![], result: tile }], false, false, true, None, None, st.clone());
        let nil = Symbol::new("nil", 0, vec![OpDecl { args: vec![], result: row }], false, false, true, None, None, st.clone());
        let cat = Symbol::new("__", 2, vec![OpDecl { args: vec![row, row], result: row }], true, false, true, Some(25), None, st.clone());
        cat.set_identity(Term::constant(&nil));
        (st, blank, nil, cat)
    }

    #[test]
    fn flattening_and_identity() {
        let (_, b, nil, cat) = row_sig();
        let one = Term::int(1);
        let two = Term::int(2);
        let left = Term::app(&cat, vec![Term::app(&cat, vec![one.clone(), Term::constant(&b)]), two.clone()]);
        let right = Term::app(&cat, vec![one.clone(), Term::app(&cat, vec![Term::constant(&b), two.clone()])]);
        assert_eq!(left, right);
        assert_eq!(left.args().len(), 3);
        assert_eq!(Term::app(&cat, vec![Term::constant(&nil), one.clone()]), one);
        assert_eq!(Term::app(&cat, vec![Term::constant(&nil), Term::constant(&nil)]), Term::constant(&nil));
        assert_eq!(left.to_string(), "1 b 2");
    }

    #[test]
    fn sorts_are_cached() {
        let (st, b, _, cat) = row_sig();
        let t = Term::app(&cat, vec![Term::int(1), Term::constant(&b)]);
        assert_eq!(st.name(t.sort()), "Row");
        assert_eq!(st.name(Term::constant(&b).sort()), "Tile");
        assert_eq!(Term::int(4).sort(), SortId::NZNAT);
        assert_eq!(Term::int(-4).sort(), SortId::NZINT);
    }

    #[test]
    fn comm_arguments_are_sorted() {
        let mut bld = SortBuilder::new();
        let board = bld.add("Blackboard");
        bld.subsort(SortId::NAT, board);
        let st = Arc::new(bld.finish().unwrap());
        let ac = Symbol::new("__", 2, vec![OpDecl { args: vec![board, board], result: board }], true, true, false, None, None, st);
        let a = Term::app(&ac, vec![Term::int(8), Term::int(7)]);
        let b = Term::app(&ac, vec![Term::int(7), Term::int(8)]);
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "7 8");
    }
}
