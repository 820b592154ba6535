//! Matching modulo associativity, commutativity and identity.
//!
//! Three modes are provided: at the top of the subject, at the top with
//! extension (an assoc or assoc-comm pattern may cover part of the
//! argument list, the rest stays in the context), and anywhere.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use crate::sort::{SortId, SortTable};
use crate::strategy::MatchMode;
use crate::subst::Subst;
use crate::term::{Builtin, Head, Symbol, Term};

/// One layer of a context: `sym(before…, ⊖, after…)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    pub sym: Arc<Symbol>,
    pub before: Vec<Term>,
    pub after: Vec<Term>,
}

/// A term with one hole, stored as the path of frames from the root.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Context {
    frames: Vec<Frame>,
}

impl Context {
    pub fn hole() -> Context {
        Context::default()
    }

    pub fn is_hole(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    /// Fills the hole and re-canonicalizes on the way up.
    pub fn plug(&self, t: &Term) -> Term {
        let mut cur = t.clone();
        for fr in self.frames.iter().rev() {
            let mut args = Vec::with_capacity(fr.before.len() + fr.after.len() + 1);
            args.extend(fr.before.iter().cloned());
            args.push(cur);
            args.extend(fr.after.iter().cloned());
            cur = Term::app(&fr.sym, args);
        }
        cur
    }

    /// `outer` wrapped around `self`.
    pub fn within(&self, outer: &[Frame]) -> Context {
        let mut frames = outer.to_vec();
        frames.extend(self.frames.iter().cloned());
        Context { frames }
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = "⊖".to_string();
        for fr in self.frames.iter().rev() {
            let mut parts: Vec<String> = fr.before.iter().map(|t| t.to_string()).collect();
            parts.push(s);
            parts.extend(fr.after.iter().map(|t| t.to_string()));
            let sep = match fr.sym.mixfix() {
                Some(items) => items
                    .iter()
                    .filter_map(|i| match i {
                        crate::term::MixItem::Tok(t) => Some(t.clone()),
                        _ => None,
                    })
                    .collect::<Vec<_>>()
                    .join(" "),
                None => ",".into(),
            };
            let joiner = if sep.is_empty() { " ".to_string() } else { format!(" {sep} ") };
            s = if fr.sym.mixfix().is_some() { parts.join(&joiner) } else { format!("{}({})", fr.sym.name, parts.join(", ")) };
            if !std::ptr::eq(fr, &self.frames[0]) {
                s = format!("({s})");
            }
        }
        write!(f, "{s}")
    }
}

impl fmt::Debug for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MatchResult {
    pub subst: Subst,
    pub context: Context,
}

/// Callback invoked with each match; returning false stops enumeration.
type Cont<'c> = dyn FnMut(&mut Subst) -> bool + 'c;

struct Matcher<'a> {
    sorts: &'a SortTable,
}

impl<'a> Matcher<'a> {
    fn sort_fits(&self, var_sort: SortId, value: &Term) -> bool {
        if self.sorts.is_kind(var_sort) {
            self.sorts.same_kind(var_sort, value.sort())
        } else {
            self.sorts.leq(value.sort(), var_sort)
        }
    }

    fn var_sort(v: &Term) -> SortId {
        match v.head() {
            Head::Var(_, s) => *s,
            _ => v.sort(),
        }
    }

    fn bind(&self, v: &Term, value: &Term, sub: &mut Subst, k: &mut Cont<'_>) -> bool {
        if let Some(old) = sub.get(v) {
            return if old == value { k(sub) } else { true };
        }
        if !self.sort_fits(Self::var_sort(v), value) {
            return true;
        }
        sub.bind(v.clone(), value.clone());
        let go_on = k(sub);
        sub.unbind(v);
        go_on
    }

    /// Whether variable `v` can stand for the identity of `f`.
    fn takes_identity(&self, f: &Symbol, v: &Term) -> bool {
        f.identity().is_some_and(|e| self.sort_fits(Self::var_sort(v), e))
    }

    /// Whether variable `v` can stand for a list of two or more `f` arguments.
    fn takes_lists(&self, f: &Symbol, v: &Term) -> bool {
        let s = Self::var_sort(v);
        if self.sorts.is_kind(s) {
            return self.sorts.same_kind(s, f.range());
        }
        f.decls.iter().any(|d| self.sorts.leq(d.result, s))
    }

    /// Whether a non-variable pattern can have an instance that is not
    /// headed by its own symbol, by an identity cancelling all but one
    /// argument.
    fn collapses(p: &Term) -> bool {
        !p.is_ground() && p.symbol().is_some_and(|g| g.identity().is_some())
    }

    /// Whether pattern argument `q` can match the empty list of `f`.
    fn may_vanish(&self, f: &Symbol, q: &Term) -> bool {
        if q.is_var() {
            self.takes_identity(f, q)
        } else {
            f.identity().is_some() && Self::collapses(q)
        }
    }

    fn list_of(f: &Arc<Symbol>, t: &Term) -> Vec<Term> {
        if t.is_symbol(f) {
            t.args().to_vec()
        } else if f.identity() == Some(t) {
            Vec::new()
        } else {
            vec![t.clone()]
        }
    }

    fn segment(f: &Arc<Symbol>, items: &[Term]) -> Term {
        match items.len() {
            0 => f.identity().cloned().expect("empty segment needs an identity"),
            1 => items[0].clone(),
            _ => Term::app(f, items.to_vec()),
        }
    }

    fn m(&self, p: &Term, s: &Term, sub: &mut Subst, k: &mut Cont<'_>) -> bool {
        if p.is_ground() {
            return if p == s { k(sub) } else { true };
        }
        let f = match p.head() {
            Head::Var(..) => return self.bind(p, s, sub, k),
            Head::App(f) => f,
            _ => return true,
        };
        match (f.builtin, s.as_int()) {
            (Some(Builtin::Succ), Some(n)) if n > 0 => return self.m(&p.args()[0], &Term::int(n - 1), sub, k),
            (Some(Builtin::Neg), Some(n)) if n < 0 => return self.m(&p.args()[0], &Term::int(-n), sub, k),
            _ => {}
        }
        if f.assoc {
            let ss = if s.is_symbol(f) || f.identity().is_some() {
                Self::list_of(f, s)
            } else {
                return true;
            };
            return if f.comm {
                let bag = Bag::new(&ss);
                self.m_ac(f, p.args(), bag, false, sub, &mut |sub, _| k(sub))
            } else {
                self.m_list(f, p.args(), &ss, sub, k)
            };
        }
        if s.is_symbol(f) {
            if f.comm && p.args().len() == 2 {
                let (s0, s1) = (&s.args()[0], &s.args()[1]);
                if !self.m_args(p.args(), &[s0.clone(), s1.clone()], sub, k) {
                    return false;
                }
                if s0 == s1 {
                    return true;
                }
                return self.m_args(p.args(), &[s1.clone(), s0.clone()], sub, k);
            }
            return self.m_args(p.args(), s.args(), sub, k);
        }
        if let Some(e) = f.identity() {
            if p.args().len() == 2 {
                if !self.m_args(p.args(), &[s.clone(), e.clone()], sub, k) {
                    return false;
                }
                if s != e {
                    return self.m_args(p.args(), &[e.clone(), s.clone()], sub, k);
                }
            }
        }
        true
    }

    fn m_args(&self, ps: &[Term], ss: &[Term], sub: &mut Subst, k: &mut Cont<'_>) -> bool {
        if ps.is_empty() {
            return k(sub);
        }
        self.m(&ps[0], &ss[0], sub, &mut |sub| self.m_args(&ps[1..], &ss[1..], sub, k))
    }

    /// Associative list matching: each pattern argument covers a
    /// contiguous segment. Only variables and patterns that collapse
    /// through an identity may cover more than one element or none.
    fn m_list(&self, f: &Arc<Symbol>, ps: &[Term], ss: &[Term], sub: &mut Subst, k: &mut Cont<'_>) -> bool {
        let Some(p) = ps.first() else {
            return if ss.is_empty() { k(sub) } else { true };
        };
        let need: usize = ps[1..].iter().map(|q| usize::from(!self.may_vanish(f, q))).sum();
        if !p.is_var() {
            if ss.len() < need {
                return true;
            }
            if !Self::collapses(p) {
                if ss.is_empty() {
                    return true;
                }
                return self.m(p, &ss[0], sub, &mut |sub| self.m_list(f, &ps[1..], &ss[1..], sub, k));
            }
            let min = usize::from(f.identity().is_none());
            for len in min..=ss.len() - need {
                let value = Self::segment(f, &ss[..len]);
                if !self.m(p, &value, sub, &mut |sub| self.m_list(f, &ps[1..], &ss[len..], sub, k)) {
                    return false;
                }
            }
            return true;
        }
        if let Some(v) = sub.get(p).cloned() {
            let items = Self::list_of(f, &v);
            if ss.len() >= items.len() && ss[..items.len()] == items[..] {
                return self.m_list(f, &ps[1..], &ss[items.len()..], sub, k);
            }
            return true;
        }
        if ss.len() < need {
            return true;
        }
        let min = usize::from(!self.takes_identity(f, p));
        let max = if self.takes_lists(f, p) { ss.len() - need } else { (ss.len() - need).min(1) };
        for len in min..=max {
            let value = Self::segment(f, &ss[..len]);
            let go_on = self.bind(p, &value, sub, &mut |sub| self.m_list(f, &ps[1..], &ss[len..], sub, k));
            if !go_on {
                return false;
            }
        }
        true
    }

    /// Assoc-comm matching by backtracking over sub-multisets.
    /// Non-variable arguments first, then bound variables, then the free
    /// ones. With `extend`, leftover elements are handed to the
    /// continuation instead of being rejected.
    fn m_ac(
        &self,
        f: &Arc<Symbol>,
        ps: &[Term],
        bag: Bag,
        extend: bool,
        sub: &mut Subst,
        k: &mut dyn FnMut(&mut Subst, &Bag) -> bool,
    ) -> bool {
        let mut order: Vec<&Term> = ps.iter().filter(|p| !p.is_var()).collect();
        order.extend(ps.iter().filter(|p| p.is_var()));
        self.m_ac_step(f, &order, bag, extend, sub, k)
    }

    fn m_ac_step(
        &self,
        f: &Arc<Symbol>,
        ps: &[&Term],
        bag: Bag,
        extend: bool,
        sub: &mut Subst,
        k: &mut dyn FnMut(&mut Subst, &Bag) -> bool,
    ) -> bool {
        let Some(&p) = ps.first() else {
            return if extend || bag.is_empty() { k(sub, &bag) } else { true };
        };
        let rest = &ps[1..];
        if !p.is_var() && Self::collapses(p) {
            if let Some(e) = f.identity() {
                let go_on = self.m(p, e, sub, &mut |sub| self.m_ac_step(f, rest, bag.clone(), extend, sub, k));
                if !go_on {
                    return false;
                }
            }
            for (chosen, remaining) in bag.sub_bags() {
                let value = Self::segment(f, &chosen);
                let go_on = self.m(p, &value, sub, &mut |sub| self.m_ac_step(f, rest, remaining.clone(), extend, sub, k));
                if !go_on {
                    return false;
                }
            }
            return true;
        }
        if !p.is_var() {
            for i in 0..bag.items.len() {
                if bag.items[i].1 == 0 {
                    continue;
                }
                let elem = bag.items[i].0.clone();
                let smaller = bag.take_one(i);
                let go_on = self.m(p, &elem, sub, &mut |sub| self.m_ac_step(f, rest, smaller.clone(), extend, sub, k));
                if !go_on {
                    return false;
                }
            }
            return true;
        }
        if let Some(v) = sub.get(p).cloned() {
            return match bag.remove_all(&Self::list_of(f, &v)) {
                Some(smaller) => self.m_ac_step(f, rest, smaller, extend, sub, k),
                None => true,
            };
        }
        let last_free = rest.iter().all(|q| sub.contains(q)) && !extend;
        let id_ok = self.takes_identity(f, p);
        if last_free && rest.is_empty() {
            // The last free variable takes everything left.
            let items = bag.to_vec();
            if items.is_empty() && !id_ok {
                return true;
            }
            if items.len() > 1 && !self.takes_lists(f, p) {
                return true;
            }
            let value = Self::segment(f, &items);
            let empty = Bag::default();
            return self.bind(p, &value, sub, &mut |sub| self.m_ac_step(f, rest, empty.clone(), extend, sub, k));
        }
        let choices = if self.takes_lists(f, p) { bag.sub_bags() } else { bag.singletons() };
        if id_ok {
            let go_on = self.bind(p, f.identity().unwrap(), sub, &mut |sub| self.m_ac_step(f, rest, bag.clone(), extend, sub, k));
            if !go_on {
                return false;
            }
        }
        for (chosen, remaining) in choices {
            let value = Self::segment(f, &chosen);
            let go_on = self.bind(p, &value, sub, &mut |sub| self.m_ac_step(f, rest, remaining.clone(), extend, sub, k));
            if !go_on {
                return false;
            }
        }
        true
    }

    /// Extension matching at the top of `s`.
    fn m_ext(&self, p: &Term, s: &Term, sub: &mut Subst, k: &mut dyn FnMut(&mut Subst, Context) -> bool) -> bool {
        let f = match p.symbol() {
            Some(f) if f.assoc && !p.is_ground() || f.assoc && s.is_symbol(f) => f.clone(),
            _ => return self.m(p, s, sub, &mut |sub| k(sub, Context::hole())),
        };
        if !s.is_symbol(&f) {
            return self.m(p, s, sub, &mut |sub| k(sub, Context::hole()));
        }
        let ss = s.args();
        let ps = p.args();
        let absorbing = |q: &Term| q.is_var() && self.takes_lists(&f, q);
        if f.comm {
            if ps.iter().any(absorbing) {
                return self.m(p, s, sub, &mut |sub| k(sub, Context::hole()));
            }
            let bag = Bag::new(ss);
            return self.m_ac(&f, ps, bag, true, sub, &mut |sub, left| {
                let ctx = if left.is_empty() {
                    Context::hole()
                } else {
                    Context { frames: vec![Frame { sym: f.clone(), before: left.to_vec(), after: vec![] }] }
                };
                k(sub, ctx)
            });
        }
        let left_ext = !absorbing(&ps[0]);
        let right_ext = !absorbing(&ps[ps.len() - 1]);
        let n = ss.len();
        for a in 0..n {
            if a > 0 && !left_ext {
                break;
            }
            for b in (a + 1)..=n {
                if b < n && !right_ext {
                    continue;
                }
                let ctx = if a == 0 && b == n {
                    Context::hole()
                } else {
                    Context { frames: vec![Frame { sym: f.clone(), before: ss[..a].to_vec(), after: ss[b..].to_vec() }] }
                };
                let go_on = self.m_list(&f, ps, &ss[a..b], sub, &mut |sub| k(sub, ctx.clone()));
                if !go_on {
                    return false;
                }
            }
        }
        true
    }
}

/// A multiset of canonical terms with multiplicities, in term order.
#[derive(Clone, Default)]
struct Bag {
    items: Vec<(Term, usize)>,
}

impl Bag {
    fn new(ts: &[Term]) -> Bag {
        let mut items: Vec<(Term, usize)> = Vec::new();
        for t in ts {
            match items.last_mut() {
                Some((u, c)) if u == t => *c += 1,
                _ => items.push((t.clone(), 1)),
            }
        }
        Bag { items }
    }

    fn is_empty(&self) -> bool {
        self.items.iter().all(|(_, c)| *c == 0)
    }

    fn to_vec(&self) -> Vec<Term> {
        let mut out = Vec::new();
        for (t, c) in &self.items {
            for _ in 0..*c {
                out.push(t.clone());
            }
        }
        out
    }

    fn take_one(&self, i: usize) -> Bag {
        let mut b = self.clone();
        b.items[i].1 -= 1;
        b
    }

    fn remove_all(&self, ts: &[Term]) -> Option<Bag> {
        let mut b = self.clone();
        for t in ts {
            let slot = b.items.iter_mut().find(|(u, c)| u == t && *c > 0)?;
            slot.1 -= 1;
        }
        Some(b)
    }

    fn singletons(&self) -> Vec<(Vec<Term>, Bag)> {
        (0..self.items.len()).filter(|&i| self.items[i].1 > 0).map(|i| (vec![self.items[i].0.clone()], self.take_one(i))).collect()
    }

    /// Every non-empty sub-multiset with its complement.
    fn sub_bags(&self) -> Vec<(Vec<Term>, Bag)> {
        let mut out = Vec::new();
        let mut counts = vec![0usize; self.items.len()];
        loop {
            // Odometer over the multiplicity vector.
            let mut i = 0;
            while i < counts.len() {
                if counts[i] < self.items[i].1 {
                    counts[i] += 1;
                    break;
                }
                counts[i] = 0;
                i += 1;
            }
            if i == counts.len() {
                break;
            }
            let mut chosen = Vec::new();
            let mut rest = self.clone();
            for (j, &c) in counts.iter().enumerate() {
                for _ in 0..c {
                    chosen.push(self.items[j].0.clone());
                }
                rest.items[j].1 -= c;
            }
            out.push((chosen, rest));
        }
        out.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
        out
    }
}

fn dedup<T: Clone + Eq + std::hash::Hash>(items: Vec<T>) -> Vec<T> {
    let mut seen = HashSet::new();
    items.into_iter().filter(|x| seen.insert(x.clone())).collect()
}

/// All matches of `pattern` against the whole of `subject`, extending `init`.
pub fn match_top_from(sorts: &SortTable, pattern: &Term, subject: &Term, init: &Subst) -> Vec<Subst> {
    let m = Matcher { sorts };
    let mut out = Vec::new();
    let mut sub = init.clone();
    m.m(pattern, subject, &mut sub, &mut |s| {
        out.push(s.clone());
        true
    });
    dedup(out)
}

/// Calls `f` with each top match until it returns false. Returns false
/// when enumeration was stopped early.
pub fn for_each_top(sorts: &SortTable, pattern: &Term, subject: &Term, init: &Subst, f: &mut dyn FnMut(&Subst) -> bool) -> bool {
    let m = Matcher { sorts };
    let mut sub = init.clone();
    m.m(pattern, subject, &mut sub, &mut |s| f(s))
}

/// Calls `f` with each match with extension until it returns false.
pub fn for_each_extension(
    sorts: &SortTable,
    pattern: &Term,
    subject: &Term,
    init: &Subst,
    f: &mut dyn FnMut(&Subst, Context) -> bool,
) -> bool {
    let m = Matcher { sorts };
    let mut sub = init.clone();
    m.m_ext(pattern, subject, &mut sub, &mut |s, ctx| f(s, ctx))
}

pub fn match_top(sorts: &SortTable, pattern: &Term, subject: &Term) -> Vec<Subst> {
    match_top_from(sorts, pattern, subject, &Subst::new())
}

/// Whether any top match exists.
pub fn matches_top(sorts: &SortTable, pattern: &Term, subject: &Term, init: &Subst) -> bool {
    let m = Matcher { sorts };
    let mut sub = init.clone();
    !m.m(pattern, subject, &mut sub, &mut |_| false)
}

pub fn match_extension_from(sorts: &SortTable, pattern: &Term, subject: &Term, init: &Subst) -> Vec<MatchResult> {
    let m = Matcher { sorts };
    let mut out = Vec::new();
    let mut sub = init.clone();
    m.m_ext(pattern, subject, &mut sub, &mut |s, ctx| {
        out.push(MatchResult { subst: s.clone(), context: ctx });
        true
    });
    let out = dedup(out);
    #[cfg(debug_assertions)]
    for r in &out {
        debug_assert_eq!(&r.context.plug(&r.subst.apply(pattern)), subject, "unsound match {:?}", r);
    }
    out
}

pub fn match_extension(sorts: &SortTable, pattern: &Term, subject: &Term) -> Vec<MatchResult> {
    match_extension_from(sorts, pattern, subject, &Subst::new())
}

pub fn match_anywhere_from(sorts: &SortTable, pattern: &Term, subject: &Term, init: &Subst) -> Vec<MatchResult> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    visit(sorts, pattern, subject, init, &mut path, &mut out);
    dedup(out)
}

fn visit(sorts: &SortTable, p: &Term, s: &Term, init: &Subst, path: &mut Vec<Frame>, out: &mut Vec<MatchResult>) {
    if let Some(f) = s.symbol() {
        let args = s.args();
        for i in 0..args.len() {
            path.push(Frame { sym: f.clone(), before: args[..i].to_vec(), after: args[i + 1..].to_vec() });
            visit(sorts, p, &args[i], init, path, out);
            path.pop();
        }
    }
    for r in match_extension_from(sorts, p, s, init) {
        out.push(MatchResult { subst: r.subst, context: r.context.within(path) });
    }
}

pub fn match_anywhere(sorts: &SortTable, pattern: &Term, subject: &Term) -> Vec<MatchResult> {
    match_anywhere_from(sorts, pattern, subject, &Subst::new())
}

/// Matches in the given mode; top matches get the bare-hole context.
pub fn match_mode(sorts: &SortTable, mode: MatchMode, pattern: &Term, subject: &Term, init: &Subst) -> Vec<MatchResult> {
    match mode {
        MatchMode::Match => {
            match_top_from(sorts, pattern, subject, init).into_iter().map(|subst| MatchResult { subst, context: Context::hole() }).collect()
        }
        MatchMode::XMatch => match_extension_from(sorts, pattern, subject, init),
        MatchMode::AMatch => match_anywhere_from(sorts, pattern, subject, init),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::parse_term_in;
    use crate::session::tests::session;

    fn results(module: &str, files: &[&str], f: fn(&SortTable, &Term, &Term) -> Vec<MatchResult>, p: &str, s: &str) -> Vec<String> {
        let sess = session(files);
        let m = sess.library().get(module).unwrap();
        let (p, s) = (parse_term_in(&m, p).unwrap(), parse_term_in(&m, s).unwrap());
        let hole = Term::var("HOLE", p.sort());
        let mut out: Vec<String> = f(m.sorts(), &p, &s)
            .iter()
            .map(|r| {
                let binds: Vec<String> = r.subst.iter().map(|(v, t)| format!("{}={t}", v.var_name().unwrap())).collect();
                format!("{} | {}", binds.join(","), r.context.plug(&hole))
            })
            .collect();
        out.sort();
        out
    }

    #[test]
    fn top_matching() {
        let puzzle = ["15puzzle.maude"];
        assert_eq!(results("15PUZZLE", &puzzle, match_top_ctx, "1 2 R", "1 2 b 3"), ["R=b 3 | HOLE"]);
        let bb = ["blackboard.maude"];
        assert!(results("BLACKBOARD", &bb, match_top_ctx, "M N", "8 7 4").is_empty());
        assert_eq!(results("BLACKBOARD", &bb, match_top_ctx, "M N", "8 7"), ["M=7,N=8 | HOLE", "M=8,N=7 | HOLE"]);
    }

    fn match_top_ctx(sorts: &SortTable, p: &Term, s: &Term) -> Vec<MatchResult> {
        match_top(sorts, p, s).into_iter().map(|subst| MatchResult { subst, context: Context::hole() }).collect()
    }

    #[test]
    fn extension() {
        let files = ["15puzzle.maude", "solver.maude"];
        assert_eq!(results("15PUZZLE-STRATS", &files, match_extension, "b N", "1 b 2"), ["N=2 | 1 HOLE"]);
        assert_eq!(
            results("15PUZZLE", &files, match_extension, "R ; R", "1 b ; 1 b ; 2 b ; 2 b"),
            ["R=1 b | HOLE ; 2 b ; 2 b", "R=2 b | 1 b ; 1 b ; HOLE"]
        );
    }

    #[test]
    fn anywhere() {
        let files = ["15puzzle.maude"];
        assert_eq!(results("15PUZZLE", &files, match_anywhere, "T b", "1 b 2 ; 3 b 4"), ["T=1 | HOLE 2 ; 3 b 4", "T=3 | 1 b 2 ; HOLE 4"]);
    }

    #[test]
    fn collapse_through_identity() {
        let mut s = crate::session::Session::new();
        let spec = "fmod C is sort S . ops a b e z : -> S . op _;_ : S S -> S [assoc id: e] .
            op _&_ : S S -> S [assoc comm id: z] . vars X Y : S . endfm";
        for r in s.run_text(spec) {
            r.unwrap();
        }
        let m = s.library().get("C").unwrap();
        let p = parse_term_in(&m, "a ; (X & Y)").unwrap();
        let t = parse_term_in(&m, "a").unwrap();
        // X & Y vanishes when one side is z and the other e.
        let mut got: Vec<String> = match_top(m.sorts(), &p, &t)
            .iter()
            .map(|s| format!("{} {}", s.get_by_name("X").unwrap(), s.get_by_name("Y").unwrap()))
            .collect();
        got.sort();
        assert_eq!(got, ["e z", "z e"]);
    }
}
