//! Mixfix term parser.
//!
//! Every token span gets the set of all its parses, memoized; operator
//! shapes are matched against spans, argument spans are parsed
//! recursively and filtered by precedence and kind. Ties at the top are
//! broken in favor of well-sorted terms, then of the loosest-binding top
//! operator.

use std::collections::HashMap;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::lexer::{tokenize, Token};
use crate::module::Signature;
use crate::sort::SortId;
use crate::term::{MixItem, Symbol, Term};

#[derive(Clone)]
struct Cand {
    term: Term,
    prec: u32,
}

pub struct TermParser<'a> {
    pub sig: &'a Signature,
    pub vars: &'a HashMap<String, SortId>,
}

struct Run<'p, 'a> {
    p: &'p TermParser<'a>,
    toks: &'p [Token],
    depth: Vec<i32>,
    /// First position after `i` where the nesting drops below its level.
    limit: Vec<usize>,
    memo: Vec<Option<Rc<Vec<Cand>>>>,
}

fn is_int(s: &str) -> bool {
    let digits = s.strip_prefix('-').unwrap_or(s);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

pub fn text_of(toks: &[Token]) -> String {
    let pieces: Vec<String> = toks.iter().map(|t| t.text.clone()).collect();
    pieces.join(" ")
}

impl<'a> TermParser<'a> {
    pub fn new(sig: &'a Signature, vars: &'a HashMap<String, SortId>) -> Self {
        TermParser { sig, vars }
    }

    pub fn parse_str(&self, text: &str) -> Result<Term> {
        self.parse(&tokenize(text), None)
    }

    /// Parses a whole token slice, optionally requiring a kind.
    pub fn parse(&self, toks: &[Token], expect: Option<SortId>) -> Result<Term> {
        if toks.is_empty() {
            return Err(Error::NoParse("empty term".into()));
        }
        let all = self.candidates(toks);
        let st = &self.sig.sorts;
        let mut cands: Vec<Cand> = match expect {
            Some(k) => all.iter().filter(|c| st.same_kind(c.term.sort(), k)).cloned().collect(),
            None => all.to_vec(),
        };
        if cands.is_empty() {
            let (line, col) = (toks[0].line, toks[0].col);
            let what = if all.is_empty() { "no parse for" } else { "wrong kind for" };
            return Err(Error::NoParse(format!("{what} `{}` (line {line}, column {col})", text_of(toks))));
        }
        if cands.iter().any(|c| !st.is_kind(c.term.sort())) {
            cands.retain(|c| !st.is_kind(c.term.sort()));
        }
        let mut distinct: Vec<Cand> = Vec::new();
        for c in cands {
            match distinct.iter_mut().find(|d| d.term == c.term) {
                Some(d) => d.prec = d.prec.max(c.prec),
                None => distinct.push(c),
            }
        }
        if distinct.len() > 1 {
            let top = distinct.iter().map(|c| c.prec).max().unwrap_or(0);
            distinct.retain(|c| c.prec == top);
        }
        if distinct.len() > 1 {
            return Err(Error::Ambiguous(distinct[0].term.to_string(), distinct[1].term.to_string()));
        }
        Ok(distinct.pop().unwrap().term)
    }

    fn candidates(&self, toks: &[Token]) -> Vec<Cand> {
        let n = toks.len();
        let mut depth = vec![0i32; n + 1];
        for (i, t) in toks.iter().enumerate() {
            depth[i + 1] = depth[i]
                + match t.text.as_str() {
                    "(" | "[" | "{" => 1,
                    ")" | "]" | "}" => -1,
                    _ => 0,
                };
        }
        let limit = (0..=n).map(|i| (i + 1..=n).find(|&k| depth[k] < depth[i]).unwrap_or(n + 1)).collect();
        let mut run = Run { p: self, toks, depth, limit, memo: vec![None; (n + 1) * (n + 1)] };
        run.span(0, n).to_vec()
    }

    fn atom(&self, tok: &str, out: &mut Vec<Cand>) {
        if is_int(tok) {
            if let Ok(v) = tok.parse::<i64>() {
                out.push(Cand { term: Term::int(v), prec: 0 });
            }
            return;
        }
        if let Some(name) = tok.strip_prefix('\'') {
            if !name.is_empty() {
                out.push(Cand { term: Term::qid(name), prec: 0 });
            }
            return;
        }
        if let Some(&s) = self.vars.get(tok) {
            out.push(Cand { term: Term::var(tok, s), prec: 0 });
        }
        if let Some(p) = tok.rfind(':') {
            if p > 0 {
                if let Some(s) = self.sig.sorts.get(&tok[p + 1..]) {
                    out.push(Cand { term: Term::var(&tok[..p], s), prec: 0 });
                }
            }
        }
        for sym in self.sig.named(tok) {
            if sym.arity == 0 {
                out.push(Cand { term: Term::constant(sym), prec: 0 });
            }
        }
    }
}

impl Run<'_, '_> {
    fn balanced(&self, i: usize, j: usize) -> bool {
        self.depth[j] == self.depth[i] && j < self.limit[i]
    }

    fn span(&mut self, i: usize, j: usize) -> Rc<Vec<Cand>> {
        let n = self.toks.len();
        let key = i * (n + 1) + j;
        if let Some(r) = &self.memo[key] {
            return r.clone();
        }
        // Guards against re-entry on the same span.
        self.memo[key] = Some(Rc::new(Vec::new()));
        let mut out = Vec::new();
        if j > i && self.balanced(i, j) {
            if j == i + 1 {
                self.p.atom(&self.toks[i].text, &mut out);
            }
            if j >= i + 3 && self.toks[i].is("(") && self.toks[j - 1].is(")") && self.balanced(i + 1, j - 1) {
                for c in self.span(i + 1, j - 1).iter() {
                    out.push(Cand { term: c.term.clone(), prec: 0 });
                }
            }
            let shapes = &self.p.sig.shapes;
            for (sym, items) in shapes.iter() {
                self.apply_shape(sym, items, i, j, &mut out);
            }
        }
        let mut uniq: Vec<Cand> = Vec::with_capacity(out.len());
        for c in out {
            if !uniq.iter().any(|u| u.term == c.term && u.prec == c.prec) {
                uniq.push(c);
            }
        }
        let r = Rc::new(uniq);
        self.memo[key] = Some(r.clone());
        r
    }

    fn apply_shape(&mut self, sym: &std::sync::Arc<Symbol>, items: &[MixItem], i: usize, j: usize, out: &mut Vec<Cand>) {
        if let Some(MixItem::Tok(t)) = items.first() {
            if !self.toks[i].is(t) {
                return;
            }
        }
        if let Some(MixItem::Tok(t)) = items.last() {
            if !self.toks[j - 1].is(t) {
                return;
            }
        }
        if items.len() > j - i {
            return;
        }
        let mut splits = Vec::new();
        let mut holes = Vec::new();
        self.fit(items, 0, i, j, &mut holes, &mut splits);
        if splits.is_empty() {
            return;
        }
        let p = sym.prec;
        let mixfix = sym.mixfix().is_some();
        let last = items.len() - 1;
        let infix = matches!(items.first(), Some(MixItem::Hole)) && matches!(items.last(), Some(MixItem::Hole));
        // Precedence bound for each hole, in order.
        let mut bounds = Vec::new();
        for (k, it) in items.iter().enumerate() {
            if let MixItem::Hole = it {
                let b = if !mixfix {
                    u32::MAX
                } else if k == 0 {
                    p
                } else if k == last {
                    if infix {
                        p.saturating_sub(1)
                    } else {
                        p
                    }
                } else {
                    u32::MAX
                };
                bounds.push(b);
            }
        }
        for split in splits {
            let mut lists = Vec::with_capacity(split.len());
            for (h, &(a, b)) in split.iter().enumerate() {
                let cands: Vec<Cand> = self.span(a, b).iter().filter(|c| c.prec <= bounds[h]).cloned().collect();
                if cands.is_empty() {
                    break;
                }
                lists.push(cands);
            }
            if lists.len() != split.len() {
                continue;
            }
            let mut idx = vec![0usize; lists.len()];
            loop {
                let args: Vec<Term> = idx.iter().enumerate().map(|(h, &k)| lists[h][k].term.clone()).collect();
                let sorts: Vec<SortId> = args.iter().map(|a| a.sort()).collect();
                if sym.kinds_fit(&sorts) {
                    out.push(Cand { term: Term::app(sym, args), prec: if mixfix { p } else { 0 } });
                }
                let mut h = 0;
                while h < idx.len() {
                    idx[h] += 1;
                    if idx[h] < lists[h].len() {
                        break;
                    }
                    idx[h] = 0;
                    h += 1;
                }
                if h == idx.len() {
                    break;
                }
            }
        }
    }

    /// Enumerates the ways `items[k..]` covers `toks[pos..j]`.
    fn fit(&self, items: &[MixItem], k: usize, pos: usize, j: usize, holes: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if k == items.len() {
            if pos == j {
                out.push(holes.clone());
            }
            return;
        }
        if pos >= j {
            return;
        }
        match &items[k] {
            MixItem::Tok(t) => {
                if self.toks[pos].is(t) {
                    self.fit(items, k + 1, pos + 1, j, holes, out);
                }
            }
            MixItem::Hole => {
                // Items after this hole need at least one token each.
                let rest = items.len() - k - 1;
                match items.get(k + 1) {
                    None => {
                        if self.balanced(pos, j) {
                            holes.push((pos, j));
                            out.push(holes.clone());
                            holes.pop();
                        }
                    }
                    Some(next) => {
                        for e in (pos + 1)..=(j - rest) {
                            if let MixItem::Tok(t) = next {
                                if !self.toks[e].is(t) {
                                    continue;
                                }
                            }
                            if !self.balanced(pos, e) {
                                continue;
                            }
                            holes.push((pos, e));
                            self.fit(items, k + 1, e, j, holes, out);
                            holes.pop();
                        }
                    }
                }
            }
        }
    }
}
