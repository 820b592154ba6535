//! Sort tables: the subsort order, its connected components (kinds) and
//! the error sort that stands for each kind.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SortId(pub u32);

impl SortId {
    pub const BOOL: SortId = SortId(0);
    pub const ZERO: SortId = SortId(1);
    pub const NZNAT: SortId = SortId(2);
    pub const NAT: SortId = SortId(3);
    pub const NZINT: SortId = SortId(4);
    pub const INT: SortId = SortId(5);
    pub const QID: SortId = SortId(6);
    /// Sort of the hidden tuples used to match strategy call arguments.
    pub const TUPLE: SortId = SortId(7);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Sorts present in every module, in `SortId` order.
pub const BUILTIN_SORTS: [&str; 8] = ["Bool", "Zero", "NzNat", "Nat", "NzInt", "Int", "Qid", "$Tuple"];

const BUILTIN_SUBSORTS: [(SortId, SortId); 6] = [
    (SortId::ZERO, SortId::NAT),
    (SortId::NZNAT, SortId::NAT),
    (SortId::NZNAT, SortId::NZINT),
    (SortId::NAT, SortId::INT),
    (SortId::NZINT, SortId::INT),
    (SortId::ZERO, SortId::INT),
];

/// Incremental description of the sorts of a module.
#[derive(Clone, Debug, Default)]
pub struct SortBuilder {
    names: Vec<String>,
    by_name: HashMap<String, SortId>,
    edges: Vec<(SortId, SortId)>,
}

impl SortBuilder {
    pub fn new() -> Self {
        let mut b = SortBuilder::default();
        for name in BUILTIN_SORTS {
            b.add(name);
        }
        b.edges.extend(BUILTIN_SUBSORTS);
        b
    }

    pub fn add(&mut self, name: &str) -> SortId {
        if let Some(&id) = self.by_name.get(name) {
            return id;
        }
        let id = SortId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.by_name.insert(name.to_string(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<SortId> {
        self.by_name.get(name).copied()
    }

    pub fn subsort(&mut self, lo: SortId, hi: SortId) {
        if !self.edges.contains(&(lo, hi)) {
            self.edges.push((lo, hi));
        }
    }

    /// Closes the order, rejects cycles, computes kinds and appends one
    /// error sort per kind.
    pub fn finish(self) -> Result<SortTable> {
        let n = self.names.len();
        let mut leq = vec![vec![false; n]; n];
        for (i, row) in leq.iter_mut().enumerate() {
            row[i] = true;
        }
        for &(a, b) in &self.edges {
            leq[a.index()][b.index()] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if leq[i][k] {
                    for j in 0..n {
                        if leq[k][j] {
                            leq[i][j] = true;
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && leq[i][j] && leq[j][i] {
                    return Err(Error::Resolve(format!("subsort cycle between {} and {}", self.names[i], self.names[j])));
                }
            }
        }

        // Connected components of the undirected subsort graph.
        let mut comp: Vec<usize> = (0..n).collect();
        fn find(c: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while c[r] != r {
                r = c[r];
            }
            let mut y = x;
            while c[y] != r {
                let next = c[y];
                c[y] = r;
                y = next;
            }
            r
        }
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut comp, a.index()), find(&mut comp, b.index()));
            if ra != rb {
                comp[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut kind_index = HashMap::new();
        let mut kind_of = Vec::with_capacity(n);
        for i in 0..n {
            let root = find(&mut comp, i);
            let next = kind_index.len();
            let k = *kind_index.entry(root).or_insert(next);
            kind_of.push(k);
        }

        let nkinds = kind_index.len();
        let total = n + nkinds;
        let mut names = self.names;
        let mut full = vec![vec![false; total]; total];
        for i in 0..n {
            full[i][..n].copy_from_slice(&leq[i]);
        }
        let mut kind_sort = vec![SortId(0); nkinds];
        for (k, slot) in kind_sort.iter_mut().enumerate() {
            let id = n + k;
            *slot = SortId(id as u32);
            full[id][id] = true;
            kind_of.push(k);
            // Name the kind after its maximal sorts, as in `[Row]`.
            let tops: Vec<&str> = (0..n)
                .filter(|&i| kind_of[i] == k && (0..n).all(|j| j == i || kind_of[j] != k || !leq[i][j]))
                .map(|i| names[i].as_str())
                .collect();
            names.push(format!("[{}]", tops.join(",")));
            for i in 0..n {
                if kind_of[i] == k {
                    full[i][id] = true;
                }
            }
        }
        let by_name = names.iter().enumerate().map(|(i, s)| (s.clone(), SortId(i as u32))).collect();
        Ok(SortTable { names, by_name, leq: full, kind_of, kind_sort, nsorts: n })
    }
}

/// A finished, immutable sort order.
#[derive(Debug)]
pub struct SortTable {
    names: Vec<String>,
    by_name: HashMap<String, SortId>,
    leq: Vec<Vec<bool>>,
    kind_of: Vec<usize>,
    kind_sort: Vec<SortId>,
    nsorts: usize,
}

impl SortTable {
    pub fn name(&self, s: SortId) -> &str {
        &self.names[s.index()]
    }

    pub fn get(&self, name: &str) -> Option<SortId> {
        self.by_name.get(name).copied()
    }

    pub fn leq(&self, a: SortId, b: SortId) -> bool {
        self.leq[a.index()][b.index()]
    }

    pub fn kind(&self, s: SortId) -> usize {
        self.kind_of[s.index()]
    }

    pub fn same_kind(&self, a: SortId, b: SortId) -> bool {
        self.kind(a) == self.kind(b)
    }

    /// The error sort of the kind containing `s`.
    pub fn kind_sort(&self, s: SortId) -> SortId {
        self.kind_sort[self.kind(s)]
    }

    pub fn is_kind(&self, s: SortId) -> bool {
        s.index() >= self.nsorts
    }

    /// Number of proper sorts (kinds excluded).
    pub fn len(&self) -> usize {
        self.nsorts
    }

    pub fn is_empty(&self) -> bool {
        self.nsorts == 0
    }

    /// Least upper bound of two sorts, or the kind when several minimal
    /// upper bounds exist.
    pub fn join(&self, a: SortId, b: SortId) -> SortId {
        if self.leq(a, b) {
            return b;
        }
        if self.leq(b, a) {
            return a;
        }
        if !self.same_kind(a, b) {
            return self.kind_sort(a);
        }
        let uppers: Vec<usize> = (0..self.nsorts).filter(|&i| self.leq[a.index()][i] && self.leq[b.index()][i]).collect();
        let minimal: Vec<usize> = uppers.iter().copied().filter(|&i| uppers.iter().all(|&j| j == i || !self.leq[j][i])).collect();
        match minimal.as_slice() {
            [one] => SortId(*one as u32),
            _ => self.kind_sort(a),
        }
    }
}

impl fmt::Display for SortId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn puzzle() -> SortTable {
        let mut b = SortBuilder::new();
        let tile = b.add("Tile");
        let row = b.add("Row");
        let puzzle = b.add("Puzzle");
        b.subsort(SortId::NAT, tile);
        b.subsort(tile, row);
        b.subsort(row, puzzle);
        b.finish().unwrap()
    }

    #[test]
    fn closure_and_kinds() {
        let t = puzzle();
        let tile = t.get("Tile").unwrap();
        let puzzle = t.get("Puzzle").unwrap();
        assert!(t.leq(SortId::NZNAT, puzzle));
        assert!(!t.leq(puzzle, tile));
        assert!(t.same_kind(SortId::INT, tile));
        assert!(!t.same_kind(SortId::BOOL, tile));
        let k = t.kind_sort(tile);
        assert!(t.is_kind(k));
        assert!(t.leq(tile, k));
        assert_eq!(t.name(t.kind_sort(SortId::BOOL)), "[Bool]");
    }

    #[test]
    fn cycles_are_rejected() {
        let mut b = SortBuilder::new();
        let a = b.add("A");
        let c = b.add("B");
        b.subsort(a, c);
        b.subsort(c, a);
        assert!(b.finish().is_err());
    }

    #[test]
    fn join_of_incomparable_sorts() {
        let t = puzzle();
        assert_eq!(t.join(SortId::ZERO, SortId::NZNAT), SortId::NAT);
        let tile = t.get("Tile").unwrap();
        assert_eq!(t.join(SortId::NAT, tile), tile);
    }
}
