//! Substitutions: finite maps from variables to terms.

use std::fmt;

use crate::term::Term;

/// A substitution kept sorted by variable so that equal maps compare and
/// hash equal.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Subst {
    binds: Vec<(Term, Term)>,
}

impl Subst {
    pub fn new() -> Self {
        Subst::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Term, Term)>) -> Self {
        let mut s = Subst::new();
        for (v, t) in pairs {
            s.bind(v, t);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.binds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.binds.is_empty()
    }

    fn position(&self, var: &Term) -> Result<usize, usize> {
        self.binds.binary_search_by(|(v, _)| v.cmp(var))
    }

    pub fn get(&self, var: &Term) -> Option<&Term> {
        self.position(var).ok().map(|i| &self.binds[i].1)
    }

    pub fn get_by_name(&self, name: &str) -> Option<&Term> {
        self.binds.iter().find(|(v, _)| v.var_name() == Some(name)).map(|(_, t)| t)
    }

    /// Binds or rebinds `var`.
    pub fn bind(&mut self, var: Term, value: Term) {
        match self.position(&var) {
            Ok(i) => self.binds[i].1 = value,
            Err(i) => self.binds.insert(i, (var, value)),
        }
    }

    pub fn unbind(&mut self, var: &Term) {
        if let Ok(i) = self.position(var) {
            self.binds.remove(i);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Term, &Term)> {
        self.binds.iter().map(|(v, t)| (v, t))
    }

    pub fn contains(&self, var: &Term) -> bool {
        self.position(var).is_ok()
    }

    /// Homomorphic replacement, re-canonicalizing every rebuilt node.
    pub fn apply(&self, t: &Term) -> Term {
        if self.binds.is_empty() || t.is_ground() {
            return t.clone();
        }
        if t.is_var() {
            return self.get(t).cloned().unwrap_or_else(|| t.clone());
        }
        let args: Vec<Term> = t.args().iter().map(|a| self.apply(a)).collect();
        if args.iter().zip(t.args()).all(|(a, b)| a == b) {
            return t.clone();
        }
        t.with_args(args)
    }

    /// `self ∘ first`: apply `first`, then `self`. Bindings of `self`
    /// outside the domain of `first` are kept.
    pub fn compose(&self, first: &Subst) -> Subst {
        let mut out = Subst::new();
        for (v, t) in &first.binds {
            out.bind(v.clone(), self.apply(t));
        }
        for (v, t) in &self.binds {
            if !first.contains(v) {
                out.bind(v.clone(), t.clone());
            }
        }
        out
    }

    /// Union that gives priority to `other` on shared variables.
    pub fn extended(&self, other: &Subst) -> Subst {
        let mut out = self.clone();
        for (v, t) in &other.binds {
            out.bind(v.clone(), t.clone());
        }
        out
    }

    pub fn restrict(&self, vars: &[Term]) -> Subst {
        Subst { binds: self.binds.iter().filter(|(v, _)| vars.contains(v)).cloned().collect() }
    }
}

impl fmt::Debug for Subst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, t)) in self.binds.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v} <- {t}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Display for Subst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}
