//! Strategy expressions and their printer.

use std::fmt;
use std::sync::Arc;

use crate::module::Cond;
use crate::term::Term;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MatchMode {
    /// Match at the top, the whole subject.
    Match,
    /// Match at the top, with extension for assoc and comm operators.
    XMatch,
    /// Match anywhere.
    AMatch,
}

impl MatchMode {
    pub fn keyword(self) -> &'static str {
        match self {
            MatchMode::Match => "match",
            MatchMode::XMatch => "xmatch",
            MatchMode::AMatch => "amatch",
        }
    }
}

pub type StratRef = Arc<Strat>;

#[derive(Clone, Debug)]
pub struct RuleApp {
    pub label: String,
    /// Initial bindings `x <- t`, by variable name.
    pub subst: Vec<(String, Term)>,
    /// Strategies for the rewriting condition fragments.
    pub strats: Vec<StratRef>,
    pub top: bool,
}

#[derive(Clone, Debug)]
pub enum Strat {
    Idle,
    Fail,
    All,
    Rule(RuleApp),
    Test { mode: MatchMode, pattern: Term, cond: Vec<Cond> },
    Seq(StratRef, StratRef),
    Alt(StratRef, StratRef),
    Star(StratRef),
    Plus(StratRef),
    Cond(StratRef, StratRef, StratRef),
    OrElse(StratRef, StratRef),
    Not(StratRef),
    Bang(StratRef),
    Try(StratRef),
    TestOp(StratRef),
    One(StratRef),
    MatchRew { mode: MatchMode, pattern: Term, cond: Vec<Cond>, subs: Vec<(Term, StratRef)> },
    Call { name: String, args: Vec<Term> },
}

impl Strat {
    pub fn seq(a: StratRef, b: StratRef) -> StratRef {
        Arc::new(Strat::Seq(a, b))
    }

    pub fn alt(a: StratRef, b: StratRef) -> StratRef {
        Arc::new(Strat::Alt(a, b))
    }

    pub fn star(a: StratRef) -> StratRef {
        Arc::new(Strat::Star(a))
    }

    pub fn cond(a: StratRef, b: StratRef, c: StratRef) -> StratRef {
        Arc::new(Strat::Cond(a, b, c))
    }

    pub fn idle() -> StratRef {
        Arc::new(Strat::Idle)
    }

    pub fn fail() -> StratRef {
        Arc::new(Strat::Fail)
    }

    pub fn rule(label: &str) -> StratRef {
        Arc::new(Strat::Rule(RuleApp { label: label.to_string(), subst: vec![], strats: vec![], top: false }))
    }

    /// True when `one` occurs anywhere in the expression.
    pub fn contains_one(&self) -> bool {
        self.any(&|s| matches!(s, Strat::One(_)))
    }

    pub fn any(&self, p: &dyn Fn(&Strat) -> bool) -> bool {
        if p(self) {
            return true;
        }
        match self {
            Strat::Seq(a, b) | Strat::Alt(a, b) | Strat::OrElse(a, b) => a.any(p) || b.any(p),
            Strat::Cond(a, b, c) => a.any(p) || b.any(p) || c.any(p),
            Strat::Star(a) | Strat::Plus(a) | Strat::Not(a) | Strat::Bang(a) | Strat::Try(a) | Strat::TestOp(a) | Strat::One(a) => a.any(p),
            Strat::Rule(r) => r.strats.iter().any(|s| s.any(p)),
            Strat::MatchRew { subs, .. } => subs.iter().any(|(_, s)| s.any(p)),
            _ => false,
        }
    }

    /// Printing level: 0 atoms, 1 postfix, 2 `;`, 3 `|`, 4 `or-else`, 5 `? :`.
    fn level(&self) -> u8 {
        match self {
            Strat::Star(_) | Strat::Plus(_) | Strat::Bang(_) => 1,
            Strat::Seq(..) => 2,
            Strat::Alt(..) => 3,
            Strat::OrElse(..) => 4,
            Strat::Cond(..) => 5,
            // Tests and matchrew carry open-ended terms; they print
            // parenthesized whenever they are an operand.
            Strat::Test { .. } | Strat::MatchRew { .. } => 6,
            _ => 0,
        }
    }
}

fn operand(f: &mut fmt::Formatter<'_>, s: &Strat, max: u8) -> fmt::Result {
    if s.level() > max {
        write!(f, "({s})")
    } else {
        write!(f, "{s}")
    }
}

pub fn write_cond(f: &mut impl fmt::Write, cond: &[Cond]) -> fmt::Result {
    for (i, c) in cond.iter().enumerate() {
        if i > 0 {
            write!(f, " /\\ ")?;
        }
        write!(f, "{c}")?;
    }
    Ok(())
}

impl fmt::Display for Strat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strat::Idle => write!(f, "idle"),
            Strat::Fail => write!(f, "fail"),
            Strat::All => write!(f, "all"),
            Strat::Rule(r) => {
                if r.top {
                    write!(f, "top(")?;
                }
                write!(f, "{}", r.label)?;
                if !r.subst.is_empty() {
                    write!(f, "[")?;
                    for (i, (v, t)) in r.subst.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{v} <- {t}")?;
                    }
                    write!(f, "]")?;
                }
                if !r.strats.is_empty() {
                    write!(f, "{{")?;
                    for (i, s) in r.strats.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{s}")?;
                    }
                    write!(f, "}}")?;
                }
                if r.top {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Strat::Test { mode, pattern, cond } => {
                write!(f, "{} {}", mode.keyword(), pattern)?;
                if !cond.is_empty() {
                    write!(f, " s.t. ")?;
                    write_cond(f, cond)?;
                }
                Ok(())
            }
            Strat::Seq(a, b) => {
                operand(f, a, 2)?;
                write!(f, " ; ")?;
                operand(f, b, 2)
            }
            Strat::Alt(a, b) => {
                operand(f, a, 3)?;
                write!(f, " | ")?;
                operand(f, b, 3)
            }
            Strat::OrElse(a, b) => {
                operand(f, a, 4)?;
                write!(f, " or-else ")?;
                operand(f, b, 3)
            }
            Strat::Cond(a, b, c) => {
                operand(f, a, 4)?;
                write!(f, " ? ")?;
                operand(f, b, 4)?;
                write!(f, " : ")?;
                operand(f, c, 5)
            }
            Strat::Star(a) => {
                operand(f, a, 1)?;
                write!(f, " *")
            }
            Strat::Plus(a) => {
                operand(f, a, 1)?;
                write!(f, " +")
            }
            Strat::Bang(a) => {
                operand(f, a, 1)?;
                write!(f, " !")
            }
            Strat::Not(a) => write!(f, "not({a})"),
            Strat::Try(a) => write!(f, "try({a})"),
            Strat::TestOp(a) => write!(f, "test({a})"),
            Strat::One(a) => write!(f, "one({a})"),
            Strat::MatchRew { mode, pattern, cond, subs } => {
                let kw = match mode {
                    MatchMode::Match => "matchrew",
                    MatchMode::XMatch => "xmatchrew",
                    MatchMode::AMatch => "amatchrew",
                };
                write!(f, "{kw} {pattern}")?;
                if !cond.is_empty() {
                    write!(f, " s.t. ")?;
                    write_cond(f, cond)?;
                }
                write!(f, " by ")?;
                for (i, (v, s)) in subs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v} using ")?;
                    // A nested open-ended expression must not swallow the
                    // following pairs.
                    operand(f, s, 5)?;
                }
                Ok(())
            }
            Strat::Call { name, args } => {
                write!(f, "{name}")?;
                if !args.is_empty() {
                    let parts: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                    write!(f, "({})", parts.join(", "))?;
                }
                Ok(())
            }
        }
    }
}
