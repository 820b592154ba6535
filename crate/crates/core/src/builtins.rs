//! Operators every module gets for free: booleans, the conditional and
//! integer arithmetic. Their evaluation happens during reduction.

use std::sync::Arc;

use crate::module::Signature;
use crate::sort::{SortId, SortTable};
use crate::term::{Builtin, OpDecl, Symbol, Term};

/// Names of prelude modules whose content is already built in.
pub const PRELUDE: [&str; 7] = ["NAT", "INT", "BOOL", "QID", "EXT-BOOL", "TRUTH-VALUE", "BOOL-OPS"];

fn decl(args: &[SortId], result: SortId) -> OpDecl {
    OpDecl { args: args.to_vec(), result }
}

/// Fresh builtin symbols over the given sort table.
pub fn symbols(sorts: &Arc<SortTable>) -> Vec<Arc<Symbol>> {
    use SortId as S;
    let b = S::BOOL;
    let bin_bool = || vec![decl(&[b, b], b)];
    let cmp = || vec![decl(&[S::INT, S::INT], b)];
    let mk = |name: &str, arity: usize, decls: Vec<OpDecl>, prec: Option<u32>, builtin: Builtin, ctor: bool| {
        Symbol::new(name, arity, decls, false, false, ctor, prec, Some(builtin), sorts.clone())
    };
    vec![
        mk("true", 0, vec![decl(&[], b)], None, Builtin::True, true),
        mk("false", 0, vec![decl(&[], b)], None, Builtin::False, true),
        mk("_==_", 2, vec![decl(&[b, b], b)], Some(51), Builtin::Equal, false),
        mk("_=/=_", 2, vec![decl(&[b, b], b)], Some(51), Builtin::NotEqual, false),
        mk("_and_", 2, bin_bool(), Some(55), Builtin::And, false),
        mk("_and-then_", 2, bin_bool(), Some(55), Builtin::AndThen, false),
        mk("_or_", 2, bin_bool(), Some(59), Builtin::Or, false),
        mk("_or-else_", 2, bin_bool(), Some(59), Builtin::OrElse, false),
        mk("not_", 1, vec![decl(&[b], b)], Some(53), Builtin::Not, false),
        mk("if_then_else_fi", 3, vec![decl(&[b, b, b], b)], None, Builtin::IfThenElse, false),
        mk("s_", 1, vec![decl(&[S::NAT], S::NZNAT)], Some(15), Builtin::Succ, true),
        mk("-_", 1, vec![decl(&[S::INT], S::INT), decl(&[S::NZINT], S::NZINT), decl(&[S::ZERO], S::ZERO)], Some(15), Builtin::Neg, false),
        mk(
            "_+_",
            2,
            vec![
                decl(&[S::INT, S::INT], S::INT),
                decl(&[S::NAT, S::NAT], S::NAT),
                decl(&[S::NZNAT, S::NAT], S::NZNAT),
                decl(&[S::NAT, S::NZNAT], S::NZNAT),
            ],
            Some(33),
            Builtin::Add,
            false,
        ),
        mk("_-_", 2, vec![decl(&[S::INT, S::INT], S::INT)], Some(33), Builtin::Sub, false),
        mk(
            "_*_",
            2,
            vec![
                decl(&[S::INT, S::INT], S::INT),
                decl(&[S::NZINT, S::NZINT], S::NZINT),
                decl(&[S::NAT, S::NAT], S::NAT),
                decl(&[S::NZNAT, S::NZNAT], S::NZNAT),
            ],
            Some(31),
            Builtin::Mul,
            false,
        ),
        mk("_quo_", 2, vec![decl(&[S::INT, S::NZINT], S::INT), decl(&[S::NAT, S::NZNAT], S::NAT)], Some(31), Builtin::Quo, false),
        mk("_rem_", 2, vec![decl(&[S::INT, S::NZINT], S::INT), decl(&[S::NAT, S::NZNAT], S::NAT)], Some(31), Builtin::Rem, false),
        mk("_<_", 2, cmp(), Some(37), Builtin::Lt, false),
        mk("_<=_", 2, cmp(), Some(37), Builtin::Le, false),
        mk("_>_", 2, cmp(), Some(37), Builtin::Gt, false),
        mk("_>=_", 2, cmp(), Some(37), Builtin::Ge, false),
    ]
}

/// One evaluation step of a strict builtin whose arguments are already
/// in normal form. Lazy operators (`and-then`, `or-else`, the
/// conditional) are handled by the reducer.
pub fn eval(sig: &Signature, f: &Symbol, args: &[Term]) -> Option<Term> {
    let op = f.builtin?;
    let ints = || -> Option<(i64, i64)> { Some((args.first()?.as_int()?, args.get(1)?.as_int()?)) };
    let boolean = |t: &Term| match t.builtin() {
        Some(Builtin::True) => Some(true),
        Some(Builtin::False) => Some(false),
        _ => None,
    };
    let int = |v: Option<i64>| v.map(Term::int);
    match op {
        Builtin::Equal => Some(sig.bool_term(args[0] == args[1])),
        Builtin::NotEqual => Some(sig.bool_term(args[0] != args[1])),
        Builtin::And => Some(sig.bool_term(boolean(&args[0])? && boolean(&args[1])?)),
        Builtin::Or => Some(sig.bool_term(boolean(&args[0])? || boolean(&args[1])?)),
        Builtin::Not => Some(sig.bool_term(!boolean(&args[0])?)),
        Builtin::Succ => int(args[0].as_int()?.checked_add(1)),
        Builtin::Neg => int(args[0].as_int()?.checked_neg()),
        Builtin::Add => ints().and_then(|(a, b)| int(a.checked_add(b))),
        Builtin::Sub => ints().and_then(|(a, b)| int(a.checked_sub(b))),
        Builtin::Mul => ints().and_then(|(a, b)| int(a.checked_mul(b))),
        // Truncating division, as in Maude's INT.
        Builtin::Quo => ints().and_then(|(a, b)| if b == 0 { None } else { int(a.checked_div(b)) }),
        Builtin::Rem => ints().and_then(|(a, b)| if b == 0 { None } else { int(a.checked_rem(b)) }),
        Builtin::Lt => ints().map(|(a, b)| sig.bool_term(a < b)),
        Builtin::Le => ints().map(|(a, b)| sig.bool_term(a <= b)),
        Builtin::Gt => ints().map(|(a, b)| sig.bool_term(a > b)),
        Builtin::Ge => ints().map(|(a, b)| sig.bool_term(a >= b)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sort::SortBuilder;

    fn sig() -> Signature {
        let st = Arc::new(SortBuilder::new().finish().unwrap());
        Signature::new(st.clone(), symbols(&st))
    }

    #[test]
    fn arithmetic() {
        let sig = sig();
        let add = sig.builtin(Builtin::Add).clone();
        let quo = sig.builtin(Builtin::Quo).clone();
        assert_eq!(eval(&sig, &add, &[Term::int(8), Term::int(7)]), Some(Term::int(15)));
        assert_eq!(eval(&sig, &quo, &[Term::int(15), Term::int(2)]), Some(Term::int(7)));
        assert_eq!(eval(&sig, &quo, &[Term::int(15), Term::int(0)]), None);
        let t = Term::app(&add, vec![Term::int(1), Term::int(2)]);
        assert_eq!(t.sort(), SortId::NZNAT);
    }

    #[test]
    fn comparisons_and_equality() {
        let sig = sig();
        let gt = sig.builtin(Builtin::Gt).clone();
        let ne = sig.builtin(Builtin::NotEqual).clone();
        assert_eq!(eval(&sig, &gt, &[Term::int(3), Term::int(2)]), Some(sig.true_term()));
        assert_eq!(eval(&sig, &ne, &[Term::int(2), Term::int(1)]), Some(sig.true_term()));
        assert_eq!(eval(&sig, &gt, &[Term::qid("a"), Term::int(2)]), None);
    }
}
