mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use stratum::module::Limits;
use stratum::oracle::Oracle;
use stratum::session::{parse_strategy_in, parse_term_in};
use stratum::subst::Subst;
use stratum::term::{Head, Term};
use stratum::vm::{Schedule, Vm};

use common::{GenOpts, Verdict};

/// A micro module with a strategy and subject that always terminate.
fn terminating_case(seed: u64) -> (common::Micro, Term, stratum::strategy::StratRef, String) {
    let mut r = common::rng(seed);
    let m = common::micro(&mut r);
    m.module.set_limits(Limits { eq_steps: 100_000, states: 1_000_000 });
    let text = common::strategy(&mut r, 3, &GenOpts { calls: true, divergent: false });
    let t = parse_term_in(&m.module, &common::subject(&mut r)).unwrap();
    let s = parse_strategy_in(&m.module, &text).unwrap();
    (m, t, s, text)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_grows_with_depth(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let m = common::micro(&mut r);
        let text = common::strategy(&mut r, 3, &GenOpts { calls: true, divergent: true });
        let t = parse_term_in(&m.module, &common::subject(&mut r)).unwrap();
        let s = parse_strategy_in(&m.module, &text).unwrap();
        let mut o = Oracle::new(&m.module);
        let mut prev = o.eval(&s, &Subst::new(), &t, 0).unwrap();
        for d in 1..6 {
            let next = o.eval(&s, &Subst::new(), &t, d).unwrap();
            prop_assert!(prev.leq(&next), "{text} at depth {d}");
            prev = next;
        }
    }

    #[test]
    fn final_sets_stay_put(seed in any::<u64>()) {
        let (m, t, s, text) = terminating_case(seed);
        let mut o = Oracle::new(&m.module);
        let (set, depth) = o.stable(&s, &t, 8).unwrap();
        prop_assert!(!set.bottom, "{text} never converged");
        for k in 1..=3 {
            let later = o.eval(&s, &Subst::new(), &t, depth + k).unwrap();
            prop_assert_eq!(&later.terms, &set.terms);
            prop_assert!(!later.bottom);
        }
    }

    #[test]
    fn schedules_agree(seed in any::<u64>()) {
        let (m, t, s, text) = terminating_case(seed);
        let (fair, e1) = common::run_vm(&m.module, &t, &s, Schedule::Fair);
        let (dfs, e2) = common::run_vm(&m.module, &t, &s, Schedule::DepthFirst);
        prop_assert!(e1.is_none() && e2.is_none(), "{text}: {e1:?} {e2:?}");
        prop_assert_eq!(fair, dfs, "{}", text);
    }

    #[test]
    fn continuing_loses_nothing(seed in any::<u64>(), first in 0usize..4, schedule in prop_oneof![Just(Schedule::Fair), Just(Schedule::DepthFirst)]) {
        let (m, t, s, text) = terminating_case(seed);
        let (all, _) = common::run_vm(&m.module, &t, &s, schedule);
        let mut vm = Vm::new(m.module.clone(), &t, s.clone(), schedule).unwrap();
        let head = vm.take(Some(first)).unwrap();
        let tail = vm.take(None).unwrap();
        prop_assert!(head.len() <= first);
        let mut seen = BTreeSet::new();
        for u in head.iter().chain(&tail) {
            prop_assert!(seen.insert(u.clone()), "{text}: {u} reported twice");
        }
        prop_assert_eq!(seen, all);
    }

    #[test]
    fn differential_small(seed in any::<u64>()) {
        if let Verdict::Mismatch(m) = common::differential(seed) {
            prop_assert!(false, "{}", m);
        }
    }

    #[test]
    fn combinator_identities(seed in any::<u64>()) {
        if let Err(m) = common::combinator_case(seed) {
            prop_assert!(false, "{}", m);
        }
    }

    #[test]
    fn matcher_against_brute_force(seed in any::<u64>()) {
        let m = common::match_module();
        if let Err(e) = common::matcher_case(seed, &m) {
            prop_assert!(false, "{}", e);
        }
    }

    #[test]
    fn canonical_forms_are_fixed_points(seed in any::<u64>()) {
        let m = common::match_module();
        let mut r = common::rng(seed);
        let n = r.gen_range(1..=14);
        let t = common::random_term(&mut r, &m, n, &[]);
        for u in t.subterms_postorder() {
            if let Head::App(f) = u.head() {
                let mut args = u.args().to_vec();
                prop_assert_eq!(&Term::app(f, args.clone()), &u);
                if f.comm {
                    args.shuffle(&mut r);
                    prop_assert_eq!(&Term::app(f, args), &u);
                }
            }
        }
    }

    #[test]
    fn printed_terms_parse_back(seed in any::<u64>()) {
        let m = common::match_module();
        let mut r = common::rng(seed);
        let n = r.gen_range(1..=14);
        let t = common::random_term(&mut r, &m, n, &[]);
        let text = t.to_string();
        let back = parse_term_in(&m, &text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
        prop_assert_eq!(back, t);
    }
}

#[test]
fn corpus_results_parse_back() {
    let mut s = common::corpus_session(&["15puzzle.maude", "blackboard.maude", "queens.maude"]);
    let cmds = [
        ("15PUZZLE-LOG", "srewrite in 15PUZZLE-LOG : < nil | 1 b 2 > using all ."),
        ("15PUZZLE", "srewrite in 15PUZZLE : 1 2 ; 3 b using left ; up | up ; left ."),
        ("BLACKBOARD-STRAT", "srew in BLACKBOARD-STRAT : 8 7 4 3 2 1 using play ! ."),
        ("BT-QUEENS", "dsrew [3] in BT-QUEENS : nil using solve ."),
    ];
    for (module, cmd) in cmds {
        let m = s.module(Some(module)).unwrap();
        for text in s.execute(cmd).unwrap().terms() {
            let t = parse_term_in(&m, &text).unwrap();
            assert_eq!(t.to_string(), text);
        }
    }
}
