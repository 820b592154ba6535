//! Rewriting logic with a strategy language: terms modulo structural
//! axioms, equational reduction, rule rewriting and a strategy machine
//! with a denotational reference evaluator.

pub mod builtins;
pub mod corpus;
pub mod elab;
pub mod eqeng;
pub mod error;
pub mod lexer;
pub mod matcher;
pub mod module;
pub mod oracle;
pub mod session;
pub mod sort;
pub mod strategy;
pub mod stratparse;
pub mod subst;
pub mod syntax;
pub mod term;
pub mod termparse;
pub mod vm;

pub use error::{Error, Result};
