//! Splits source text into modules and top-level commands. Statements are
//! kept as token lists; their meaning is resolved during elaboration,
//! once the signature they are parsed in is known.

use crate::error::{Error, Result};
use crate::lexer::{tokenize, Token};
use crate::module::ModuleKind;

#[derive(Clone, Debug)]
pub struct Stmt {
    pub kw: Token,
    /// Tokens after the keyword, without the final period.
    pub toks: Vec<Token>,
}

#[derive(Clone, Debug)]
pub struct ModuleAst {
    pub kind: ModuleKind,
    pub name: String,
    pub line: usize,
    pub stmts: Vec<Stmt>,
}

#[derive(Clone, Debug)]
pub enum Item {
    Module(ModuleAst),
    Command(Stmt),
}

fn opener(text: &str) -> Option<(ModuleKind, &'static str)> {
    match text {
        "fmod" => Some((ModuleKind::Functional, "endfm")),
        "mod" => Some((ModuleKind::System, "endm")),
        "smod" => Some((ModuleKind::Strategy, "endsm")),
        _ => None,
    }
}

fn unsupported_block(text: &str) -> Option<&'static str> {
    match text {
        "fth" => Some("endfth"),
        "th" => Some("endth"),
        "sth" => Some("endsth"),
        "view" => Some("endv"),
        "omod" => Some("endom"),
        _ => None,
    }
}

/// Index just past the next period at bracket depth zero, starting at `i`.
pub fn statement_end(toks: &[Token], i: usize) -> Option<usize> {
    let mut depth = 0i32;
    for (k, t) in toks.iter().enumerate().skip(i) {
        match t.text.as_str() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            "." if depth <= 0 => return Some(k),
            _ => {}
        }
    }
    None
}

/// Parses a whole file. Each module or command is reported separately so
/// that one bad module does not hide the others.
pub fn parse_items(text: &str) -> Vec<Result<Item>> {
    let toks = tokenize(text);
    let mut out = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let head = &toks[i];
        if let Some((kind, end_kw)) = opener(&head.text) {
            let close = toks[i..].iter().position(|t| t.is(end_kw)).map(|p| p + i);
            let Some(close) = close else {
                out.push(Err(Error::syntax(head.line, head.col, format!("missing {end_kw}"))));
                break;
            };
            out.push(parse_module(kind, &toks[i..close]).map(Item::Module));
            i = close + 1;
            // `endm .` is tolerated.
            if toks.get(i).is_some_and(|t| t.is(".")) {
                i += 1;
            }
            continue;
        }
        if let Some(end_kw) = unsupported_block(&head.text) {
            out.push(Err(Error::syntax(
                head.line,
                head.col,
                format!("`{}` blocks are not supported; theories and views must be instantiated by hand", head.text),
            )));
            i = toks[i..].iter().position(|t| t.is(end_kw)).map(|p| p + i + 1).unwrap_or(toks.len());
            continue;
        }
        match statement_end(&toks, i + 1) {
            Some(end) => {
                out.push(Ok(Item::Command(Stmt { kw: head.clone(), toks: toks[i + 1..end].to_vec() })));
                i = end + 1;
            }
            None => {
                out.push(Err(Error::syntax(head.line, head.col, format!("command `{}` is not terminated by a period", head.text))));
                break;
            }
        }
    }
    out
}

fn parse_module(kind: ModuleKind, toks: &[Token]) -> Result<ModuleAst> {
    let head = &toks[0];
    let Some(name) = toks.get(1) else {
        return Err(Error::syntax(head.line, head.col, "missing module name"));
    };
    if toks.get(2).is_some_and(|t| t.is("{")) {
        return Err(Error::syntax(
            name.line,
            name.col,
            format!("parameterized module {} is not supported; use a monomorphized copy such as NatList", name.text),
        ));
    }
    if !toks.get(2).is_some_and(|t| t.is("is")) {
        return Err(Error::syntax(name.line, name.col, "expected `is` after the module name"));
    }
    let mut stmts = Vec::new();
    let mut i = 3;
    while i < toks.len() {
        let kw = &toks[i];
        let Some(end) = statement_end(toks, i + 1) else {
            return Err(Error::syntax(kw.line, kw.col, format!("statement `{}` is not terminated by a period", kw.text)));
        };
        stmts.push(Stmt { kw: kw.clone(), toks: toks[i + 1..end].to_vec() });
        i = end + 1;
    }
    Ok(ModuleAst { kind, name: name.text.clone(), line: head.line, stmts })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modules_and_commands() {
        let src = "fmod M is sort S . op a : -> S . endfm\nreduce a .\nsmod E is endsm";
        let items: Vec<Item> = parse_items(src).into_iter().map(|r| r.unwrap()).collect();
        assert_eq!(items.len(), 3);
        match &items[0] {
            Item::Module(m) => {
                assert_eq!(m.name, "M");
                assert_eq!(m.stmts.len(), 2);
                assert_eq!(m.stmts[1].kw.text, "op");
            }
            _ => panic!("expected a module"),
        }
        assert!(matches!(&items[1], Item::Command(s) if s.kw.text == "reduce"));
        assert!(matches!(&items[2], Item::Module(m) if m.stmts.is_empty()));
    }

    #[test]
    fn parameterized_modules_are_rejected() {
        let items = parse_items("fmod LIST{X :: TRIV} is endfm");
        let err = items[0].as_ref().unwrap_err().to_string();
        assert!(err.contains("monomorphized"), "{err}");
    }

    #[test]
    fn error_location() {
        let items = parse_items("fmod M is\n  sort S\nendfm");
        let err = items[0].as_ref().unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 2, .. }), "{err:?}");
    }
}
