//! Concrete syntax: the AST, a lexer and parser for `.tss` files, a pretty
//! printer whose output parses back to the same AST, and grounding of
//! index-parameterized definitions.

mod ast;
mod instantiate;
mod lexer;
mod parser;
mod printer;

pub use ast::*;
pub use instantiate::{ground, ground_with, instantiate, instantiate_named, mangle, param_names};
pub use parser::{parse_process, parse_program, parse_type, parse_type_in};
pub use printer::{pretty_print, print_decl, print_pexpr, print_process, print_type};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SyntaxError {
    #[error("{line}:{col}: expected {}, found {found}", expected.join(" or "))]
    Parse { line: usize, col: usize, expected: Vec<String>, found: String },
    #[error("{pos}: unbound name `{name}`")]
    Scope { pos: Pos, name: String },
    #[error("{pos}: `{name}` takes {expected} index arguments, given {found}")]
    Arity { pos: Pos, name: String, expected: usize, found: usize },
    #[error("{pos}: {msg}")]
    Malformed { pos: Pos, msg: String },
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct EvalError(pub String);
