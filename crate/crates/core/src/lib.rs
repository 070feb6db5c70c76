//! Parser and small-step evaluator for mupuppet, the declarative core of the
//! Puppet configuration language.
//!
//! A manifest is parsed into the AST of [`syntax`], then compiled for one
//! node by repeatedly applying single evaluation rules ([`eval`]) until the
//! manifest reduces to `skip`. The result is a [`value::Catalog`]. Every step
//! is observable: the machine reports the derivation (the chain of rule
//! names) it used, and [`conformance`] provides an independent rule auditor
//! and the monotonicity checks used by the test suites.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod conformance;
pub mod env;
pub mod eval;
mod lexer;
pub mod parser;
pub mod print;
pub mod syntax;
pub mod value;

pub use env::{DefEnv, Definition, Scope, VarEnv};
pub use eval::{
    compile, CompileError, Compilation, Configuration, ErrorKind, Judgement, Limits, Machine,
    Rule, Settings, State, StepRecord, Term,
};
pub use parser::{parse_expression, parse_manifest, ParseError};
pub use syntax::{Expr, Manifest, Pos, Stmt};
pub use value::{Catalog, ResourceValue, Value};
