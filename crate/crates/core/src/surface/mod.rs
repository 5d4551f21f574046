//! A small human-writable syntax over the core calculus.
//!
//! ```text
//! program  ::= stmts
//! stmts    ::= (stmt (sep stmt)*)?          sep is `;` or a line break
//! stmt     ::= val x = expr
//!            | atomic x <- postfix { stmts }
//!            | expr
//! expr     ::= \x:type. expr | app (! (app | \x:type. expr))*
//! app      ::= postfix postfix*
//! postfix  ::= atom (.mutate())*
//! atom     ::= x | () | ( expr ) | { stmts } | new p | new c | bestow postfix
//! type     ::= p | c | B(p) | Unit | type -> type | ( type )
//! ```
//!
//! `λ` may be written for `\`. Line breaks inside parentheses are ignored
//! and `//` starts a comment. Names must be bound before use, and numeric
//! literals are rejected since actor ids and locations only exist at run
//! time. Sends associate to the left; `a ! f ! g` sends `f` then `g`.

mod ast;
mod elab;
mod parser;
mod print;

pub use ast::{contains_atomic, AtomicBlock, SExpr, Stmt, SurfaceProgram};
pub use elab::{desugar_atomic, elaborate, elaborate_with, DesugarError, ElabConfig, Elaborated};
pub use parser::{parse, parse_with, Diagnostic, ParseOptions, Severity};
pub use print::{print, print_expr, print_type};

/// Default cap on statements per `atomic` block.
pub const DEFAULT_BATCH_CAP: usize = 64;
