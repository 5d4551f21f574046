//! Canonical printing of surface programs. The output reparses to the same
//! tree.

use std::fmt::Write;

use super::ast::{SExpr, Stmt, SurfaceProgram};
use crate::syntax::Type;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Pos {
    /// May extend to the right: statement, binding, lambda body.
    Tail,
    SendLhs,
    SendRhs,
    AppFun,
    AppArg,
    PostfixBase,
    BestowArg,
    AtomicTarget,
}

pub fn print(p: &SurfaceProgram) -> String {
    let mut out = String::new();
    for (i, s) in p.stmts.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        stmt(&mut out, s);
    }
    out
}

pub fn print_expr(e: &SExpr) -> String {
    let mut out = String::new();
    expr(&mut out, e, Pos::Tail);
    out
}

fn stmt(out: &mut String, s: &Stmt) {
    match s {
        Stmt::Val { name, expr: e } => {
            let _ = write!(out, "val {name} = ");
            expr(out, e, Pos::Tail);
        }
        Stmt::Atomic(b) => {
            let _ = write!(out, "atomic {} <- ", b.name);
            expr(out, &b.target, Pos::AtomicTarget);
            out.push(' ');
            block(out, &b.body);
        }
        Stmt::Expr(e) => expr(out, e, Pos::Tail),
    }
}

fn block(out: &mut String, stmts: &[Stmt]) {
    if stmts.is_empty() {
        out.push_str("{ }");
        return;
    }
    out.push_str("{ ");
    for (i, s) in stmts.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        stmt(out, s);
    }
    out.push_str(" }");
}

pub fn print_type(t: &Type) -> String {
    match t {
        Type::Passive => "p".into(),
        Type::Actor => "c".into(),
        Type::Bestowed => "B(p)".into(),
        Type::Unit => "Unit".into(),
        Type::Arrow(a, b) => {
            let dom = if matches!(**a, Type::Arrow(..)) { format!("({})", print_type(a)) } else { print_type(a) };
            format!("{dom} -> {}", print_type(b))
        }
    }
}

fn needs_parens(e: &SExpr, pos: Pos) -> bool {
    match e {
        SExpr::Var(_) | SExpr::Unit | SExpr::NewPassive | SExpr::NewActor | SExpr::Block(_) | SExpr::Mutate(_) => false,
        SExpr::Lambda { .. } => pos != Pos::Tail,
        SExpr::Send(..) => !matches!(pos, Pos::Tail | Pos::SendLhs),
        SExpr::App(..) => matches!(pos, Pos::AppArg | Pos::PostfixBase | Pos::BestowArg | Pos::AtomicTarget),
        SExpr::Bestow(_) => matches!(pos, Pos::PostfixBase | Pos::AtomicTarget),
    }
}

fn expr(out: &mut String, e: &SExpr, pos: Pos) {
    if needs_parens(e, pos) {
        out.push('(');
        expr(out, e, Pos::Tail);
        out.push(')');
        return;
    }
    match e {
        SExpr::Var(x) => out.push_str(x),
        SExpr::Unit => out.push_str("()"),
        SExpr::NewPassive => out.push_str("new p"),
        SExpr::NewActor => out.push_str("new c"),
        SExpr::Lambda { param, ty, body } => {
            let _ = write!(out, "\\{param}: {}. ", print_type(ty));
            expr(out, body, Pos::Tail);
        }
        SExpr::App(f, a) => {
            expr(out, f, Pos::AppFun);
            out.push(' ');
            expr(out, a, Pos::AppArg);
        }
        SExpr::Send(t, m) => {
            expr(out, t, Pos::SendLhs);
            out.push_str(" ! ");
            expr(out, m, Pos::SendRhs);
        }
        SExpr::Mutate(x) => {
            expr(out, x, Pos::PostfixBase);
            out.push_str(".mutate()");
        }
        SExpr::Bestow(x) => {
            out.push_str("bestow ");
            expr(out, x, Pos::BestowArg);
        }
        SExpr::Block(stmts) => block(out, stmts),
    }
}
