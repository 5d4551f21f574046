//! Elaboration of surface programs into closed core expressions.
//!
//! `val x = e; rest` becomes `(λx:τ. rest) e` where `τ` is inferred, or a
//! substitution when `e` is a function literal. Statements in sequence are
//! chained the same way through a fresh unused binder. A send whose message
//! is not a value is eta-expanded to `λm:p. e' m`, which evaluates `e'`
//! on the receiving side.

use std::collections::BTreeSet;

use thiserror::Error;

use super::ast::{contains_atomic, AtomicBlock, SExpr, Stmt, SurfaceProgram};
use crate::heap::Heap;
use crate::syntax::{fresh_name, Expr, Name, Type, Value};
use crate::typeck::{typecheck, TypeEnv};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DesugarError {
    #[error("atomic block on `{name}` contains another atomic block")]
    NestedAtomic { name: Name },
    #[error("atomic block target has type {ty}, which is not active")]
    NonActiveTarget { ty: Type },
    #[error("atomic block has {len} statements, more than the cap of {cap}")]
    BatchTooLarge { len: usize, cap: usize },
}

#[derive(Clone, Debug)]
pub struct ElabConfig {
    pub batch_cap: usize,
}

impl Default for ElabConfig {
    fn default() -> ElabConfig {
        ElabConfig { batch_cap: super::DEFAULT_BATCH_CAP }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Elaborated {
    pub expr: Expr,
    pub heap: Heap,
}

pub fn elaborate(p: &SurfaceProgram) -> Result<Elaborated, DesugarError> {
    elaborate_with(p, &ElabConfig::default())
}

pub fn elaborate_with(p: &SurfaceProgram, config: &ElabConfig) -> Result<Elaborated, DesugarError> {
    let mut el = Elaborator::new(config, &p.stmts);
    let expr = contract_eta(el.stmts(&TypeEnv::new(), &p.stmts)?);
    let heap = Heap::inject(expr.clone());
    Ok(Elaborated { expr, heap })
}

/// `target ! (λthis:p. body)` with sends to the block's name applied to
/// `this` directly.
pub fn desugar_atomic(block: &AtomicBlock, env: &TypeEnv, config: &ElabConfig) -> Result<Expr, DesugarError> {
    let mut el = Elaborator::new(config, &block.body);
    el.atomic(env, block).map(contract_eta)
}

struct Elaborator<'a> {
    config: &'a ElabConfig,
    /// Every name written in the source, so generated names never clash.
    taken: BTreeSet<Name>,
    counter: usize,
}

impl<'a> Elaborator<'a> {
    fn new(config: &'a ElabConfig, stmts: &[Stmt]) -> Elaborator<'a> {
        let mut taken = BTreeSet::new();
        collect_names(stmts, &mut taken);
        Elaborator { config, taken, counter: 0 }
    }

    fn fresh(&mut self, prefix: &str) -> Name {
        loop {
            let name: Name = format!("{prefix}{}", self.counter).into();
            self.counter += 1;
            if self.taken.insert(name.clone()) {
                return name;
            }
        }
    }

    fn stmts(&mut self, env: &TypeEnv, stmts: &[Stmt]) -> Result<Expr, DesugarError> {
        let Some((first, rest)) = stmts.split_first() else {
            return Ok(Expr::unit());
        };
        match first {
            Stmt::Val { name, expr } => {
                let e = self.expr(env, expr)?;
                if let Expr::Val(v @ Value::Lambda { .. }) = &e {
                    let ty = typecheck(env, &e).unwrap_or(Type::Unit);
                    let body = self.stmts(&env.extend(name.clone(), ty), rest)?;
                    return Ok(body.subst(name, v));
                }
                let ty = infer(env, &e);
                let body = self.stmts(&env.extend(name.clone(), ty.clone()), rest)?;
                Ok(Expr::app(Expr::Val(Value::Lambda { param: name.clone(), ty, body: Box::new(body) }), e))
            }
            Stmt::Atomic(block) => {
                let e = self.atomic(env, block)?;
                self.sequence(env, e, rest)
            }
            Stmt::Expr(expr) => {
                let e = self.expr(env, expr)?;
                self.sequence(env, e, rest)
            }
        }
    }

    fn sequence(&mut self, env: &TypeEnv, e: Expr, rest: &[Stmt]) -> Result<Expr, DesugarError> {
        if rest.is_empty() {
            return Ok(e);
        }
        let ty = infer(env, &e);
        let k = self.fresh("_");
        let body = self.stmts(&env.extend(k.clone(), ty.clone()), rest)?;
        Ok(Expr::app(Expr::Val(Value::Lambda { param: k, ty, body: Box::new(body) }), e))
    }

    fn expr(&mut self, env: &TypeEnv, e: &SExpr) -> Result<Expr, DesugarError> {
        Ok(match e {
            SExpr::Var(x) => Expr::Var(x.clone()),
            SExpr::Unit => Expr::unit(),
            SExpr::NewPassive => Expr::NewPassive,
            SExpr::NewActor => Expr::NewActor,
            SExpr::Lambda { param, ty, body } => {
                let body = self.expr(&env.extend(param.clone(), ty.clone()), body)?;
                Expr::Val(Value::Lambda { param: param.clone(), ty: ty.clone(), body: Box::new(body) })
            }
            SExpr::App(f, a) => Expr::app(self.expr(env, f)?, self.expr(env, a)?),
            SExpr::Send(t, m) => {
                let target = self.expr(env, t)?;
                let msg = match self.expr(env, m)? {
                    Expr::Val(v @ Value::Lambda { .. }) => v,
                    other => {
                        let x = self.fresh("_m");
                        Value::Lambda {
                            param: x.clone(),
                            ty: Type::Passive,
                            body: Box::new(Expr::app(other, Expr::Var(x))),
                        }
                    }
                };
                Expr::send(target, msg)
            }
            SExpr::Mutate(x) => Expr::mutate(self.expr(env, x)?),
            SExpr::Bestow(x) => Expr::bestow(self.expr(env, x)?),
            SExpr::Block(stmts) => self.stmts(env, stmts)?,
        })
    }

    fn atomic(&mut self, env: &TypeEnv, block: &AtomicBlock) -> Result<Expr, DesugarError> {
        if contains_atomic(&block.body) {
            return Err(DesugarError::NestedAtomic { name: block.name.clone() });
        }
        if block.body.len() > self.config.batch_cap {
            return Err(DesugarError::BatchTooLarge { len: block.body.len(), cap: self.config.batch_cap });
        }
        let target = self.expr(env, &block.target)?;
        if let Ok(ty) = typecheck(env, &target) {
            if !ty.is_active() {
                return Err(DesugarError::NonActiveTarget { ty });
            }
        }
        let this: Name =
            if self.taken.contains("this") { fresh_name("this", |x| self.taken.contains(x)) } else { "this".into() };
        self.taken.insert(this.clone());
        let body: Vec<Stmt> = rewrite_stmts(&block.body, &block.name, &this);
        let body = self.stmts(&env.restrict_active().extend(this.clone(), Type::Passive), &body)?;
        Ok(Expr::send(target, Value::Lambda { param: this, ty: Type::Passive, body: Box::new(body) }))
    }
}

/// Type of `e`, or Unit when it does not typecheck; the error resurfaces
/// when the elaborated program is checked.
fn infer(env: &TypeEnv, e: &Expr) -> Type {
    typecheck(env, e).unwrap_or(Type::Unit)
}

fn collect_names(stmts: &[Stmt], out: &mut BTreeSet<Name>) {
    for s in stmts {
        match s {
            Stmt::Val { name, expr } => {
                out.insert(name.clone());
                collect_expr_names(expr, out);
            }
            Stmt::Atomic(b) => {
                out.insert(b.name.clone());
                collect_expr_names(&b.target, out);
                collect_names(&b.body, out);
            }
            Stmt::Expr(e) => collect_expr_names(e, out),
        }
    }
}

fn collect_expr_names(e: &SExpr, out: &mut BTreeSet<Name>) {
    match e {
        SExpr::Var(x) => {
            out.insert(x.clone());
        }
        SExpr::Unit | SExpr::NewPassive | SExpr::NewActor => {}
        SExpr::Lambda { param, body, .. } => {
            out.insert(param.clone());
            collect_expr_names(body, out);
        }
        SExpr::App(a, b) | SExpr::Send(a, b) => {
            collect_expr_names(a, out);
            collect_expr_names(b, out);
        }
        SExpr::Mutate(x) | SExpr::Bestow(x) => collect_expr_names(x, out),
        SExpr::Block(stmts) => collect_names(stmts, out),
    }
}

/// Replaces `x ! m` by `m this` and other uses of `x` by `this`, up to
/// the first rebinding of `x`.
fn rewrite_stmts(stmts: &[Stmt], x: &Name, this: &Name) -> Vec<Stmt> {
    let mut out = Vec::with_capacity(stmts.len());
    let mut shadowed = false;
    for s in stmts {
        if shadowed {
            out.push(s.clone());
            continue;
        }
        out.push(match s {
            Stmt::Val { name, expr } => {
                shadowed = name == x;
                Stmt::Val { name: name.clone(), expr: rewrite(expr, x, this) }
            }
            Stmt::Atomic(b) => Stmt::Atomic(AtomicBlock {
                name: b.name.clone(),
                target: rewrite(&b.target, x, this),
                body: if b.name == *x { b.body.clone() } else { rewrite_stmts(&b.body, x, this) },
            }),
            Stmt::Expr(e) => Stmt::Expr(rewrite(e, x, this)),
        });
    }
    out
}

fn rewrite(e: &SExpr, x: &Name, this: &Name) -> SExpr {
    match e {
        SExpr::Var(y) if y == x => SExpr::Var(this.clone()),
        SExpr::Var(_) | SExpr::Unit | SExpr::NewPassive | SExpr::NewActor => e.clone(),
        SExpr::Send(t, m) if matches!(&**t, SExpr::Var(y) if y == x) => {
            SExpr::app(rewrite(m, x, this), SExpr::Var(this.clone()))
        }
        SExpr::Send(t, m) => SExpr::send(rewrite(t, x, this), rewrite(m, x, this)),
        SExpr::Lambda { param, .. } if param == x => e.clone(),
        SExpr::Lambda { param, ty, body } => {
            SExpr::Lambda { param: param.clone(), ty: ty.clone(), body: Box::new(rewrite(body, x, this)) }
        }
        SExpr::App(f, a) => SExpr::app(rewrite(f, x, this), rewrite(a, x, this)),
        SExpr::Mutate(y) => SExpr::mutate(rewrite(y, x, this)),
        SExpr::Bestow(y) => SExpr::bestow(rewrite(y, x, this)),
        SExpr::Block(stmts) => SExpr::Block(rewrite_stmts(stmts, x, this)),
    }
}

/// Collapses `λm:p. (λy:p. e) m` back to `λy:p. e`, undoing eta wrappers
/// whose message turned out to be a literal after `val` inlining.
fn contract_eta(e: Expr) -> Expr {
    match e {
        Expr::Var(_) | Expr::NewPassive | Expr::NewActor => e,
        Expr::Val(v) => Expr::Val(contract_value(v)),
        Expr::App(f, a) => Expr::app(contract_eta(*f), contract_eta(*a)),
        Expr::Send(t, m) => Expr::send(contract_eta(*t), contract_message(contract_value(m))),
        Expr::Mutate(x) => Expr::mutate(contract_eta(*x)),
        Expr::Bestow(x) => Expr::bestow(contract_eta(*x)),
    }
}

fn contract_value(v: Value) -> Value {
    match v {
        Value::Lambda { param, ty, body } => Value::Lambda { param, ty, body: Box::new(contract_eta(*body)) },
        other => other,
    }
}

fn contract_message(m: Value) -> Value {
    if let Value::Lambda { param, ty: Type::Passive, body } = &m {
        if param.starts_with("_m") {
            if let Expr::App(f, a) = &**body {
                if let (Expr::Val(inner @ Value::Lambda { ty: Type::Passive, .. }), Expr::Var(y)) = (&**f, &**a) {
                    if y == param && !Expr::Val(inner.clone()).free_vars().contains(param) {
                        return inner.clone();
                    }
                }
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::parse;
    use crate::text::parse_expr;

    fn elab(src: &str) -> Expr {
        elaborate(&parse(src).unwrap()).unwrap().expr
    }

    #[test]
    fn val_becomes_application() {
        assert_eq!(elab("val a = new c"), parse_expr("(app (fn a c unit) (new c))").unwrap());
    }

    #[test]
    fn empty_batch() {
        assert_eq!(
            elab("val a = new c; atomic x <- a { }"),
            parse_expr("(app (fn a c (send a (fn this p unit))) (new c))").unwrap()
        );
    }

    #[test]
    fn two_operation_batch() {
        let e = elab("val a = new c\natomic x <- a { x ! \\y:p. y.mutate(); x ! \\z:p. () }");
        let expected = parse_expr(
            "(app (fn a c (send a (fn this p (app (fn _0 Unit (app (fn z p unit) this)) (app (fn y p (mutate y)) this))))) (new c))",
        )
        .unwrap();
        assert_eq!(e, expected);
        assert_eq!(typecheck(&TypeEnv::new(), &e), Ok(Type::Unit));
    }

    #[test]
    fn named_messages_are_inlined() {
        let e = elab("val a = new c; val f = \\x:p. x.mutate(); a ! f");
        assert_eq!(e, parse_expr("(app (fn a c (send a (fn x p (mutate x)))) (new c))").unwrap());
    }

    #[test]
    fn general_send_is_eta_expanded() {
        let e = elab("val a = new c; val f = \\u:Unit. \\y:p. y.mutate(); a ! (f ())");
        let expected = parse_expr(
            "(app (fn a c (send a (fn _m0 p (app (app (fn u Unit (fn y p (mutate y))) unit) _m0)))) (new c))",
        )
        .unwrap();
        assert_eq!(e, expected);
        assert_eq!(typecheck(&TypeEnv::new(), &e), Ok(Type::Unit));
    }

    #[test]
    fn desugar_errors() {
        let cfg = ElabConfig::default();
        let passive = AtomicBlock { name: "x".into(), target: SExpr::NewPassive, body: vec![] };
        assert_eq!(
            desugar_atomic(&passive, &TypeEnv::new(), &cfg),
            Err(DesugarError::NonActiveTarget { ty: Type::Passive })
        );
        let inner = AtomicBlock { name: "y".into(), target: SExpr::NewActor, body: vec![] };
        let nested = AtomicBlock { name: "x".into(), target: SExpr::NewActor, body: vec![Stmt::Atomic(inner)] };
        assert!(matches!(desugar_atomic(&nested, &TypeEnv::new(), &cfg), Err(DesugarError::NestedAtomic { .. })));
        let big = AtomicBlock { name: "x".into(), target: SExpr::NewActor, body: vec![Stmt::Expr(SExpr::Unit); 3] };
        assert_eq!(
            desugar_atomic(&big, &TypeEnv::new(), &ElabConfig { batch_cap: 2 }),
            Err(DesugarError::BatchTooLarge { len: 3, cap: 2 })
        );
    }

    #[test]
    fn this_is_renamed_when_taken() {
        let e = elab("val this = new c; atomic x <- this { x ! \\y:p. () }");
        assert!(e.to_string().contains("(fn this' p"), "{e}");
    }

    #[test]
    fn bestowed_target() {
        let e = elab("val b = bestow new p; atomic x <- b { x ! \\y:p. y.mutate() }");
        assert_eq!(typecheck(&TypeEnv::new(), &e), Ok(Type::Unit));
    }
}
