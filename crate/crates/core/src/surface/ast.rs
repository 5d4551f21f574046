use crate::syntax::{Name, Type};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SurfaceProgram {
    pub stmts: Vec<Stmt>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    /// `val x = e`, scoped over the following statements.
    Val {
        name: Name,
        expr: SExpr,
    },
    Atomic(AtomicBlock),
    Expr(SExpr),
}

/// `atomic name <- target { body }`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomicBlock {
    pub name: Name,
    pub target: SExpr,
    pub body: Vec<Stmt>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SExpr {
    Var(Name),
    Unit,
    Lambda {
        param: Name,
        ty: Type,
        body: Box<SExpr>,
    },
    App(Box<SExpr>, Box<SExpr>),
    /// `e ! e'`; the message need not be a literal function.
    Send(Box<SExpr>, Box<SExpr>),
    Mutate(Box<SExpr>),
    NewPassive,
    NewActor,
    Bestow(Box<SExpr>),
    /// `{ s1; s2; ... }`, valued by its last statement.
    Block(Vec<Stmt>),
}

impl SExpr {
    pub fn var(x: &str) -> SExpr {
        SExpr::Var(x.into())
    }

    pub fn app(f: SExpr, a: SExpr) -> SExpr {
        SExpr::App(Box::new(f), Box::new(a))
    }

    pub fn send(t: SExpr, m: SExpr) -> SExpr {
        SExpr::Send(Box::new(t), Box::new(m))
    }

    pub fn mutate(e: SExpr) -> SExpr {
        SExpr::Mutate(Box::new(e))
    }

    pub fn bestow(e: SExpr) -> SExpr {
        SExpr::Bestow(Box::new(e))
    }

    pub fn lambda(param: &str, ty: Type, body: SExpr) -> SExpr {
        SExpr::Lambda { param: param.into(), ty, body: Box::new(body) }
    }
}

/// Whether an `atomic` block occurs anywhere inside the statements.
pub fn contains_atomic(stmts: &[Stmt]) -> bool {
    stmts.iter().any(|s| match s {
        Stmt::Atomic(_) => true,
        Stmt::Val { expr, .. } | Stmt::Expr(expr) => expr_contains_atomic(expr),
    })
}

fn expr_contains_atomic(e: &SExpr) -> bool {
    match e {
        SExpr::Var(_) | SExpr::Unit | SExpr::NewPassive | SExpr::NewActor => false,
        SExpr::Lambda { body, .. } => expr_contains_atomic(body),
        SExpr::App(a, b) | SExpr::Send(a, b) => expr_contains_atomic(a) || expr_contains_atomic(b),
        SExpr::Mutate(e) | SExpr::Bestow(e) => expr_contains_atomic(e),
        SExpr::Block(stmts) => contains_atomic(stmts),
    }
}
